//! Unit systems.
//!
//! Quantum-core tests run in natural units (ℏ = m = 1). The kaon modules use
//! MeV for energies and masses, MeV/c for momenta, metres and seconds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// ℏ in MeV·s (CODATA 2018).
pub const HBAR_MEV_S: f64 = 6.582119569e-22;
/// Speed of light in m/s.
pub const C_M_PER_S: f64 = 2.99792458e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub const fn natural() -> Self {
        PhysicalConstants { hbar: 1.0, c: 1.0 }
    }

    /// MeV, metres, seconds.
    pub const fn lab() -> Self {
        PhysicalConstants { hbar: HBAR_MEV_S, c: C_M_PER_S }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(invalid(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }

    /// ℏc in MeV·m when `self` is [`PhysicalConstants::lab`].
    pub fn hbar_c(&self) -> f64 {
        self.hbar * self.c
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::lab()
    }
}
