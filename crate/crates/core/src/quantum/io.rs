use std::io::Write;

use super::analysis::{probability_current, probability_density};
use super::grid::{QuantumParticle, Wavefunction};
use crate::error::Result;

/// CSV with header `x,re_psi,im_psi,rho,j`.
pub fn write_csv<W: Write>(wf: &Wavefunction, particle: &QuantumParticle, mut out: W) -> Result<()> {
    let rho = probability_density(wf);
    let j = probability_current(wf, particle);
    writeln!(out, "x,re_psi,im_psi,rho,j")?;
    for (i, x) in wf.grid.points().enumerate() {
        let c = wf.amplitudes[i];
        writeln!(out, "{},{},{},{},{}", x, c.re, c.im, rho[i], j[i])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{init_gaussian_packet, Grid1D};

    #[test]
    fn csv_layout() {
        let g = Grid1D::new(-10.0, 10.0, 201).unwrap();
        let wf = init_gaussian_packet(g, 0.0, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_csv(&wf, &QuantumParticle::natural(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,re_psi,im_psi,rho,j");
        assert_eq!(lines.len(), 202);
        let mid: Vec<f64> = lines[101].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(mid.len(), 5);
        assert!(mid[0].abs() < 1e-12);
        assert!((mid[3] - (mid[1].powi(2) + mid[2].powi(2))).abs() < 1e-15);
    }
}
