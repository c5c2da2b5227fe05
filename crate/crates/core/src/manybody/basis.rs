use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::potentials::Trap;

/// The `K` lowest eigenpairs of the discrete one-particle operator
/// `h = -d²/dx² + |x|^s`, with modes normalized in `L²(dx)`.
#[derive(Debug, Clone)]
pub struct SingleParticleBasis {
    grid: Arc<Grid>,
    energies: Vec<f64>,
    modes: Vec<Vec<f64>>,
}

impl SingleParticleBasis {
    pub fn new(trap: &Trap, grid: &Arc<Grid>, k: usize) -> Result<SingleParticleBasis> {
        let m = grid.points();
        if k == 0 || k > m {
            return Err(Error::InvalidParameter(format!(
                "mode count must lie in 1..={m}, got {k}"
            )));
        }
        let h = one_particle_matrix(trap, grid);
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let inv_sqrt_dx = 1.0 / grid.dx().sqrt();
        let mut energies = Vec::with_capacity(k);
        let mut modes = Vec::with_capacity(k);
        for &idx in order.iter().take(k) {
            energies.push(eig.eigenvalues[idx]);
            let mut phi: Vec<f64> = eig.eigenvectors.column(idx).iter().map(|v| v * inv_sqrt_dx).collect();
            // Sign convention: the leftmost non-negligible sample is positive.
            let peak = phi.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if let Some(first) = phi.iter().find(|v| v.abs() > 1e-3 * peak) {
                if *first < 0.0 {
                    phi.iter_mut().for_each(|v| *v = -*v);
                }
            }
            modes.push(phi);
        }
        Ok(SingleParticleBasis {
            grid: grid.clone(),
            energies,
            modes,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn modes(&self) -> &[Vec<f64>] {
        &self.modes
    }

    pub fn mode_field(&self, i: usize) -> Field {
        Field::from_real(self.grid.clone(), self.modes[i].clone()).expect("mode length matches grid")
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let dx = self.grid.dx();
        let mut worst = 0.0f64;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate() {
                let g: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() * dx;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }

    /// Coefficients `⟨φₖ, u⟩`.
    pub fn project(&self, u: &Field) -> Result<Vec<Complex64>> {
        if u.values().len() != self.grid.points() {
            return Err(Error::LengthMismatch {
                expected: self.grid.points(),
                got: u.values().len(),
            });
        }
        let dx = self.grid.dx();
        Ok(self
            .modes
            .iter()
            .map(|phi| phi.iter().zip(u.values()).map(|(p, v)| v * *p).sum::<Complex64>() * dx)
            .collect())
    }

    /// `Σ cₖ φₖ` on the grid.
    pub fn synthesize(&self, c: &[Complex64]) -> Result<Field> {
        if c.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: c.len(),
            });
        }
        let mut values = vec![Complex64::new(0.0, 0.0); self.grid.points()];
        for (ck, phi) in c.iter().zip(&self.modes) {
            for (v, p) in values.iter_mut().zip(phi) {
                *v += ck * *p;
            }
        }
        Field::new(self.grid.clone(), values)
    }
}

/// Dense symmetric matrix of `h` in the grid basis: the spectral Laplacian
/// (Nyquist mode dropped, as in the kinetic energy) plus the trap.
fn one_particle_matrix(trap: &Trap, grid: &Arc<Grid>) -> DMatrix<f64> {
    let m = grid.points();
    let nyq = grid.nyquist_index();
    let dx = grid.dx();
    let k = grid.k();
    // The kinetic block is circulant: entry (i, j) depends on i - j only.
    let column: Vec<f64> = (0..m)
        .map(|d| {
            let sep = d as f64 * dx;
            k.iter()
                .enumerate()
                .filter(|&(j, _)| j != nyq)
                .map(|(_, kk)| kk * kk * (kk * sep).cos())
                .sum::<f64>()
                / m as f64
        })
        .collect();
    let v = trap.sample(grid);
    DMatrix::from_fn(m, m, |i, j| {
        let d = i.abs_diff(j);
        column[d] + if i == j { v[i] } else { 0.0 }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_spectrum_is_odd_integers() {
        let grid = Grid::new(10.0, 256).unwrap();
        let basis = SingleParticleBasis::new(&Trap::new(2.0).unwrap(), &grid, 8).unwrap();
        for (n, e) in basis.energies().iter().enumerate() {
            assert!((e - (2 * n + 1) as f64).abs() < 1e-8, "level {n}: {e}");
        }
        assert!(basis.orthonormality_error() < 1e-10);
    }

    #[test]
    fn kinetic_matches_field_convention() {
        let grid = Grid::new(10.0, 128).unwrap();
        let basis = SingleParticleBasis::new(&Trap::new(1.0).unwrap(), &grid, 3).unwrap();
        let trap = Trap::new(1.0).unwrap().sample(&grid);
        for i in 0..3 {
            let f = basis.mode_field(i);
            let pot: f64 = f.density().iter().zip(&trap).map(|(r, v)| r * v).sum::<f64>() * grid.dx();
            assert!((f.kinetic() + pot - basis.energies()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn project_synthesize_roundtrip() {
        let grid = Grid::new(10.0, 128).unwrap();
        let basis = SingleParticleBasis::new(&Trap::new(2.0).unwrap(), &grid, 6).unwrap();
        let c: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64 * 0.1, 0.3 - i as f64 * 0.05)).collect();
        let back = basis.project(&basis.synthesize(&c).unwrap()).unwrap();
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
