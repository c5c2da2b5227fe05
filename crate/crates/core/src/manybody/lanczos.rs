use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::Exec;

/// Settings for the restarted Lanczos iteration.
#[derive(Debug, Clone, Copy)]
pub struct LanczosConfig {
    pub seed: u64,
    /// Target for `‖Hx - θx‖₂`.
    pub tolerance: f64,
    /// Krylov dimension per cycle.
    pub krylov: usize,
    pub max_cycles: usize,
    /// Fresh random starts after a breakdown before giving up.
    pub restarts: usize,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            seed: 0x5eed,
            tolerance: 1e-9,
            krylov: 120,
            max_cycles: 60,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub matvecs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn random_unit(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    normalize(&mut v);
    v
}

enum Cycle {
    Converged(Eigenpair),
    Continue(Vec<f64>),
    Breakdown,
}

/// Lowest eigenpair of the symmetric operator `apply` on `dim` coordinates.
/// Full reorthogonalization keeps the Krylov basis orthonormal; a breakdown
/// before convergence restarts from a new seeded vector.
pub fn lowest_eigenpair<F>(dim: usize, apply: F, config: &LanczosConfig) -> Result<Eigenpair>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    if dim == 0 {
        return Err(Error::Eigensolver("empty operator".into()));
    }
    let mut matvecs = 0usize;
    for attempt in 0..=config.restarts {
        let mut start = random_unit(dim, config.seed.wrapping_add(attempt as u64));
        for _ in 0..config.max_cycles {
            match cycle(dim, &apply, &start, config, &mut matvecs) {
                Cycle::Converged(pair) => return Ok(pair),
                Cycle::Continue(next) => start = next,
                Cycle::Breakdown => break,
            }
        }
    }
    Err(Error::Eigensolver(format!(
        "Lanczos did not reach residual {:.1e} after {} restarts ({matvecs} products)",
        config.tolerance, config.restarts
    )))
}

fn cycle<F>(dim: usize, apply: &F, start: &[f64], config: &LanczosConfig, matvecs: &mut usize) -> Cycle
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m_max = config.krylov.min(dim).max(1);
    let mut basis: Vec<Vec<f64>> = vec![start.to_vec()];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j]);
        *matvecs += 1;
        let a = dot(&w, &basis[j]);
        alpha.push(a);
        // Two passes of classical Gram–Schmidt against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        let s = ritz(&alpha, &beta);
        let estimate = b * s[j].abs();
        let scale = alpha.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        let breakdown = b <= 1e-13 * scale;
        if estimate <= 0.1 * config.tolerance || breakdown || basis.len() == m_max {
            let mut x = vec![0.0; dim];
            for (coef, v) in s.iter().zip(&basis) {
                x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += coef * vi);
            }
            normalize(&mut x);
            let hx = apply(&x);
            *matvecs += 1;
            let value = dot(&hx, &x);
            let residual = hx.iter().zip(&x).map(|(h, v)| (h - value * v).powi(2)).sum::<f64>().sqrt();
            if residual <= config.tolerance {
                return Cycle::Converged(Eigenpair {
                    value,
                    vector: x,
                    residual,
                    matvecs: *matvecs,
                });
            }
            if breakdown && basis.len() < m_max {
                return Cycle::Breakdown;
            }
            return Cycle::Continue(x);
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        basis.push(w);
    }
}

/// Lowest eigenpair of the tridiagonal matrix (diagonal `alpha`, off-diagonal `beta`).
fn ritz(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let n = alpha.len();
    let t = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(t);
    let idx = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty");
    eig.eigenvectors.column(idx).iter().copied().collect()
}

/// Runs [`lowest_eigenpair`] on a sparse matrix with the given execution mode.
pub fn lowest_eigenpair_csr(
    matrix: &super::hamiltonian::CsrMatrix,
    exec: Exec,
    config: &LanczosConfig,
) -> Result<Eigenpair> {
    lowest_eigenpair(matrix.dimension(), |x| matrix.matvec(exec, x), config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let d: Vec<f64> = (0..300).map(|i| 1.0 + (i as f64 * 0.37).sin().abs() + i as f64 * 0.01).collect();
        let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let pair = lowest_eigenpair(d.len(), |x| x.iter().zip(&d).map(|(a, b)| a * b).collect(), &LanczosConfig::default()).unwrap();
        assert!((pair.value - min).abs() < 1e-10);
        assert!(pair.residual < 1e-9);
    }

    #[test]
    fn matches_dense_solver() {
        let n = 60;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let dense = SymmetricEigen::new(a.clone()).eigenvalues.min();
        let pair = lowest_eigenpair(
            n,
            |x| {
                let v = nalgebra::DVector::from_column_slice(x);
                (&a * v).iter().copied().collect()
            },
            &LanczosConfig::default(),
        )
        .unwrap();
        assert!((pair.value - dense).abs() < 1e-10);
    }

    #[test]
    fn tiny_dimension_breaks_down_cleanly() {
        let pair = lowest_eigenpair(1, |x| vec![2.5 * x[0]], &LanczosConfig::default()).unwrap();
        assert!((pair.value - 2.5).abs() < 1e-15);
    }
}
