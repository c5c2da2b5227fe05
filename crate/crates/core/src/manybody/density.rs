use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::basis::SingleParticleBasis;
use super::fock::{occupation, pack, unpack, FockBasis, Multiset, Packed};
use crate::error::{Error, Result};
use crate::gns::q0;
use crate::grid::Field;

/// A normalized real coefficient vector on an occupation basis.
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    fock: Arc<FockBasis>,
    coefficients: Vec<f64>,
}

impl ManyBodyState {
    pub fn new(fock: Arc<FockBasis>, mut coefficients: Vec<f64>) -> Result<ManyBodyState> {
        if coefficients.len() != fock.dimension() {
            return Err(Error::LengthMismatch {
                expected: fock.dimension(),
                got: coefficients.len(),
            });
        }
        let norm = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::DegenerateField("zero many-body state".into()));
        }
        coefficients.iter_mut().for_each(|c| *c /= norm);
        Ok(ManyBodyState { fock, coefficients })
    }

    /// `u^{⊗N}` for real mode coefficients `c`.
    pub fn product(fock: Arc<FockBasis>, c: &[f64]) -> Result<ManyBodyState> {
        if c.len() != fock.modes() {
            return Err(Error::LengthMismatch {
                expected: fock.modes(),
                got: c.len(),
            });
        }
        let n = fock.particles();
        let log_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
        let coefficients = fock
            .states()
            .iter()
            .map(|&s| {
                let occ = unpack(s, fock.modes());
                let weight = (0.5 * (log_fact(n) - occ.iter().map(|&k| log_fact(k)).sum::<f64>())).exp();
                occ.iter().zip(c).fold(weight, |acc, (&k, ci)| acc * ci.powi(k as i32))
            })
            .collect();
        ManyBodyState::new(fock, coefficients)
    }

    /// Uniformly random direction, reproducible from `seed`.
    pub fn random(fock: Arc<FockBasis>, seed: u64) -> Result<ManyBodyState> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = (0..fock.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
        ManyBodyState::new(fock, c)
    }

    pub fn fock(&self) -> &Arc<FockBasis> {
        &self.fock
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Symmetric wavefunction `Ψ(x₁, …, x_N)` at grid indices `points`.
    pub fn wavefunction(&self, basis: &SingleParticleBasis, points: &[usize]) -> Result<f64> {
        let n = self.fock.particles();
        if points.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: points.len(),
            });
        }
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let modes = basis.modes();
        let mut total = 0.0;
        for (&state, &psi) in self.fock.states().iter().zip(&self.coefficients) {
            if psi == 0.0 {
                continue;
            }
            let occ = unpack(state, self.fock.modes());
            let members: Vec<usize> = occ.iter().enumerate().flat_map(|(m, &k)| std::iter::repeat_n(m, k)).collect();
            let set = Multiset {
                counts: state,
                members,
            };
            let weight = (occ.iter().map(|&k| fact(k)).product::<f64>() / fact(n)).sqrt();
            let sum: f64 = set
                .orderings()
                .iter()
                .map(|t| t.iter().zip(points).map(|(&m, &x)| modes[m][x]).product::<f64>())
                .sum();
            total += psi * weight * sum;
        }
        Ok(total)
    }
}

/// Trace-normalized `γ^{(k)}` on the k-fold mode space.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub order: usize,
    pub matrix: DMatrix<f64>,
}

impl ReducedDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.matrix.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Largest eigenvalue, the condensate fraction for `k = 1`.
    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.transpose()).amax()
    }
}

fn remove(state: Packed, mode: usize) -> Option<(Packed, f64)> {
    let n = occupation(state, mode);
    (n > 0).then(|| (state - (1 << (4 * mode)), (n as f64).sqrt()))
}

fn add(state: Packed, mode: usize) -> (Packed, f64) {
    let n = occupation(state, mode);
    (state + (1 << (4 * mode)), ((n + 1) as f64).sqrt())
}

/// Partial trace of `|Ψ⟩⟨Ψ|` over `N - k` particles, normalized to trace one:
/// `γ¹_{ij} = ⟨a†_j a_i⟩ / N` and `γ²_{(ij),(kl)} = ⟨a†_k a†_l a_j a_i⟩ / (N(N-1))`.
pub fn reduced_density(state: &ManyBodyState, order: usize) -> Result<ReducedDensityMatrix> {
    let fock = state.fock();
    let n = fock.particles();
    let k = fock.modes();
    if order == 0 || order > 2 {
        return Err(Error::Ceiling(format!(
            "reduced density matrices of order {order} are not supported (1 or 2)"
        )));
    }
    if order > n {
        return Err(Error::InvalidParameter(format!("order {order} exceeds particle number {n}")));
    }
    let psi = state.coefficients();
    let lookup = |s: Packed| fock.index_of(s).map(|i| psi[i]).unwrap_or(0.0);
    let matrix = if order == 1 {
        let mut g = DMatrix::<f64>::zeros(k, k);
        for (&s, &c) in fock.states().iter().zip(psi) {
            if c == 0.0 {
                continue;
            }
            for i in 0..k {
                let Some((m, ai)) = remove(s, i) else { continue };
                for j in 0..k {
                    let (t, aj) = add(m, j);
                    // ⟨Ψ| a†_j a_i |Ψ⟩ accumulates into γ_{ij}.
                    g[(i, j)] += lookup(t) * ai * aj * c;
                }
            }
        }
        g / n as f64
    } else {
        let mut g = DMatrix::<f64>::zeros(k * k, k * k);
        for (&s, &c) in fock.states().iter().zip(psi) {
            if c == 0.0 {
                continue;
            }
            for i in 0..k {
                let Some((s1, ai)) = remove(s, i) else { continue };
                for j in 0..k {
                    let Some((s2, aj)) = remove(s1, j) else { continue };
                    for l in 0..k {
                        let (s3, al) = add(s2, l);
                        for kk in 0..k {
                            let (t, ak) = add(s3, kk);
                            g[(i * k + j, kk * k + l)] += lookup(t) * ai * aj * al * ak * c;
                        }
                    }
                }
            }
        }
        g / (n * (n - 1)) as f64
    };
    Ok(ReducedDensityMatrix { order, matrix })
}

/// Trace norm `Σ|λ|` of `γ - |c⟩⟨c|` for normalized mode coefficients `c`.
pub fn condensation_distance_coefficients(gamma: &ReducedDensityMatrix, c: &[Complex64]) -> Result<f64> {
    if gamma.order != 1 {
        return Err(Error::InvalidParameter("condensation distance needs a one-body matrix".into()));
    }
    let k = gamma.matrix.nrows();
    if c.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: c.len() });
    }
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateField("state has no overlap with the mode span".into()));
    }
    let diff = DMatrix::<Complex64>::from_fn(k, k, |i, j| {
        Complex64::new(gamma.matrix[(i, j)], 0.0) - c[i] * c[j].conj() / (norm * norm)
    });
    let eig = SymmetricEigen::new(diff);
    Ok(eig.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Trace distance of `γ¹` to the projector onto `u`, after projecting `u`
/// onto the mode span and renormalizing.
pub fn condensation_distance(gamma: &ReducedDensityMatrix, basis: &SingleParticleBasis, u: &Field) -> Result<f64> {
    condensation_distance_coefficients(gamma, &basis.project(u)?)
}

/// Distance of the one-body matrix of `Φ_N = ℓ^{N/2} Ψ_N(ℓ ·)` to the `Q₀`
/// projector. The modes are dilated to `ℓ^{1/2} φₖ(ℓx)`; the coefficients
/// are untouched. `Q₀` is projected onto the dilated span as in
/// [`condensation_distance`].
pub fn rescaled_condensation(gamma: &ReducedDensityMatrix, basis: &SingleParticleBasis, ell: f64) -> Result<f64> {
    let grid = basis.grid();
    let dx = grid.dx();
    if !(ell >= 4.0 * dx) {
        return Err(Error::UnderResolved {
            width: ell,
            min_width: 4.0 * dx,
        });
    }
    // Q₀(·/ℓ) must fit in the box: its tail at the edge stays below 1e-6.
    let edge = grid.half_width() / ell;
    if (PI * edge / 2.0).exp().recip() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "length {ell} too large for the box: Q0 is not contained in [-{0}, {0})",
            grid.half_width()
        )));
    }
    let scale = ell.powf(-0.5);
    let profile: Vec<f64> = grid.x().iter().map(|&y| scale * q0(y / ell)).collect();
    let c: Vec<Complex64> = basis
        .modes()
        .iter()
        .map(|phi| Complex64::new(phi.iter().zip(&profile).map(|(a, b)| a * b).sum::<f64>() * dx, 0.0))
        .collect();
    condensation_distance_coefficients(gamma, &c)
}

/// Occupation vector of the fully condensed state in mode `m`.
pub fn condensed_state(fock: &Arc<FockBasis>, mode: usize) -> Result<ManyBodyState> {
    let mut occ = vec![0usize; fock.modes()];
    occ[mode] = fock.particles();
    let idx = fock.index_of(pack(&occ)).expect("condensed state is in the basis");
    let mut c = vec![0.0; fock.dimension()];
    c[idx] = 1.0;
    ManyBodyState::new(fock.clone(), c)
}
