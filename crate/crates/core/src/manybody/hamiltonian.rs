use std::sync::Arc;

use num_complex::Complex64;

use super::basis::SingleParticleBasis;
use super::fock::{binomial, multisets, transition, FockBasis, Multiset, MAX_MODES, MAX_PARTICLES};
use crate::error::{Error, Result};
use crate::functionals::{EnergyFunctional, HartreeFunctional, ModelParams};
use crate::par::{self, Exec};

/// Refuse bases larger than this.
pub const MAX_DIMENSION: usize = 200_000;
/// Refuse three-body tensors with more entries than this.
pub const MAX_TENSOR_ENTRIES: usize = 3_000_000;
/// Refuse matrices whose estimated stored entries exceed this.
pub const MAX_NONZEROS: usize = 40_000_000;

/// `⟨ij|U_N|kl⟩` and `⟨ijk|W_N|lmn⟩` in the mode basis, with bra index `i`
/// paired with ket index `k` (resp. `l`) on the same coordinate.
#[derive(Debug, Clone)]
pub struct InteractionTensors {
    modes: usize,
    two: Vec<f64>,
    three: Vec<f64>,
}

impl InteractionTensors {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn two(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let m = self.modes;
        self.two[((i * m + j) * m + k) * m + l]
    }

    pub fn three(&self, bra: [usize; 3], ket: [usize; 3]) -> f64 {
        let m = self.modes;
        let idx = ((((bra[0] * m + bra[1]) * m + bra[2]) * m + ket[0]) * m + ket[1]) * m + ket[2];
        self.three[idx]
    }

    /// Largest violation of `⟨ij|U|kl⟩ = ⟨ji|U|lk⟩`.
    pub fn two_body_swap_error(&self) -> f64 {
        let m = self.modes;
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        worst = worst.max((self.two(i, j, k, l) - self.two(j, i, l, k)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Builds both tensors from the sampled kernels of `functional`.
    pub fn assemble(exec: Exec, basis: &SingleParticleBasis, functional: &HartreeFunctional) -> Result<Self> {
        let m = basis.len();
        if m.pow(6) > MAX_TENSOR_ENTRIES {
            return Err(Error::Ceiling(format!(
                "three-body tensor would hold {} entries (ceiling {MAX_TENSOR_ENTRIES})",
                m.pow(6)
            )));
        }
        let dx = basis.grid().dx();
        let modes = basis.modes();
        // Pair products P_ab = φ_a φ_b for a <= b.
        let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a..m).map(move |b| (a, b))).collect();
        let pair_index = |a: usize, b: usize| {
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            a * m - a * (a + 1) / 2 + b
        };
        let products: Vec<Vec<f64>> = pairs
            .iter()
            .map(|&(a, b)| modes[a].iter().zip(&modes[b]).map(|(x, y)| x * y).collect())
            .collect();
        let dot = |f: &[f64], g: &[f64]| f.iter().zip(g).map(|(x, y)| x * y).sum::<f64>() * dx;

        let u = functional.two_body_samples();
        let convolved: Vec<Vec<f64>> = par::map_slice(exec, &products, |p| u.convolve(p));
        let np = pairs.len();
        let pair_two: Vec<f64> = par::map_range(exec, np * np, |idx| {
            dot(&products[idx / np], &convolved[idx % np])
        });
        let mut two = vec![0.0; m.pow(4)];
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        two[((i * m + j) * m + k) * m + l] = pair_two[pair_index(i, k) * np + pair_index(j, l)];
                    }
                }
            }
        }

        // G[p, q](x) = ∬ W(x - y, x - z) P_p(y) P_q(z); symmetric in (p, q).
        let w = functional.three_body_samples();
        let route = functional.params().route;
        let upper: Vec<(usize, usize)> = (0..np).flat_map(|p| (p..np).map(move |q| (p, q))).collect();
        let applied: Vec<Vec<f64>> = par::map_slice(exec, &upper, |&(p, q)| {
            let g = w.apply_with(Exec::Sequential, &products[p], &products[q], route);
            (0..np).map(|r| dot(&products[r], &g)).collect()
        });
        let upper_index = |p: usize, q: usize| {
            let (p, q) = if p <= q { (p, q) } else { (q, p) };
            p * np - p * (p + 1) / 2 + q
        };
        let mut three = vec![0.0; m.pow(6)];
        let raw = |bra: [usize; 3], ket: [usize; 3]| {
            applied[upper_index(pair_index(bra[1], ket[1]), pair_index(bra[2], ket[2]))]
                [pair_index(bra[0], ket[0])]
        };
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for (idx, slot) in three.iter_mut().enumerate() {
            let mut r = idx;
            let mut digits = [0usize; 6];
            for d in digits.iter_mut().rev() {
                *d = r % m;
                r /= m;
            }
            let bra = [digits[0], digits[1], digits[2]];
            let ket = [digits[3], digits[4], digits[5]];
            // Average over relabelling the three coordinates.
            let mut acc = 0.0;
            for p in PERMS {
                acc += raw([bra[p[0]], bra[p[1]], bra[p[2]]], [ket[p[0]], ket[p[1]], ket[p[2]]]);
            }
            *slot = acc / 6.0;
        }
        Ok(InteractionTensors { modes: m, two, three })
    }

    /// Restricted Hartree energy per particle of the product state with
    /// mode coefficients `c` (normalized to one).
    pub fn product_energy(&self, energies: &[f64], params: &ModelParams, c: &[Complex64]) -> f64 {
        let m = self.modes;
        let one: f64 = c.iter().zip(energies).map(|(ck, e)| ck.norm_sqr() * e).sum();
        let mut two = Complex64::new(0.0, 0.0);
        for i in 0..m {
            for j in 0..m {
                let bra = c[i].conj() * c[j].conj();
                for k in 0..m {
                    for l in 0..m {
                        two += bra * self.two(i, j, k, l) * c[k] * c[l];
                    }
                }
            }
        }
        let mut three = Complex64::new(0.0, 0.0);
        let pair: Vec<Complex64> = (0..m * m).map(|ab| c[ab / m] * c[ab % m]).collect();
        let m3 = m * m * m;
        for b in 0..m3 {
            let bra = (c[b / (m * m)] * pair[b % (m * m)]).conj();
            if bra.norm_sqr() == 0.0 {
                continue;
            }
            let row = &self.three[b * m3..(b + 1) * m3];
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, t) in row.iter().enumerate() {
                acc += *t * c[k / (m * m)] * pair[k % (m * m)];
            }
            three += bra * acc;
        }
        one + 0.5 * params.a * two.re - params.b / 6.0 * three.re
    }
}

/// Coefficients `Σ_{orderings t of B} Σ_{orderings u of A} T[t, u]` for
/// every pair of `r`-multisets, exactly symmetric in `(A, B)`.
fn multiset_table(sets: &[Multiset], element: impl Fn(&[usize], &[usize]) -> f64 + Sync + Send, exec: Exec) -> Vec<f64> {
    let n = sets.len();
    let orderings: Vec<Vec<Vec<usize>>> = sets.iter().map(|s| s.orderings()).collect();
    let rows: Vec<Vec<f64>> = par::map_range(exec, n, |b| {
        (b..n)
            .map(|a| {
                let mut acc = 0.0;
                for t in &orderings[b] {
                    for u in &orderings[a] {
                        acc += element(t, u);
                    }
                }
                acc
            })
            .collect()
    });
    let mut table = vec![0.0; n * n];
    for (b, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let a = b + off;
            table[b * n + a] = v;
            table[a * n + b] = v;
        }
    }
    table
}

/// Compressed sparse rows of a real symmetric matrix.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn dimension(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nonzeros(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|p| v[p]).unwrap_or(0.0)
    }

    /// `y = A x`, one row per task, each summed in column order.
    pub fn matvec(&self, exec: Exec, x: &[f64]) -> Vec<f64> {
        par::map_range(exec, self.dimension(), |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(|(j, a)| a * x[*j]).sum()
        })
    }

    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(|r| r.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for r in rows {
            for (c, v) in r {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { row_ptr, cols, vals }
    }

    fn transpose(&self) -> CsrMatrix {
        let n = self.dimension();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                rows[*j].push((i, *a));
            }
        }
        CsrMatrix::from_rows(rows)
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.dimension() {
            let (c, v) = self.row(i);
            for (j, a) in c.iter().zip(v) {
                worst = worst.max((a - t.get(i, *j)).abs());
            }
            let (c, v) = t.row(i);
            for (j, a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(i, *j)).abs());
            }
        }
        worst
    }

    /// `(A + Aᵀ) / 2`.
    pub fn symmetrized(&self) -> CsrMatrix {
        let t = self.transpose();
        let rows = (0..self.dimension())
            .map(|i| {
                let (ca, va) = self.row(i);
                let (cb, vb) = t.row(i);
                let (mut p, mut q) = (0, 0);
                let mut out = Vec::with_capacity(ca.len().max(cb.len()));
                while p < ca.len() || q < cb.len() {
                    let take_a = q >= cb.len() || (p < ca.len() && ca[p] <= cb[q]);
                    let take_b = p >= ca.len() || (q < cb.len() && cb[q] <= ca[p]);
                    let (col, v) = match (take_a, take_b) {
                        (true, true) => {
                            let r = (ca[p], 0.5 * (va[p] + vb[q]));
                            p += 1;
                            q += 1;
                            r
                        }
                        (true, false) => {
                            let r = (ca[p], 0.5 * va[p]);
                            p += 1;
                            r
                        }
                        _ => {
                            let r = (cb[q], 0.5 * vb[q]);
                            q += 1;
                            r
                        }
                    };
                    out.push((col, v));
                }
                out
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }
}

/// Second-quantized `H_N` on the occupation basis.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub fock: Arc<FockBasis>,
    pub matrix: CsrMatrix,
    pub tensors: Arc<InteractionTensors>,
    pub energies: Vec<f64>,
    pub params: ModelParams,
    /// `‖H - Hᵀ‖_max` before symmetrization.
    pub assembly_asymmetry: f64,
}

impl Hamiltonian {
    pub fn particles(&self) -> usize {
        self.fock.particles()
    }

    pub fn dimension(&self) -> usize {
        self.fock.dimension()
    }

    pub fn apply(&self, exec: Exec, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(exec, x)
    }

    /// `⟨ψ, Hψ⟩` for a normalized coefficient vector.
    pub fn expectation(&self, exec: Exec, psi: &[f64]) -> f64 {
        self.apply(exec, psi).iter().zip(psi).map(|(a, b)| a * b).sum()
    }
}

/// Estimated stored entries per state, used before committing memory.
pub fn estimate_nonzeros(particles: usize, modes: usize) -> f64 {
    let dim = binomial(particles + modes - 1, particles);
    let two = binomial(modes + 1, 2);
    let three = binomial(modes + 2, 3);
    let removable2 = binomial(particles.min(modes) + 1, 2);
    let removable3 = binomial(particles.min(modes) + 2, 3);
    dim * (1.0 + removable2 * two + removable3 * three).min(dim)
}

/// Assembles `H_N = Σ hᵢ + a/(N-1) Σ U_N - b/((N-1)(N-2)) Σ W_N` on
/// `N` bosons in the modes of `basis`.
pub fn build_hamiltonian(
    exec: Exec,
    params: &ModelParams,
    basis: &SingleParticleBasis,
    particles: usize,
) -> Result<Hamiltonian> {
    if !(3..=MAX_PARTICLES).contains(&particles) {
        return Err(Error::Ceiling(format!(
            "particle number {particles} outside 3..={MAX_PARTICLES}"
        )));
    }
    let k = basis.len();
    if k > MAX_MODES {
        return Err(Error::Ceiling(format!("mode count {k} exceeds {MAX_MODES}")));
    }
    let dim = binomial(particles + k - 1, particles);
    if dim > MAX_DIMENSION as f64 {
        return Err(Error::Ceiling(format!(
            "basis dimension C({}, {particles}) = {dim} exceeds {MAX_DIMENSION}",
            particles + k - 1
        )));
    }
    let estimate = estimate_nonzeros(particles, k);
    if estimate > MAX_NONZEROS as f64 {
        return Err(Error::Ceiling(format!(
            "estimated {estimate:.3e} matrix entries exceed {MAX_NONZEROS} (dimension {dim})"
        )));
    }
    let params = params.clone().with_particles(particles as f64);
    let functional = HartreeFunctional::new(&params, basis.grid())?;
    let tensors = Arc::new(InteractionTensors::assemble(exec, basis, &functional)?);
    let fock = Arc::new(FockBasis::new(particles, k)?);

    let n = particles as f64;
    let g2 = 0.5 * params.a / (n - 1.0);
    let g3 = -params.b / (6.0 * (n - 1.0) * (n - 2.0));
    let sets2 = multisets(k, 2);
    let sets3 = multisets(k, 3);
    let t2 = multiset_table(&sets2, |t, u| tensors.two(t[0], t[1], u[0], u[1]), exec);
    let t3 = multiset_table(
        &sets3,
        |t, u| tensors.three([t[0], t[1], t[2]], [u[0], u[1], u[2]]),
        exec,
    );
    let energies = basis.energies().to_vec();

    let rows: Vec<Vec<(usize, f64)>> = par::map_range(exec, fock.dimension(), |col| {
        let state = fock.state(col);
        let mut entries: Vec<(usize, f64)> = Vec::new();
        let diag: f64 = (0..k).map(|m| super::fock::occupation(state, m) as f64 * energies[m]).sum();
        entries.push((col, diag));
        for (sets, table, g) in [(&sets2, &t2, g2), (&sets3, &t3, g3)] {
            if g == 0.0 {
                continue;
            }
            let ns = sets.len();
            for (ai, removed) in sets.iter().enumerate() {
                if !removed.fits(state, k) {
                    continue;
                }
                for (bi, added) in sets.iter().enumerate() {
                    let coef = table[bi * ns + ai];
                    if coef == 0.0 {
                        continue;
                    }
                    let (target, sq) = transition(state, removed, added, k);
                    let row = fock.index_of(target).expect("transition preserves particle number");
                    entries.push((row, g * (sq as f64).sqrt() * coef));
                }
            }
        }
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (r, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r => last.1 += v,
                _ => merged.push((r, v)),
            }
        }
        merged
    });
    // Column-major assembly; the transpose is the row-major matrix.
    let raw = CsrMatrix::from_rows(rows).transpose();
    let assembly_asymmetry = raw.asymmetry();
    let matrix = raw.symmetrized();
    Ok(Hamiltonian {
        fock,
        matrix,
        tensors,
        energies,
        params,
        assembly_asymmetry,
    })
}
