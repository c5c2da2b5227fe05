//! Closed-form reference objects for the sharp Gagliardo–Nirenberg–Sobolev
//! inequality in one dimension and the certification routines built on them.
//!
//! The optimizer is `Q₀(x) = (cosh πx)^{-1/2}`; it has unit mass and
//! saturates `(𝔟/6)∫|u|⁶ ≤ ‖u'‖₂²‖u‖₂⁴` with `𝔟 = 3π²/2`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{spectral_laplacian, Field, Grid};

/// Critical three-body strength `𝔟 = 3π²/2`.
pub const B_CRIT: f64 = 3.0 * PI * PI / 2.0;

/// `‖Q₀'‖₂² = π²/8`.
pub const Q0_KINETIC: f64 = PI * PI / 8.0;

/// `∫Q₀⁴ = 2/π`.
pub const Q0_QUARTIC: f64 = 2.0 / PI;

/// `∫Q₀⁶ = 1/2`.
pub const Q0_SEXTIC: f64 = 0.5;

/// `sech(πx)`, evaluated without overflow.
pub fn sech_pi(x: f64) -> f64 {
    let e = (-PI * x.abs()).exp();
    2.0 * e / (1.0 + e * e)
}

/// `Q₀(x) = (cosh πx)^{-1/2}`.
pub fn q0(x: f64) -> f64 {
    sech_pi(x).sqrt()
}

/// `Q₀'(x) = -(π/2) tanh(πx) Q₀(x)`.
pub fn q0_derivative(x: f64) -> f64 {
    -0.5 * PI * (PI * x).tanh() * q0(x)
}

/// `Q₀` sampled on `grid`.
pub fn q0_field(grid: Arc<Grid>) -> Field {
    Field::from_real_fn(grid, q0)
}

/// `ℓ^{1/2} Q₀(ℓ x)`, the unit-mass dilation used as trial state.
pub fn scaled_q0_field(grid: Arc<Grid>, ell: f64) -> Field {
    Field::from_real_fn(grid, move |x| ell.sqrt() * q0(ell * x))
}

/// `6‖u'‖₂²‖u‖₂⁴ / ∫|u|⁶`: the largest strength for which the inequality holds at `u`.
pub fn gns_quotient(u: &Field) -> Result<f64> {
    let sextic = u.lp_power(6.0);
    if sextic <= 0.0 || !sextic.is_finite() {
        return Err(Error::DegenerateField(
            "∫|u|⁶ vanishes; quotient undefined".into(),
        ));
    }
    let mass = u.recompute_mass();
    Ok(6.0 * u.kinetic() * mass * mass / sextic)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫₀^upper f(t) dt` with geometric grading towards `t = 0` so that
/// integrable power singularities `t^s` are resolved.
fn graded_integral<F: Fn(f64) -> f64>(f: F, upper: f64) -> f64 {
    let rule = gauss_legendre(24);
    let panel = |a: f64, b: f64| -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        rule.iter().map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
    };
    let mut total = 0.0;
    let mut a = 0.0;
    let mut b = 2f64.powi(-50);
    while b < 0.5 {
        total += panel(a, b);
        a = b;
        b *= 2.0;
    }
    let width = 0.25;
    let mut left = a;
    while left < upper {
        let right = (left + width).min(upper);
        total += panel(left, right);
        left = right;
    }
    total
}

/// `∫_X^∞ 2 t^s e^{-πt} dt` by its asymptotic expansion; the exponential
/// tail of `sech(πt)` beyond the quadrature window.
fn exponential_tail(s: f64, cutoff: f64) -> f64 {
    let z = PI * cutoff;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..12 {
        term *= (s - (j - 1) as f64) / z;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    2.0 * cutoff.powf(s) * (-z).exp() / PI * sum
}

const MOMENT_WINDOW: f64 = 40.0;

/// `𝒬ₛ = s∫|x|^s Q₀(x)² dx`.
pub fn trap_moment(s: f64) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "trap exponent must be positive, got {s}"
        )));
    }
    let half = graded_integral(|t| t.powf(s) * sech_pi(t), MOMENT_WINDOW)
        + exponential_tail(s, MOMENT_WINDOW);
    Ok(2.0 * s * half)
}

/// `∫|x - y|^s Q₀(x)² dx`.
pub fn shifted_trap_integral(s: f64, y: f64) -> f64 {
    let upper = MOMENT_WINDOW + y.abs();
    graded_integral(
        |t| t.powf(s) * (sech_pi(y + t) + sech_pi(y - t)),
        upper,
    )
}

/// Discrete L² norm of `-Q₀'' + c Q₀ - (3/4)π² Q₀⁵` with a chosen linear
/// coefficient `c`. The quintic equation holds for `c = π²/4`.
pub fn quintic_residual_with(grid: &Arc<Grid>, linear_coefficient: f64) -> f64 {
    let q = q0_field(grid.clone());
    let lap = spectral_laplacian(&q);
    let res: Vec<Complex64> = q
        .values()
        .iter()
        .zip(lap.values())
        .map(|(v, d)| -d + v * linear_coefficient - v * (0.75 * PI * PI * v.norm().powi(4)))
        .collect();
    Field::new(grid.clone(), res).expect("same grid").norm()
}

/// Residual of `-Q₀'' + (π²/4)Q₀ - (3/4)π²Q₀⁵ = 0` on `grid`.
pub fn quintic_residual(grid: &Arc<Grid>) -> f64 {
    quintic_residual_with(grid, PI * PI / 4.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslationRow {
    pub offset: f64,
    pub shifted: f64,
    pub centered: f64,
    pub margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TranslationReport {
    pub s: f64,
    pub rows: Vec<TranslationRow>,
}

impl TranslationReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Checks `∫|x - y|^s Q₀² > ∫|x|^s Q₀²` for every nonzero offset.
/// A zero offset passes with zero margin.
pub fn translation_inequality_check(s: f64, offsets: &[f64]) -> Result<TranslationReport> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "trap exponent must be positive, got {s}"
        )));
    }
    let centered = shifted_trap_integral(s, 0.0);
    let rows = offsets
        .iter()
        .map(|&y| {
            let shifted = if y == 0.0 {
                centered
            } else {
                shifted_trap_integral(s, y)
            };
            let margin = shifted - centered;
            TranslationRow {
                offset: y,
                shifted,
                centered,
                margin,
                passed: if y == 0.0 { margin == 0.0 } else { margin > 0.0 },
            }
        })
        .collect();
    Ok(TranslationReport { s, rows })
}

/// Closed-form constants attached to `Q₀`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GnsReference {
    pub b_crit: f64,
    pub kinetic: f64,
    pub quartic: f64,
    pub sextic: f64,
}

impl Default for GnsReference {
    fn default() -> Self {
        GnsReference {
            b_crit: B_CRIT,
            kinetic: Q0_KINETIC,
            quartic: Q0_QUARTIC,
            sextic: Q0_SEXTIC,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certification {
    pub name: String,
    pub computed: f64,
    pub reference: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    /// Tolerance is relative to `reference` rather than absolute.
    pub relative: bool,
    pub passed: bool,
}

impl Certification {
    fn absolute(name: &str, computed: f64, reference: f64, tolerance: f64) -> Self {
        let abs_error = (computed - reference).abs();
        Certification {
            name: name.into(),
            computed,
            reference,
            abs_error,
            tolerance,
            relative: false,
            passed: abs_error <= tolerance,
        }
    }

    fn relative(name: &str, computed: f64, reference: f64, tolerance: f64) -> Self {
        let abs_error = (computed - reference).abs();
        Certification {
            name: name.into(),
            computed,
            reference,
            abs_error,
            tolerance,
            relative: true,
            passed: abs_error <= tolerance * reference.abs(),
        }
    }

    fn upper_bound(name: &str, computed: f64, bound: f64) -> Self {
        Certification {
            name: name.into(),
            computed,
            reference: 0.0,
            abs_error: computed.abs(),
            tolerance: bound,
            relative: false,
            passed: computed.abs() < bound,
        }
    }
}

impl GnsReference {
    /// Recomputes every constant on `grid` and compares with the closed forms.
    pub fn certify(&self, grid: &Arc<Grid>) -> Result<Vec<Certification>> {
        let q = q0_field(grid.clone());
        let mut rows = vec![
            Certification::absolute("norm_L2(Q0)", q.norm(), 1.0, 1e-8),
            Certification::absolute("kinetic(Q0) = pi^2/8", q.kinetic(), self.kinetic, 1e-8),
            Certification::absolute("int Q0^4 = 2/pi", q.lp_power(4.0), self.quartic, 1e-8),
            Certification::absolute("int Q0^6 = 1/2", q.lp_power(6.0), self.sextic, 1e-8),
            Certification::relative("gns_quotient(Q0) = 3pi^2/2", gns_quotient(&q)?, self.b_crit, 1e-7),
            Certification::absolute("trap_moment(2) = 1/2", trap_moment(2.0)?, 0.5, 1e-8),
            Certification::upper_bound("quintic residual", quintic_residual(grid), 1e-6),
        ];
        let report = translation_inequality_check(2.0, &[-2.0, -1.0, -0.5, 0.5, 1.0, 2.0])?;
        for row in &report.rows {
            rows.push(Certification::absolute(
                &format!("translation margin s=2 y={}", row.offset),
                row.margin,
                row.offset * row.offset,
                1e-9,
            ));
        }
        Ok(rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::normalize;

    fn grid() -> Arc<Grid> {
        Grid::new(20.0, 2048).unwrap()
    }

    #[test]
    fn constants_are_exact_expressions() {
        assert!((B_CRIT - 14.804406601634037).abs() < 1e-12);
        // GNS saturation: (𝔟/6)·∫Q₀⁶ = ‖Q₀'‖².
        assert!((B_CRIT / 6.0 * Q0_SEXTIC - Q0_KINETIC).abs() < 1e-15);
    }

    #[test]
    fn q0_norms_on_grid() {
        let q = q0_field(grid());
        assert!((q.norm() - 1.0).abs() < 1e-10);
        assert!((q.kinetic() - Q0_KINETIC).abs() < 1e-8);
        assert!((q.lp_power(6.0) - 0.5).abs() < 1e-8);
        assert!((q.lp_power(4.0) - Q0_QUARTIC).abs() < 1e-8);
    }

    #[test]
    fn analytic_derivative_matches_spectral() {
        let g = grid();
        let q = q0_field(g.clone());
        let d = crate::grid::spectral_derivative(&q);
        for (v, &x) in d.values().iter().zip(g.x()) {
            assert!((v.re - q0_derivative(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn quotient_cases() {
        let g = grid();
        let q = q0_field(g.clone());
        let rel = (gns_quotient(&q).unwrap() - B_CRIT).abs() / B_CRIT;
        assert!(rel < 1e-7);
        for ell in [0.3, 3.0] {
            let v = gns_quotient(&scaled_q0_field(g.clone(), ell)).unwrap();
            assert!((v - B_CRIT).abs() / B_CRIT < 1e-7, "ell {ell}: {v}");
        }
        // Gaussian e^{-x²/2}: quotient 3π√3 by direct integration.
        let gauss = Field::from_real_fn(g.clone(), |x| (-x * x / 2.0).exp());
        let v = gns_quotient(&gauss).unwrap();
        assert!(v > B_CRIT);
        assert!((v - 3.0 * PI * 3f64.sqrt()).abs() < 1e-9);
        assert!(gns_quotient(&Field::zeros(g)).is_err());
    }

    #[test]
    fn quotient_is_scale_and_phase_invariant() {
        let g = grid();
        let u = normalize(&Field::from_real_fn(g, |x| (-x * x).exp() * (1.0 + 0.3 * x))).unwrap();
        let a = gns_quotient(&u).unwrap();
        let b = gns_quotient(&u.scaled(Complex64::from_polar(2.5, 0.7))).unwrap();
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn trap_moment_cases() {
        // 𝒬ₛ = 4s Γ(s+1) β(s+1) / π^{s+1} with the Dirichlet beta.
        assert!((trap_moment(2.0).unwrap() - 0.5).abs() < 1e-8);
        let catalan = 0.915_965_594_177_219;
        assert!((trap_moment(1.0).unwrap() - 4.0 * catalan / (PI * PI)).abs() < 1e-10);
        // β(5) = 5π⁵/1536, Γ(5) = 24.
        assert!((trap_moment(4.0).unwrap() - 1.25).abs() < 1e-10);
        let small = trap_moment(0.01).unwrap();
        assert!(small > 0.0 && small.is_finite() && small < 0.02);
        assert!(trap_moment(0.0).is_err());
    }

    #[test]
    fn quintic_residual_cases() {
        let r = quintic_residual(&grid());
        assert!(r < 1e-6, "residual {r}");
        let wrong = quintic_residual_with(&grid(), PI * PI / 2.0);
        assert!(wrong > 0.1);
        let coarse = quintic_residual(&Grid::new(20.0, 256).unwrap());
        let finer = quintic_residual(&Grid::new(20.0, 512).unwrap());
        assert!(finer < coarse);
    }

    #[test]
    fn translation_cases() {
        let rep = translation_inequality_check(2.0, &[1.0, 0.0]).unwrap();
        assert!((rep.rows[0].margin - 1.0).abs() < 1e-9);
        assert_eq!(rep.rows[1].margin, 0.0);
        assert!(rep.all_passed());
        let rep = translation_inequality_check(1.0, &[-2.0, -0.5, 0.5, 2.0]).unwrap();
        assert!(rep.rows.iter().all(|r| r.margin > 0.0));
        // Even in y.
        assert!((rep.rows[0].margin - rep.rows[3].margin).abs() < 1e-12);
        assert!((rep.rows[1].margin - rep.rows[2].margin).abs() < 1e-12);
    }

    #[test]
    fn centered_integral_matches_trap_moment() {
        for s in [0.5, 1.0, 2.0, 3.0] {
            let c = shifted_trap_integral(s, 0.0);
            assert!((s * c - trap_moment(s).unwrap()).abs() < 1e-12);
        }
    }
}
