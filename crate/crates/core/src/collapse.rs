//! Collapse regimes `(aₙ, bₙ) → (0, 𝔟)`, blow-up sweeps for the NLS and
//! Hartree minimizers, and power-law rate fitting.
//!
//! Lengths follow the blow-up convention: `ℓₙ → 0` is the width of the
//! minimizer, and the rescaled field is `ũₙ(x) = ℓₙ^{1/2} uₙ(ℓₙ x)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{HartreeFunctional, ModelParams, NlsFunctional};
use crate::gns::{q0_field, trap_moment, B_CRIT};
use crate::grid::{Field, Grid};
use crate::solver::{gauge_fix, is_stable, minimize_functional, Initializer, SolverConfig};

/// Which of the two length formulas drives the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `ℓₙ = (6aₙ / ((6 - ζ)π𝒬ₛ))^{1/(s+1)}`, valid for `ζ ≠ 6`.
    Amplitude,
    /// `ℓₙ = ((𝔟 - bₙ) / (ζ𝒬ₛ))^{1/(s+2)}`, valid for `ζ ≠ 0`.
    Strength,
}

/// Prescribed decay; the other coupling follows from the ratio condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Schedule {
    /// `bₙ = 𝔟 - c n^{-p}`.
    Strength { c: f64, p: f64 },
    /// `aₙ = c n^{-p}`.
    Amplitude { c: f64, p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseRegime {
    pub zeta: f64,
    pub s: f64,
    pub schedule: Schedule,
    /// Companion multiplied by `1 + d n^{-q}`; `(0, 1)` follows the ratio
    /// limit exactly.
    pub correction: (f64, f64),
    branch: Branch,
    trap_moment: f64,
}

impl CollapseRegime {
    pub fn new(zeta: f64, s: f64, schedule: Schedule) -> Result<CollapseRegime> {
        if zeta.is_infinite() {
            return Err(Error::InvalidParameter(
                "zeta = +inf (two-body decaying faster than three-body) tends to the unstable regime and is not supported".into(),
            ));
        }
        if !(zeta >= 0.0) {
            return Err(Error::InvalidParameter(format!("zeta must be nonnegative, got {zeta}")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("s must be positive, got {s}")));
        }
        let branch = match schedule {
            Schedule::Strength { c, p } => {
                if !(c > 0.0 && p > 0.0) {
                    return Err(Error::InvalidParameter("strength schedule needs c > 0 and p > 0".into()));
                }
                if zeta == 0.0 {
                    return Err(Error::InvalidParameter(
                        "branch mismatch: zeta = 0 requires the amplitude-driven branch".into(),
                    ));
                }
                Branch::Strength
            }
            Schedule::Amplitude { c, p } => {
                if !(p > 0.0) || c == 0.0 {
                    return Err(Error::InvalidParameter("amplitude schedule needs c != 0 and p > 0".into()));
                }
                if zeta == 6.0 {
                    return Err(Error::InvalidParameter(
                        "branch mismatch: zeta = 6 requires the strength-driven branch".into(),
                    ));
                }
                if c * (6.0 - zeta) <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "amplitude sign must match 6 - zeta = {}",
                        6.0 - zeta
                    )));
                }
                Branch::Amplitude
            }
        };
        Ok(CollapseRegime {
            zeta,
            s,
            schedule,
            correction: (0.0, 1.0),
            branch,
            trap_moment: trap_moment(s)?,
        })
    }

    pub fn with_correction(mut self, d: f64, q: f64) -> Self {
        self.correction = (d, q);
        self
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn trap_moment(&self) -> f64 {
        self.trap_moment
    }

    /// Exponent `(s+1)/(s+2)` of the ratio condition.
    fn ratio_exponent(&self) -> f64 {
        (self.s + 1.0) / (self.s + 2.0)
    }

    /// `lim aₙ(𝔟 - bₙ)^{-(s+1)/(s+2)} = π(6-ζ)/6 · ζ^{-(s+1)/(s+2)} 𝒬ₛ^{1/(s+2)}`
    /// (infinite at `ζ = 0`).
    pub fn ratio_limit(&self) -> f64 {
        PI * (6.0 - self.zeta) / 6.0
            * self.zeta.powf(-self.ratio_exponent())
            * self.trap_moment.powf(1.0 / (self.s + 2.0))
    }

    /// `(s+1)/s - ζ/12`, which vanishes at `ζ = 12(s+1)/s`.
    pub fn leading_coefficient(&self) -> f64 {
        (self.s + 1.0) / self.s - self.zeta / 12.0
    }

    pub fn is_degenerate(&self) -> bool {
        self.leading_coefficient().abs() < 1e-12
    }

    fn correction_factor(&self, n: f64) -> f64 {
        1.0 + self.correction.0 * n.powf(-self.correction.1)
    }

    /// `ℓ` from `aₙ` (amplitude branch).
    pub fn ell_from_amplitude(&self, a: f64) -> Option<f64> {
        let base = 6.0 * a / ((6.0 - self.zeta) * PI * self.trap_moment);
        (self.zeta != 6.0 && base > 0.0).then(|| base.powf(1.0 / (self.s + 1.0)))
    }

    /// `ℓ` from `𝔟 - bₙ` (strength branch).
    pub fn ell_from_strength(&self, delta: f64) -> Option<f64> {
        (self.zeta != 0.0 && delta > 0.0)
            .then(|| (delta / (self.zeta * self.trap_moment)).powf(1.0 / (self.s + 2.0)))
    }

    /// Couplings `(aₙ, 𝔟 - bₙ)` at step `n`.
    pub fn couplings(&self, n: f64) -> (f64, f64) {
        match self.schedule {
            Schedule::Strength { c, p } => {
                let delta = c * n.powf(-p);
                let a = self.ratio_limit() * delta.powf(self.ratio_exponent()) * self.correction_factor(n);
                (a, delta)
            }
            Schedule::Amplitude { c, p } => {
                let a = c * n.powf(-p);
                let delta = if self.zeta == 0.0 {
                    0.0
                } else {
                    (a / (self.ratio_limit() * self.correction_factor(n))).powf(1.0 / self.ratio_exponent())
                };
                (a, delta)
            }
        }
    }

    /// Couplings for which the driving branch yields width `ell`.
    pub fn couplings_for_width(&self, ell: f64) -> (f64, f64) {
        let q = self.trap_moment;
        match self.branch {
            Branch::Strength => {
                let delta = self.zeta * q * ell.powf(self.s + 2.0);
                (self.ratio_limit() * delta.powf(self.ratio_exponent()), delta)
            }
            Branch::Amplitude => {
                let a = (6.0 - self.zeta) * PI * q * ell.powf(self.s + 1.0) / 6.0;
                let delta = if self.zeta == 0.0 {
                    0.0
                } else {
                    (a / self.ratio_limit()).powf(1.0 / self.ratio_exponent())
                };
                (a, delta)
            }
        }
    }

    fn point(&self, n: f64, a: f64, delta: f64) -> Result<RegimePoint> {
        if !(a.max(0.0) + delta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "max(0, a) + (bcrit - b) must be positive at n = {n}"
            )));
        }
        let ell_a = self.ell_from_amplitude(a);
        let ell_b = self.ell_from_strength(delta);
        let ell = match self.branch {
            Branch::Amplitude => ell_a,
            Branch::Strength => ell_b,
        }
        .ok_or_else(|| Error::InvalidParameter(format!("no admissible length at n = {n}")))?;
        let branch_gap = match (ell_a, ell_b) {
            (Some(x), Some(y)) => Some((x - y).abs() / y),
            _ => None,
        };
        let limit = self.ratio_limit();
        let (ratio, ratio_residual) = if self.zeta == 0.0 {
            (f64::INFINITY, f64::NAN)
        } else {
            let r = a * delta.powf(-self.ratio_exponent());
            let res = if limit == 0.0 { r.abs() } else { (r - limit).abs() / limit.abs() };
            (r, res)
        };
        Ok(RegimePoint {
            n,
            a,
            b: B_CRIT - delta,
            delta,
            ell,
            ell_amplitude: ell_a,
            ell_strength: ell_b,
            branch_gap,
            ratio,
            ratio_limit: limit,
            ratio_residual,
            leading_coefficient: self.leading_coefficient(),
            degenerate: self.is_degenerate(),
        })
    }
}

/// One row of [`regime_sequences`].
#[derive(Debug, Clone, Serialize)]
pub struct RegimePoint {
    pub n: f64,
    pub a: f64,
    pub b: f64,
    /// `𝔟 - b`.
    pub delta: f64,
    pub ell: f64,
    pub ell_amplitude: Option<f64>,
    pub ell_strength: Option<f64>,
    /// Relative difference of the two length formulas when both apply.
    pub branch_gap: Option<f64>,
    pub ratio: f64,
    pub ratio_limit: f64,
    pub ratio_residual: f64,
    pub leading_coefficient: f64,
    /// Set when `ζ = 12(s+1)/s`, where the leading energy term vanishes.
    pub degenerate: bool,
}

pub fn regime_sequences(regime: &CollapseRegime, n_values: &[f64]) -> Result<Vec<RegimePoint>> {
    n_values
        .iter()
        .map(|&n| {
            if !(n > 0.0) {
                return Err(Error::InvalidParameter(format!("n must be positive, got {n}")));
            }
            let (a, delta) = regime.couplings(n);
            regime.point(n, a, delta)
        })
        .collect()
}

/// Grid and solver settings for a sweep. Each point is solved on
/// `[-L_ref ℓₙ, L_ref ℓₙ)` with `points` samples, so the rescaled field
/// always lives on the reference grid `[-L_ref, L_ref)`.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub reference_half_width: f64,
    pub points: usize,
    pub solver: SolverConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            reference_half_width: 20.0,
            points: 2048,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PointStatus {
    Converged,
    NotConverged,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlowupDiagnostics {
    pub n: f64,
    pub particles: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub ell: f64,
    pub energy: f64,
    /// `E / (((s+1)/s - ζ/12) 𝒬ₛ ℓˢ)`.
    pub energy_ratio: f64,
    /// Gauge-fixed `‖ũ - Q₀‖_{H¹}`.
    pub h1_distance: f64,
    /// GNS deficit `‖ũ'‖² - (𝔟/6)∫|ũ|⁶` of the rescaled field.
    pub gns_deficit: f64,
    /// `E^H / E^{NLS} - 1` (Hartree sweeps only).
    pub hartree_nls_gap: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub status: PointStatus,
    pub message: String,
    #[serde(skip)]
    pub rescaled: Option<Field>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub points: Vec<BlowupDiagnostics>,
    /// H¹ distances strictly decrease along the sweep.
    pub distance_decreasing: bool,
    /// `|ratio - 1|` strictly decreases along the sweep.
    pub ratio_approaching_one: bool,
    pub complete: bool,
}

impl SweepReport {
    fn from_points(points: Vec<BlowupDiagnostics>, requested: usize) -> SweepReport {
        let ok: Vec<&BlowupDiagnostics> = points.iter().filter(|p| p.status != PointStatus::Failed).collect();
        let distance_decreasing = ok.windows(2).all(|w| w[1].h1_distance < w[0].h1_distance);
        let ratio_approaching_one = ok
            .windows(2)
            .all(|w| (w[1].energy_ratio - 1.0).abs() < (w[0].energy_ratio - 1.0).abs());
        let complete = points.len() == requested && points.iter().all(|p| p.status == PointStatus::Converged);
        SweepReport {
            points,
            distance_decreasing,
            ratio_approaching_one,
            complete,
        }
    }
}

fn rescaled_field(u: &Field, reference: &Arc<Grid>) -> Result<Field> {
    // The physical grid is the reference grid dilated by ℓ, so ũ_j = ℓ^{1/2} u_j.
    let ell = u.grid().half_width() / reference.half_width();
    let values = gauge_fix(u).into_values().into_iter().map(|v| v * ell.sqrt()).collect();
    Field::new(reference.clone(), values)
}

/// Fields living on grids that share the point count are mapped sample by sample.
fn transplant(previous: &Field, grid: &Arc<Grid>) -> Result<Field> {
    Field::new(grid.clone(), previous.values().to_vec())
}

struct PointSetup {
    n: f64,
    particles: Option<f64>,
    a: f64,
    b: f64,
    ell: f64,
}

fn run_sweep<F>(
    regime: &CollapseRegime,
    setups: Vec<PointSetup>,
    config: &SweepConfig,
    solve: F,
) -> Result<SweepReport>
where
    F: Fn(&PointSetup, &Arc<Grid>, &SolverConfig) -> Result<(crate::solver::SolverReport, Option<f64>)>,
{
    let reference = Grid::new(config.reference_half_width, config.points)?;
    let q0 = q0_field(reference.clone());
    let requested = setups.len();
    let mut points: Vec<BlowupDiagnostics> = Vec::with_capacity(requested);
    let mut warm: Option<Field> = None;
    for setup in &setups {
        if !is_stable(setup.a, setup.b) {
            return Err(Error::Unstable(format!(
                "sweep point n = {} at (a, b) = ({}, {}) lies outside the existence region",
                setup.n, setup.a, setup.b
            )));
        }
        let grid = Grid::new(config.reference_half_width * setup.ell, config.points)?;
        let start = match &warm {
            Some(prev) => transplant(prev, &grid)?,
            None => transplant(&q0, &grid)?,
        };
        let mut solver = config.solver.clone();
        solver.initializer = Initializer::Previous(start);
        let base = BlowupDiagnostics {
            n: setup.n,
            particles: setup.particles,
            a: setup.a,
            b: setup.b,
            ell: setup.ell,
            energy: f64::NAN,
            energy_ratio: f64::NAN,
            h1_distance: f64::NAN,
            gns_deficit: f64::NAN,
            hartree_nls_gap: None,
            residual: f64::NAN,
            iterations: 0,
            status: PointStatus::Failed,
            message: String::new(),
            rescaled: None,
        };
        match solve(setup, &grid, &solver) {
            Ok((report, gap)) => {
                let rescaled = rescaled_field(&report.field, &reference)?;
                let leading = regime.leading_coefficient() * regime.trap_moment() * setup.ell.powf(regime.s);
                let kinetic = rescaled.kinetic();
                let sextic = rescaled.lp_power(6.0);
                points.push(BlowupDiagnostics {
                    energy: report.breakdown.total,
                    energy_ratio: report.breakdown.total / leading,
                    h1_distance: rescaled.h1_distance(&q0),
                    gns_deficit: kinetic - B_CRIT / 6.0 * sextic,
                    hartree_nls_gap: gap,
                    residual: report.residual,
                    iterations: report.iterations,
                    status: if report.converged {
                        PointStatus::Converged
                    } else {
                        PointStatus::NotConverged
                    },
                    message: format!("{:?}", report.termination),
                    rescaled: Some(rescaled.clone()),
                    ..base
                });
                warm = Some(rescaled);
            }
            Err(e) => {
                points.push(BlowupDiagnostics {
                    message: e.to_string(),
                    ..base
                });
                break;
            }
        }
    }
    Ok(SweepReport::from_points(points, requested))
}

/// Solves the NLS problem along the regime, warm-starting each point from
/// the previous rescaled minimizer.
pub fn nls_collapse_sweep(
    regime: &CollapseRegime,
    n_values: &[f64],
    config: &SweepConfig,
) -> Result<SweepReport> {
    let rows = regime_sequences(regime, n_values)?;
    let setups = rows
        .iter()
        .map(|r| PointSetup {
            n: r.n,
            particles: None,
            a: r.a,
            b: r.b,
            ell: r.ell,
        })
        .collect();
    run_sweep(regime, setups, config, |p, grid, solver| {
        let params = ModelParams::new(p.a, p.b, regime.s);
        let f = NlsFunctional::new(&params, grid)?;
        Ok((minimize_functional(&f, solver)?, None))
    })
}

/// Kernel settings for the Hartree sweep.
#[derive(Debug, Clone)]
pub struct HartreeSweep {
    pub alpha: f64,
    pub beta: f64,
    /// `ℓ_N = N^{-η}`.
    pub eta: f64,
    pub base: ModelParams,
}

impl HartreeSweep {
    /// Enforces `η < min(β/(s+3), α)` and `α > β` when `ζ = 0`.
    pub fn validate(&self, regime: &CollapseRegime) -> Result<()> {
        let bound_three = self.beta / (regime.s + 3.0);
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if self.eta >= bound_three {
            return Err(Error::InvalidParameter(format!(
                "eta = {} violates eta < beta/(s+3) = {bound_three}",
                self.eta
            )));
        }
        if self.eta >= self.alpha {
            return Err(Error::InvalidParameter(format!(
                "eta = {} violates eta < alpha = {}",
                self.eta, self.alpha
            )));
        }
        if regime.zeta == 0.0 && self.alpha <= self.beta {
            return Err(Error::InvalidParameter(format!(
                "zeta = 0 requires alpha > beta, got alpha = {}, beta = {}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Hartree minimizers at particle numbers `N` with `ℓ_N = N^{-η}`; each point
/// is also solved for the NLS functional to report `E^H / E^{NLS} - 1`.
pub fn hartree_collapse_sweep(
    regime: &CollapseRegime,
    particles: &[f64],
    sweep: &HartreeSweep,
    config: &SweepConfig,
) -> Result<SweepReport> {
    sweep.validate(regime)?;
    let setups = particles
        .iter()
        .map(|&n| {
            if !(n >= 1.0) {
                return Err(Error::InvalidParameter(format!("particle number must be >= 1, got {n}")));
            }
            let ell = n.powf(-sweep.eta);
            let (a, delta) = regime.couplings_for_width(ell);
            Ok(PointSetup {
                n,
                particles: Some(n),
                a,
                b: B_CRIT - delta,
                ell,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    run_sweep(regime, setups, config, |p, grid, solver| {
        let mut params = sweep.base.clone();
        params.a = p.a;
        params.b = p.b;
        params.s = regime.s;
        params.alpha = sweep.alpha;
        params.beta = sweep.beta;
        params.particles = p.particles.expect("set for Hartree sweeps");
        let h = HartreeFunctional::new(&params, grid)?;
        let hr = minimize_functional(&h, solver)?;
        let nls = NlsFunctional::new(&params, grid)?;
        let nr = minimize_functional(&nls, solver)?;
        Ok((hr.clone(), Some(hr.breakdown.total / nr.breakdown.total - 1.0)))
    })
}

/// Least-squares fit of `y = C x^p` on log–log axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

pub fn fit_rate(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidParameter("rate fit requires positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fit needs distinct abscissae".into()));
    }
    let p = sxy / sxx;
    let c = (my - p * mx).exp();
    let ss_res: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - my - p * (x - mx)).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(RateFit {
        exponent: p,
        prefactor: c,
        r_squared,
    })
}

/// Complex samples of `Q₀` on `grid`, handy for seeding sweeps by hand.
pub fn q0_seed(grid: &Arc<Grid>) -> Vec<Complex64> {
    q0_field(grid.clone()).into_values()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn strength_branch_identity_point() {
        let r = CollapseRegime::new(6.0, 2.0, Schedule::Strength { c: 3e-4, p: 1.0 }).unwrap();
        let rows = regime_sequences(&r, &[1.0]).unwrap();
        assert!((rows[0].ell - 0.1).abs() < 1e-12);
        assert_eq!(rows[0].a, 0.0);
        assert!(rows[0].ell_amplitude.is_none());
    }

    #[test]
    fn amplitude_branch_identity_point() {
        let r = CollapseRegime::new(0.0, 2.0, Schedule::Amplitude { c: PI * 0.5e-3, p: 1.0 }).unwrap();
        let rows = regime_sequences(&r, &[1.0]).unwrap();
        assert!((rows[0].ell - 0.1).abs() < 1e-12);
        assert_eq!(rows[0].b, B_CRIT);
    }

    #[test]
    fn ratio_residual_decreases_with_correction() {
        let r = CollapseRegime::new(3.0, 2.0, Schedule::Strength { c: 0.1, p: 1.0 })
            .unwrap()
            .with_correction(0.5, 1.0);
        let rows = regime_sequences(&r, &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].ratio_residual < w[0].ratio_residual);
            assert!(w[1].branch_gap.unwrap() < w[0].branch_gap.unwrap());
        }
    }

    #[test]
    fn rejections() {
        assert!(CollapseRegime::new(f64::INFINITY, 2.0, Schedule::Strength { c: 1.0, p: 1.0 }).is_err());
        assert!(CollapseRegime::new(-1.0, 2.0, Schedule::Strength { c: 1.0, p: 1.0 }).is_err());
        assert!(CollapseRegime::new(0.0, 2.0, Schedule::Strength { c: 1.0, p: 1.0 }).is_err());
        assert!(CollapseRegime::new(6.0, 2.0, Schedule::Amplitude { c: 1.0, p: 1.0 }).is_err());
    }

    #[test]
    fn degenerate_zeta_is_flagged() {
        let r = CollapseRegime::new(18.0, 2.0, Schedule::Strength { c: 0.1, p: 1.0 }).unwrap();
        assert!(r.is_degenerate());
        let rows = regime_sequences(&r, &[1.0, 2.0]).unwrap();
        assert!(rows.iter().all(|p| p.degenerate && p.leading_coefficient.abs() < 1e-12));
    }

    #[test]
    fn eta_bounds() {
        let r = CollapseRegime::new(6.0, 2.0, Schedule::Strength { c: 0.1, p: 1.0 }).unwrap();
        let mut h = HartreeSweep {
            alpha: 0.6,
            beta: 0.5,
            eta: 0.08,
            base: ModelParams::new(0.0, 0.0, 2.0),
        };
        assert!(h.validate(&r).is_ok());
        h.eta = 0.2;
        let msg = h.validate(&r).unwrap_err().to_string();
        assert!(msg.contains("beta/(s+3)"), "{msg}");
        let r0 = CollapseRegime::new(0.0, 2.0, Schedule::Amplitude { c: 0.1, p: 1.0 }).unwrap();
        h.eta = 0.05;
        h.alpha = 0.4;
        assert!(h.validate(&r0).unwrap_err().to_string().contains("alpha > beta"));
    }

    #[test]
    fn fit_rate_cases() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let f = fit_rate(&xs, &ys).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12 && (f.r_squared - 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (1..=20).map(|i| i as f64 * 10.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| 3.0 * x.sqrt() * (1.0 + 0.01 * rng.random_range(-1.0..1.0)))
            .collect();
        let f = fit_rate(&xs, &ys).unwrap();
        assert!((f.exponent - 0.5).abs() < 0.02);

        assert!(fit_rate(&[1.0], &[1.0]).is_err());
        assert!(fit_rate(&[1.0, 2.0, 3.0], &[1.0, -2.0, 3.0]).is_err());
    }

    #[test]
    fn small_nls_sweep_approaches_q0() {
        let r = CollapseRegime::new(6.0, 2.0, Schedule::Strength { c: 1.0, p: 1.0 }).unwrap();
        let cfg = SweepConfig {
            reference_half_width: 16.0,
            points: 512,
            ..SweepConfig::default()
        };
        let rep = nls_collapse_sweep(&r, &[10.0, 100.0], &cfg).unwrap();
        assert!(rep.complete, "{:?}", rep.points.iter().map(|p| &p.message).collect::<Vec<_>>());
        assert!(rep.distance_decreasing);
        assert!((rep.points[1].energy_ratio - 1.0).abs() < 0.02);
    }
}
