//! Constrained energy minimization by a preconditioned, normalized gradient
//! flow with energy-monotone step control, and the existence phase diagram.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{
    EnergyBreakdown, EnergyFunctional, HartreeFunctional, ModelParams, NlsFunctional,
};
use crate::gns::{q0, trap_moment, B_CRIT};
use crate::grid::{normalize, Field, Grid};
use crate::par::{self, Exec};

/// Which functional to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FunctionalKind {
    Nls,
    Hartree,
}

/// Starting point of the flow.
#[derive(Debug, Clone)]
pub enum Initializer {
    /// `exp(-x² / (2w²))`, normalized.
    Gaussian { width: f64 },
    /// `ℓ^{1/2} Q₀(ℓx)`; `None` picks `ℓ` by minimizing the closed-form
    /// trial energy on a logarithmic grid.
    ScaledQ0 { ell: Option<f64> },
    /// Columnar profile `x re [im]` interpolated onto the grid.
    File(PathBuf),
    /// Warm start from a previous solution (interpolated if the grid differs).
    Previous(Field),
}

impl Default for Initializer {
    fn default() -> Self {
        Initializer::ScaledQ0 { ell: None }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Initial step `τ₀`.
    pub tau0: f64,
    /// Factor applied to `τ` after a rejected step, in `(0, 1)`.
    pub backtrack: f64,
    /// Factor applied to `τ` after an accepted step.
    pub growth: f64,
    pub tau_max: f64,
    pub max_iterations: usize,
    /// Tolerance on the Euler–Lagrange residual `‖∇E(u) - μu‖₂`.
    pub tolerance: f64,
    pub initializer: Initializer,
    /// Kinetic-energy ceiling as a fraction of `k_max²`.
    pub kinetic_ceiling: f64,
    /// Allow runs outside the existence region.
    pub instability_probe: bool,
    /// Use Polak–Ribière conjugate directions instead of plain
    /// preconditioned descent.
    pub conjugate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau0: 1.0,
            backtrack: 0.5,
            growth: 1.5,
            tau_max: 64.0,
            max_iterations: 20_000,
            tolerance: 1e-9,
            initializer: Initializer::default(),
            kinetic_ceiling: 0.002,
            instability_probe: false,
            conjugate: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0) {
            return Err(Error::InvalidParameter(format!("tau0 must be positive, got {}", self.tau0)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "backtrack must lie in (0, 1), got {}",
                self.backtrack
            )));
        }
        if !(self.growth >= 1.0) {
            return Err(Error::InvalidParameter(format!("growth must be >= 1, got {}", self.growth)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.kinetic_ceiling > 0.0) {
            return Err(Error::InvalidParameter("kinetic_ceiling must be positive".into()));
        }
        Ok(())
    }
}

/// Why the flow stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// Step size underflow: no energy decrease could be found.
    Stalled,
    /// Run at `(a, b) = (0, 𝔟)`, where no minimizer exists; convergence is
    /// never claimed.
    Marginal,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub field: Field,
    /// Energy after each accepted step (entry 0 is the initial energy).
    pub energy_trace: Vec<f64>,
    pub kinetic_trace: Vec<f64>,
    pub residual: f64,
    /// Lagrange multiplier `μ = Re⟨u, ∇E(u)⟩`.
    pub mu: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub breakdown: EnergyBreakdown,
}

/// Existence region of the NLS ground state: `b < 𝔟`, or `b = 𝔟` and `a > 0`.
pub fn is_stable(a: f64, b: f64) -> bool {
    b < B_CRIT && !is_critical(b) || (is_critical(b) && a > 0.0)
}

/// `b` equals `𝔟` up to rounding.
pub fn is_critical(b: f64) -> bool {
    (b - B_CRIT).abs() <= 1e-12 * B_CRIT
}

/// Closed-form energy of `ℓ^{1/2}Q₀(ℓx)`: `ℓ²(𝔟 - b)/12 + ℓa/π + ℓ^{-s}𝒬ₛ/s`.
pub fn trial_energy(a: f64, b: f64, s: f64, ell: f64) -> Result<f64> {
    Ok(ell * ell * (B_CRIT - b) / 12.0 + ell * a / PI + ell.powf(-s) * trap_moment(s)? / s)
}

/// Range of dilations `ℓ` that `grid` resolves.
pub fn resolvable_ell_range(grid: &Grid) -> (f64, f64) {
    (4.0 / grid.half_width(), 1.0 / (16.0 * grid.dx()))
}

/// Minimizes [`trial_energy`] over 400 log-spaced `ℓ` in the resolvable range.
pub fn best_trial_ell(a: f64, b: f64, s: f64, grid: &Grid) -> Result<f64> {
    let (lo, hi) = resolvable_ell_range(grid);
    let qs = trap_moment(s)?;
    let steps = 400;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=steps {
        let ell = lo * (hi / lo).powf(i as f64 / steps as f64);
        let e = ell * ell * (B_CRIT - b) / 12.0 + ell * a / PI + ell.powf(-s) * qs / s;
        if e < best.0 {
            best = (e, ell);
        }
    }
    Ok(best.1)
}

/// Reads a columnar `x re [im]` profile.
pub fn read_profile(path: &Path) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let text = fs::read_to_string(path)?;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
            .collect::<Result<_>>()?;
        match cols.len() {
            2 => vs.push(Complex64::new(cols[1], 0.0)),
            3.. => vs.push(Complex64::new(cols[1], cols[2])),
            _ => return Err(Error::Parse(format!("line {}: expected x re [im]", i + 1))),
        }
        xs.push(cols[0]);
    }
    if xs.len() < 2 || xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parse("profile abscissae must be increasing with at least two rows".into()));
    }
    Ok((xs, vs))
}

/// Writes `x re im` rows.
pub fn write_profile(path: &Path, u: &Field) -> Result<()> {
    let mut out = String::from("# x re im\n");
    for (x, v) in u.grid().x().iter().zip(u.values()) {
        out.push_str(&format!("{x:.17e} {:.17e} {:.17e}\n", v.re, v.im));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Linear interpolation of `(xs, vs)` onto `grid`, zero outside the table.
pub fn interpolate(xs: &[f64], vs: &[Complex64], grid: &Arc<Grid>) -> Field {
    Field::from_fn(grid.clone(), |x| {
        if x < xs[0] || x > xs[xs.len() - 1] {
            return Complex64::new(0.0, 0.0);
        }
        let i = xs.partition_point(|&p| p <= x).clamp(1, xs.len() - 1) - 1;
        let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        vs[i] * (1.0 - t) + vs[i + 1] * t
    })
}

fn initial_field(init: &Initializer, params: &ModelParams, grid: &Arc<Grid>) -> Result<Field> {
    let raw = match init {
        Initializer::Gaussian { width } => {
            if !(*width > 0.0) {
                return Err(Error::InvalidParameter(format!("gaussian width must be positive, got {width}")));
            }
            Field::from_real_fn(grid.clone(), |x| (-x * x / (2.0 * width * width)).exp())
        }
        Initializer::ScaledQ0 { ell } => {
            let ell = match ell {
                Some(l) => *l,
                None => best_trial_ell(params.a, params.b, params.s, grid)?,
            };
            Field::from_real_fn(grid.clone(), |x| ell.sqrt() * q0(ell * x))
        }
        Initializer::File(path) => {
            let (xs, vs) = read_profile(path)?;
            interpolate(&xs, &vs, grid)
        }
        Initializer::Previous(u) => {
            if u.grid().as_ref() == grid.as_ref() {
                u.clone()
            } else {
                interpolate(u.grid().x(), u.values(), grid)
            }
        }
    };
    normalize(&raw)
}

/// Relative size of rounding noise in a discrete energy evaluation.
pub const ENERGY_ROUNDOFF: f64 = 1e-14;
const ARMIJO: f64 = 1e-4;
const WOLFE: f64 = 0.9;

/// Builds the functional for `kind` and minimizes it.
pub fn minimize(
    kind: FunctionalKind,
    params: &ModelParams,
    grid: &Arc<Grid>,
    config: &SolverConfig,
) -> Result<SolverReport> {
    match kind {
        FunctionalKind::Nls => minimize_functional(&NlsFunctional::new(params, grid)?, config),
        FunctionalKind::Hartree => minimize_functional(&HartreeFunctional::new(params, grid)?, config),
    }
}

/// Symmetric preconditioner `P = P_V (α + k²)^{-1} P_V` with
/// `P_V = (α + |x|^s)^{-1/2}`.
struct Preconditioner {
    grid: Arc<Grid>,
    potential_weight: Vec<f64>,
    fourier_weight: Vec<f64>,
}

impl Preconditioner {
    fn new(grid: &Arc<Grid>, trap: &[f64], alpha: f64) -> Self {
        Preconditioner {
            grid: grid.clone(),
            potential_weight: trap.iter().map(|t| (alpha + t).powf(-0.5)).collect(),
            fourier_weight: grid.k().iter().map(|k| 1.0 / (alpha + k * k)).collect(),
        }
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = v
            .iter()
            .zip(&self.potential_weight)
            .map(|(a, w)| a * w)
            .collect();
        self.grid.forward(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.fourier_weight) {
            *b *= w;
        }
        self.grid.inverse(&mut buf);
        for (b, w) in buf.iter_mut().zip(&self.potential_weight) {
            *b *= w;
        }
        buf
    }
}

fn inner(a: &[Complex64], b: &[Complex64], dx: f64) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * dx
}

/// Removes the component of `d` along the unit vector `u`.
fn project_tangent(d: &mut [Complex64], u: &Field) {
    let overlap = inner(u.values(), d, u.grid().dx());
    for (x, v) in d.iter_mut().zip(u.values()) {
        *x -= v * overlap;
    }
}

fn residual_of(u: &Field, grad: &Field) -> (f64, f64) {
    let dx = u.grid().dx();
    let mu = inner(u.values(), grad.values(), dx).re;
    let r = grad
        .values()
        .iter()
        .zip(u.values())
        .map(|(g, v)| (g - v * mu).norm_sqr())
        .sum::<f64>()
        * dx;
    (r.sqrt(), mu)
}

fn energy_magnitude(e: &EnergyBreakdown) -> f64 {
    (e.kinetic.abs() + e.trap.abs() + e.two_body.abs() + e.three_body.abs()).max(1.0)
}

/// Runs the normalized gradient flow on an arbitrary functional.
pub fn minimize_functional(f: &dyn EnergyFunctional, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let params = f.params();
    let grid = f.grid().clone();
    if !config.instability_probe && !is_stable(params.a, params.b) {
        return Err(Error::Unstable(format!(
            "(a, b) = ({}, {}) has no ground state; set the instability probe to run anyway",
            params.a, params.b
        )));
    }
    let marginal = params.a == 0.0 && is_critical(params.b);
    let trap = params.trap()?.sample(&grid);
    let ceiling = config.kinetic_ceiling * grid.k_max().powi(2);
    let dx = grid.dx();

    let mut u = initial_field(&config.initializer, params, &grid)?;
    let (mut e, mut grad) = f.evaluate(&u)?;
    let mut energy_trace = vec![e.total];
    let mut kinetic_trace = vec![e.kinetic];
    let mut tau = config.tau0;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;
    let (mut residual, mut mu) = residual_of(&u, &grad);
    // Previous direction, tangent gradient and preconditioned tangent gradient.
    let mut memory: Option<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> = None;

    while iterations < config.max_iterations {
        if residual <= config.tolerance && !marginal {
            termination = Termination::Converged;
            break;
        }
        let alpha = (e.kinetic + e.trap).max(1e-3);
        let pre = Preconditioner::new(&grid, &trap, alpha);
        let tangent: Vec<Complex64> = grad.values().iter().zip(u.values()).map(|(g, v)| g - v * mu).collect();
        let pg = pre.apply(grad.values());
        let pu = pre.apply(u.values());
        let coef = inner(u.values(), &pg, dx) / inner(u.values(), &pu, dx);
        let z: Vec<Complex64> = pg.iter().zip(&pu).map(|(a, b)| a - coef * b).collect();

        let mut dir: Vec<Complex64> = z.iter().map(|v| -v).collect();
        if config.conjugate {
            if let Some((d_prev, r_prev, z_prev)) = &memory {
                let num: f64 = tangent
                    .iter()
                    .zip(r_prev)
                    .zip(&z)
                    .map(|((r, rp), zz)| ((r - rp).conj() * zz).re)
                    .sum();
                let den: f64 = r_prev.iter().zip(z_prev).map(|(r, zz)| (r.conj() * zz).re).sum();
                let beta = num / den;
                if beta.is_finite() && beta > 0.0 {
                    let overlap = inner(u.values(), d_prev, dx);
                    for ((d, dp), v) in dir.iter_mut().zip(d_prev).zip(u.values()) {
                        *d += (dp - v * overlap) * beta;
                    }
                }
            }
        }
        project_tangent(&mut dir, &u);
        let mut slope = 2.0 * inner(&tangent, &dir, dx).re;
        if !(slope < 0.0) {
            dir = z.iter().map(|v| -v).collect();
            project_tangent(&mut dir, &u);
            slope = 2.0 * inner(&tangent, &dir, dx).re;
        }

        // Rounding scales with the largest term, not with their sum.
        let noise = ENERGY_ROUNDOFF * energy_magnitude(&e);
        let mut accepted: Option<Candidate> = None;
        while tau >= 1e-14 {
            let first = Candidate::new(f, &u, &dir, tau)?;
            let mut options = vec![first];
            // Secant step on the directional derivative of the energy along
            // the normalized path; immune to energy rounding.
            let s1 = options[0].slope;
            if s1 > slope {
                let t2 = (tau * slope / (slope - s1)).min(10.0 * tau);
                if t2 > 0.0 && (t2 - tau).abs() > 0.1 * tau {
                    options.push(Candidate::new(f, &u, &dir, t2)?);
                }
            }
            let energy_resolves = options.iter().any(|c| -c.tau * slope > 100.0 * noise);
            let best = options
                .into_iter()
                .filter(|c| {
                    let armijo = c.energy.total <= e.total + ARMIJO * c.tau * slope;
                    // Below the rounding floor the energy cannot rank
                    // candidates. A reduced directional derivative still
                    // certifies a decrease of the local quadratic model.
                    let roundoff = -c.tau * slope <= 100.0 * noise
                        && c.energy.total <= e.total + noise
                        && (c.slope.abs() <= WOLFE * slope.abs() || c.residual < residual);
                    armijo || roundoff
                })
                .min_by(|a, b| {
                    if energy_resolves {
                        a.energy.total.total_cmp(&b.energy.total)
                    } else {
                        a.slope.abs().total_cmp(&b.slope.abs())
                    }
                });
            if let Some(c) = best {
                accepted = Some(c);
                break;
            }
            tau *= config.backtrack;
        }
        let Some(c) = accepted else {
            termination = Termination::Stalled;
            break;
        };
        iterations += 1;
        let decreasing = c.energy.total < e.total;
        memory = Some((dir, tangent, z));
        tau = (c.tau * config.growth).min(config.tau_max);
        u = c.field;
        e = c.energy;
        grad = c.gradient;
        residual = c.residual;
        mu = c.mu;
        energy_trace.push(e.total);
        kinetic_trace.push(e.kinetic);

        if e.kinetic > ceiling && decreasing {
            return Err(Error::CollapseDetected {
                iteration: iterations,
                kinetic: e.kinetic,
                ceiling,
                energy: e.total,
                energy_trace,
                kinetic_trace,
            });
        }
    }
    if marginal && termination == Termination::MaxIterations {
        termination = Termination::Marginal;
    }
    Ok(SolverReport {
        field: u,
        energy_trace,
        kinetic_trace,
        residual,
        mu,
        iterations,
        converged: termination == Termination::Converged,
        termination,
        breakdown: e,
    })
}

/// A trial point `γ(τ) = (u + τd)/‖u + τd‖` with its energy and gradient.
struct Candidate {
    tau: f64,
    field: Field,
    energy: EnergyBreakdown,
    gradient: Field,
    residual: f64,
    mu: f64,
    /// `d/dτ E(γ(τ))`.
    slope: f64,
}

impl Candidate {
    fn new(f: &dyn EnergyFunctional, u: &Field, dir: &[Complex64], tau: f64) -> Result<Candidate> {
        let raw = Field::new(
            u.grid().clone(),
            u.values().iter().zip(dir).map(|(v, d)| v + d * tau).collect(),
        )?;
        let norm_sqr = raw.recompute_mass();
        let field = normalize(&raw)?;
        let (energy, gradient) = f.evaluate(&field)?;
        let (residual, mu) = residual_of(&field, &gradient);
        // γ' = d/n - γ (n²)'/(2n²) and dE = 2 Re⟨∇E, γ'⟩. Using the tangent
        // gradient ∇E - μγ keeps the value accurate when it is tiny.
        let dx = u.grid().dx();
        let tangent: Vec<Complex64> = gradient
            .values()
            .iter()
            .zip(field.values())
            .map(|(g, v)| g - v * mu)
            .collect();
        let slope = 2.0 * inner(&tangent, dir, dx).re / norm_sqr.sqrt();
        Ok(Candidate {
            tau,
            field,
            energy,
            gradient,
            residual,
            mu,
            slope,
        })
    }
}

/// Fixes the gauge: real and positive at the maximum of `|u|`, mass centroid at 0.
pub fn gauge_fix(u: &Field) -> Field {
    let centered = u.translated(-u.centroid());
    let (imax, _) = centered
        .values()
        .iter()
        .enumerate()
        .fold((0, 0.0), |best, (i, v)| if v.norm() > best.1 { (i, v.norm()) } else { best });
    let phase = centered.values()[imax];
    if phase.norm() == 0.0 {
        return centered;
    }
    centered.scaled(phase.conj() / phase.norm())
}

/// Existence classification of a point `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Phase {
    /// Bounded below with a minimizer.
    Minimizer,
    /// Energy unbounded below.
    Collapse,
    /// Infimum zero, not attained.
    Marginal,
    /// The flow neither converged nor showed a recognizable trend.
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhasePoint {
    pub a: f64,
    pub b: f64,
    pub phase: Phase,
    pub energy: f64,
    pub kinetic: f64,
    pub iterations: usize,
    pub residual: f64,
    pub note: String,
}

/// Classifies one point from the flow's behaviour.
pub fn classify(
    kind: FunctionalKind,
    params: &ModelParams,
    grid: &Arc<Grid>,
    config: &SolverConfig,
) -> Result<PhasePoint> {
    let mut cfg = config.clone();
    cfg.instability_probe = true;
    let point = |phase, energy, kinetic, iterations, residual, note: String| PhasePoint {
        a: params.a,
        b: params.b,
        phase,
        energy,
        kinetic,
        iterations,
        residual,
        note,
    };
    match minimize(kind, params, grid, &cfg) {
        Ok(r) => {
            let e = r.breakdown;
            if r.termination == Termination::Converged && kind == FunctionalKind::Nls {
                if let Some(probe) = concentration_probe(params, e.total)? {
                    return Ok(point(
                        Phase::Collapse,
                        probe,
                        e.kinetic,
                        r.iterations,
                        r.residual,
                        "local minimizer only: concentrated trial states lower the energy without bound".into(),
                    ));
                }
            }
            let phase = match r.termination {
                Termination::Converged => Phase::Minimizer,
                _ => {
                    let k = &r.kinetic_trace;
                    let en = &r.energy_trace;
                    let rising = k.last() > k.first();
                    let falling = en.last() < en.first();
                    if rising && falling && e.total >= 0.0 {
                        Phase::Marginal
                    } else if rising && falling && e.total < 0.0 && r.termination != Termination::Marginal {
                        Phase::Collapse
                    } else {
                        Phase::Undetermined
                    }
                }
            };
            Ok(point(
                phase,
                e.total,
                e.kinetic,
                r.iterations,
                r.residual,
                format!("{:?}", r.termination),
            ))
        }
        Err(Error::CollapseDetected {
            iteration,
            kinetic,
            energy,
            ..
        }) => {
            let phase = if energy < 0.0 { Phase::Collapse } else { Phase::Marginal };
            Ok(point(phase, energy, kinetic, iteration, f64::NAN, "kinetic ceiling reached".into()))
        }
        Err(e) => Err(e),
    }
}

/// Dilations tried by [`concentration_probe`]: `2^k` for `k = 0..=12`.
const PROBE_STEPS: i32 = 12;

/// Evaluates the NLS energy of `ℓ^{1/2}Q₀(ℓx)` for `ℓ = 1, 2, 4, …`, each on a
/// grid shrunk by `ℓ` so every trial state is equally well resolved. A
/// converged flow can sit in a metastable well when the descending
/// direction needs widths finer than its grid; returns the lowest probe
/// energy when the probes end below `reference`, negative and still
/// strictly decreasing.
fn concentration_probe(params: &ModelParams, reference: f64) -> Result<Option<f64>> {
    let mut energies = Vec::with_capacity(PROBE_STEPS as usize + 1);
    for k in 0..=PROBE_STEPS {
        let ell = 2f64.powi(k);
        let grid = Grid::new(20.0 / ell, 1024)?;
        let trial = crate::gns::scaled_q0_field(grid, ell);
        energies.push(crate::functionals::nls_energy(&trial, params)?.total);
    }
    let n = energies.len();
    let tail = &energies[n - 3..];
    let last = tail[2];
    if tail[0] > tail[1] && tail[1] > last && last < 0.0 && last < reference {
        Ok(Some(last))
    } else {
        Ok(None)
    }
}

/// Scans the `(a, b)` grid; cells run concurrently, results are in row-major order.
pub fn phase_diagram(
    a_values: &[f64],
    b_values: &[f64],
    base: &ModelParams,
    grid: &Arc<Grid>,
    config: &SolverConfig,
    exec: Exec,
) -> Result<Vec<PhasePoint>> {
    let cells: Vec<(f64, f64)> = b_values
        .iter()
        .flat_map(|&b| a_values.iter().map(move |&a| (a, b)))
        .collect();
    par::map_slice(exec, &cells, |&(a, b)| {
        let mut p = base.clone();
        p.a = a;
        p.b = b;
        classify(FunctionalKind::Nls, &p, grid, config)
    })
    .into_iter()
    .collect()
}

/// Expected classification of `(a, b)`: minimizer below `𝔟` and for `a > 0` at `𝔟`,
/// collapse above `𝔟` and for `a < 0` at `𝔟`, marginal at `(0, 𝔟)`.
pub fn theoretical_phase(a: f64, b: f64) -> Phase {
    if is_critical(b) {
        match a.partial_cmp(&0.0) {
            Some(std::cmp::Ordering::Greater) => Phase::Minimizer,
            Some(std::cmp::Ordering::Less) => Phase::Collapse,
            _ => Phase::Marginal,
        }
    } else if b < B_CRIT {
        Phase::Minimizer
    } else {
        Phase::Collapse
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic_config() -> SolverConfig {
        SolverConfig {
            initializer: Initializer::Gaussian { width: 1.7 },
            tolerance: 1e-10,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn harmonic_oracle() {
        let g = Grid::new(20.0, 1024).unwrap();
        let r = minimize(FunctionalKind::Nls, &ModelParams::new(0.0, 0.0, 2.0), &g, &harmonic_config()).unwrap();
        assert!(r.converged);
        assert!((r.breakdown.total - 1.0).abs() < 1e-6);
        let exact = Field::from_real_fn(g, |x| PI.powf(-0.25) * (-x * x / 2.0).exp());
        assert!(gauge_fix(&r.field).l2_distance(&exact) < 1e-6);
        assert!((r.field.recompute_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn energy_trace_is_monotone() {
        let g = Grid::new(16.0, 512).unwrap();
        let p = ModelParams::new(-1.0, 0.8 * B_CRIT, 1.0);
        let r = minimize(FunctionalKind::Nls, &p, &g, &harmonic_config()).unwrap();
        assert!(r.converged);
        for w in r.energy_trace.windows(2) {
            assert!(w[1] <= w[0] + ENERGY_ROUNDOFF * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn restart_from_solution_is_immediate() {
        let g = Grid::new(16.0, 512).unwrap();
        let p = ModelParams::new(1.0, 0.5 * B_CRIT, 2.0);
        let r = minimize(FunctionalKind::Nls, &p, &g, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            initializer: Initializer::Previous(r.field.clone()),
            ..SolverConfig::default()
        };
        let again = minimize(FunctionalKind::Nls, &p, &g, &cfg).unwrap();
        assert!(again.converged);
        assert!(again.iterations <= 2);
    }

    #[test]
    fn near_critical_energy_below_trial_bound() {
        let g = Grid::new(16.0, 1024).unwrap();
        let b = 0.99 * B_CRIT;
        let p = ModelParams::new(0.0, b, 2.0);
        let r = minimize(FunctionalKind::Nls, &p, &g, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        let bound = (0..2000)
            .map(|i| 0.1 * 1.003f64.powi(i))
            .map(|l| trial_energy(0.0, b, 2.0, l).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(r.breakdown.total <= bound + 1e-9, "{} > {bound}", r.breakdown.total);
    }

    #[test]
    fn supercritical_requires_probe_and_collapses() {
        let g = Grid::new(16.0, 512).unwrap();
        let p = ModelParams::new(0.0, 1.05 * B_CRIT, 2.0);
        assert!(matches!(
            minimize(FunctionalKind::Nls, &p, &g, &SolverConfig::default()),
            Err(Error::Unstable(_))
        ));
        let cfg = SolverConfig {
            instability_probe: true,
            ..SolverConfig::default()
        };
        assert!(matches!(
            minimize(FunctionalKind::Nls, &p, &g, &cfg),
            Err(Error::CollapseDetected { .. })
        ));
    }

    #[test]
    fn critical_point_refuses_convergence() {
        let g = Grid::new(16.0, 512).unwrap();
        let p = ModelParams::new(0.0, B_CRIT, 2.0);
        let pt = classify(FunctionalKind::Nls, &p, &g, &SolverConfig::default()).unwrap();
        assert_eq!(pt.phase, Phase::Marginal, "{pt:?}");
    }

    #[test]
    fn gauge_fix_normalizes_phase_and_centroid() {
        let g = Grid::new(16.0, 512).unwrap();
        let u = normalize(&Field::from_real_fn(g, |x| (-(x - 0.7) * (x - 0.7)).exp()))
            .unwrap()
            .scaled(Complex64::from_polar(1.0, 1.1));
        let v = gauge_fix(&u);
        assert!(v.centroid().abs() < 1e-10);
        let peak = v.values().iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!(peak.im.abs() < 1e-12 && peak.re > 0.0);
    }

    #[test]
    fn theoretical_phases() {
        assert_eq!(theoretical_phase(1.0, B_CRIT), Phase::Minimizer);
        assert_eq!(theoretical_phase(-1.0, B_CRIT), Phase::Collapse);
        assert_eq!(theoretical_phase(0.0, B_CRIT), Phase::Marginal);
        assert_eq!(theoretical_phase(-5.0, 0.9 * B_CRIT), Phase::Minimizer);
        assert_eq!(theoretical_phase(5.0, 1.1 * B_CRIT), Phase::Collapse);
        assert!(is_stable(0.1, B_CRIT) && !is_stable(0.0, B_CRIT) && is_stable(-3.0, 1.0));
    }

    #[test]
    fn metastable_well_above_critical_strength_is_collapse() {
        let grid = Grid::new(16.0, 1024).unwrap();
        let cfg = SolverConfig::default();
        let p = classify(FunctionalKind::Nls, &ModelParams::new(1.0, 1.05 * B_CRIT, 2.0), &grid, &cfg).unwrap();
        assert_eq!(p.phase, Phase::Collapse, "{p:?}");
        let p = classify(FunctionalKind::Nls, &ModelParams::new(1.0, 0.9 * B_CRIT, 2.0), &grid, &cfg).unwrap();
        assert_eq!(p.phase, Phase::Minimizer, "{p:?}");
    }
}
