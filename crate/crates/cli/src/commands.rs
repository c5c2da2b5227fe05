//! One function per subcommand. Each writes its artifacts into the run
//! directory and records failed assertions there.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;

use gnslab_core::collapse::{
    fit_rate, hartree_collapse_sweep, nls_collapse_sweep, regime_sequences, BlowupDiagnostics, CollapseRegime,
    HartreeSweep, PointStatus, RateFit, Schedule, SweepConfig, SweepReport,
};
use gnslab_core::functionals::interaction_gaps;
use gnslab_core::gns::{q0_field, translation_inequality_check, GnsReference};
use gnslab_core::manybody::{run_ed, EdConfig, LanczosConfig};
use gnslab_core::par::Exec;
use gnslab_core::potentials::{load_kernel, KernelFile, ResolutionPolicy, ThreeBodyKernel, ThreeBodyRoute, TwoBodyKernel};
use gnslab_core::solver::{
    minimize, phase_diagram, theoretical_phase, FunctionalKind, Initializer, Phase, SolverConfig, SolverReport,
};
use gnslab_core::solver::write_profile;
use gnslab_core::{Grid, ModelParams};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, opt_num, Csv, RunDir};

/// Offsets used by the translation-inequality table.
const TRANSLATION_OFFSETS: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];

/// Slack allowed in the many-body variational ordering.
const ORDERING_SLACK: f64 = 1e-8;

pub struct Context {
    pub config: RunConfig,
    pub exec: Exec,
}

impl Context {
    fn grid(&self, l: f64, m: i64, path: &str) -> Result<Arc<Grid>, CliError> {
        Grid::new(l, m as usize).map_err(|e| CliError::config(path, e.to_string()))
    }

    pub fn model(&self) -> Result<ModelParams, CliError> {
        let c = &self.config;
        let a = c.model.a.resolve("model.a")?;
        let b = c.model.b.resolve("model.b")?;
        let mut p = ModelParams::new(a, b, c.model.s)
            .with_exponents(c.model.alpha, c.model.beta)
            .with_particles(c.model.particles);
        p.two_body = match c.kernel.two_body.as_str() {
            "gaussian" => TwoBodyKernel::gaussian(c.kernel.sigma_two, a, c.model.alpha)
                .map_err(|e| CliError::config("kernel.sigma_two", e.to_string()))?,
            path => match load_kernel(&PathBuf::from(path), a, c.model.alpha)
                .map_err(|e| CliError::config("kernel.two_body", e.to_string()))?
            {
                KernelFile::TwoBody(k) => k,
                KernelFile::ThreeBody(_) => {
                    return Err(CliError::config("kernel.two_body", "file holds a three-body kernel"))
                }
            },
        };
        p.three_body = match c.kernel.three_body.as_str() {
            "gaussian" => ThreeBodyKernel::gaussian(c.kernel.sigma_three, b.max(0.0), c.model.beta)
                .map_err(|e| CliError::config("kernel.sigma_three", e.to_string()))?,
            path => match load_kernel(&PathBuf::from(path), b, c.model.beta)
                .map_err(|e| CliError::config("kernel.three_body", e.to_string()))?
            {
                KernelFile::ThreeBody(k) => k,
                KernelFile::TwoBody(_) => {
                    return Err(CliError::config("kernel.three_body", "file holds a two-body kernel"))
                }
            },
        };
        p.resolution = match c.kernel.resolution.as_str() {
            "delta" => ResolutionPolicy::DeltaOverride,
            _ => ResolutionPolicy::Reject,
        };
        p.route = match c.kernel.route.as_str() {
            "direct" => ThreeBodyRoute::Direct,
            _ => ThreeBodyRoute::Spectral,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn solver(&self) -> SolverConfig {
        let s = &self.config.solver;
        let initializer = match s.initializer.as_str() {
            "scaled_q0" => Initializer::ScaledQ0 { ell: None },
            "gaussian" => Initializer::Gaussian { width: s.init_width },
            path => Initializer::File(PathBuf::from(path)),
        };
        SolverConfig {
            tau0: s.tau0,
            max_iterations: s.max_iterations as usize,
            tolerance: s.tolerance,
            initializer,
            kinetic_ceiling: s.kinetic_ceiling,
            conjugate: s.conjugate,
            ..SolverConfig::default()
        }
    }
}

fn check_row(name: &str, computed: f64, reference: f64, err: f64, tol: f64, passed: bool) -> Vec<String> {
    vec![
        name.to_string(),
        num(computed),
        num(reference),
        num(err),
        num(tol),
        passed.to_string(),
    ]
}

pub fn gns_verify(ctx: &Context, out: &mut RunDir) -> Result<(), CliError> {
    let c = &ctx.config;
    let grid = ctx.grid(c.grid.half_width, c.grid.points, "grid")?;
    let mut table = Csv::new(
        format!("closed-form certification of Q0 = (cosh pi x)^(-1/2) on L = {}, M = {}", c.grid.half_width, c.grid.points),
        &[
            ("constant", "quantity being certified"),
            ("computed", "value computed on the grid"),
            ("reference", "closed-form value (0 for upper bounds)"),
            ("abs_error", "|computed - reference| (|computed| for upper bounds)"),
            ("tolerance", "absolute tolerance, or relative when the reference is 3pi^2/2"),
            ("passed", "whether the check passed"),
        ],
    );
    println!("{:<34} {:>20} {:>20} {:>11}  result", "constant", "computed", "reference", "abs error");
    for cert in GnsReference::default().certify(&grid)? {
        println!(
            "{:<34} {:>20.14} {:>20.14} {:>11.3e}  {}",
            cert.name,
            cert.computed,
            cert.reference,
            cert.abs_error,
            if cert.passed { "ok" } else { "FAIL" }
        );
        if !cert.passed {
            out.fail(format!("{}: error {:.3e} exceeds {:.1e}", cert.name, cert.abs_error, cert.tolerance));
        }
        table.row(check_row(&cert.name, cert.computed, cert.reference, cert.abs_error, cert.tolerance, cert.passed));
    }
    out.csv("certification.csv", &table)?;

    let mut translation = Csv::new(
        "translation inequality: int |x-y|^s Q0^2 > int |x|^s Q0^2",
        &[
            ("s", "trap exponent"),
            ("y", "translation offset"),
            ("shifted", "int |x - y|^s Q0(x)^2 dx"),
            ("centered", "int |x|^s Q0(x)^2 dx"),
            ("margin", "shifted - centered (equals y^2 when s = 2)"),
            ("passed", "margin > 0"),
        ],
    );
    for s in [1.0, 2.0] {
        let report = translation_inequality_check(s, &TRANSLATION_OFFSETS)?;
        for row in &report.rows {
            if !row.passed {
                out.fail(format!("translation margin s={s} y={} is {:.3e}", row.offset, row.margin));
            }
            translation.row(vec![
                num(s),
                num(row.offset),
                num(row.shifted),
                num(row.centered),
                num(row.margin),
                row.passed.to_string(),
            ]);
        }
    }
    out.csv("translation.csv", &translation)?;
    Ok(())
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    functional: &'a str,
    a: f64,
    b: f64,
    s: f64,
    particles: Option<f64>,
    energy: f64,
    kinetic: f64,
    trap: f64,
    two_body: f64,
    three_body: f64,
    mu: f64,
    residual: f64,
    mass: f64,
    iterations: usize,
    converged: bool,
    termination: String,
}

pub fn solve(ctx: &Context, kind: FunctionalKind, out: &mut RunDir) -> Result<(), CliError> {
    let c = &ctx.config;
    let grid = ctx.grid(c.grid.half_width, c.grid.points, "grid")?;
    let params = ctx.model()?;
    let report: SolverReport = minimize(kind, &params, &grid, &ctx.solver())?;
    let e = report.breakdown;
    let name = match kind {
        FunctionalKind::Nls => "nls",
        FunctionalKind::Hartree => "hartree",
    };
    let summary = SolveSummary {
        functional: name,
        a: params.a,
        b: params.b,
        s: params.s,
        particles: (kind == FunctionalKind::Hartree).then_some(params.particles),
        energy: e.total,
        kinetic: e.kinetic,
        trap: e.trap,
        two_body: e.two_body,
        three_body: e.three_body,
        mu: report.mu,
        residual: report.residual,
        mass: report.field.recompute_mass(),
        iterations: report.iterations,
        converged: report.converged,
        termination: format!("{:?}", report.termination),
    };
    println!(
        "{name}: E = {:.12} mu = {:.10} residual = {:.2e} after {} iterations ({:?})",
        e.total, report.mu, report.residual, report.iterations, report.termination
    );
    out.json("report.json", &summary)?;
    write_profile(&out.path("profile.txt"), &report.field)?;
    out.record("profile.txt")?;

    let mut trace = Csv::new(
        "energy along the accepted gradient-flow steps",
        &[
            ("step", "accepted step index (0 = initial field)"),
            ("energy", "total energy E(u) per particle"),
            ("kinetic", "kinetic energy ||u'||^2"),
        ],
    );
    for (i, (en, k)) in report.energy_trace.iter().zip(&report.kinetic_trace).enumerate() {
        trace.row(vec![i.to_string(), num(*en), num(*k)]);
    }
    out.csv("energy_trace.csv", &trace)?;
    if !report.converged {
        out.fail(format!(
            "{name} flow did not converge: residual {:.3e} > {:.1e} ({:?})",
            report.residual, c.solver.tolerance, report.termination
        ));
    }
    Ok(())
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Minimizer => "minimizer",
        Phase::Collapse => "collapse",
        Phase::Marginal => "marginal",
        Phase::Undetermined => "undetermined",
    }
}

pub fn phase(ctx: &Context, out: &mut RunDir) -> Result<(), CliError> {
    let c = &ctx.config;
    let grid = ctx.grid(c.phase.half_width, c.phase.points, "phase")?;
    let a_values = c
        .phase
        .a
        .iter()
        .enumerate()
        .map(|(i, v)| v.resolve(&format!("phase.a[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let b_values = c
        .phase
        .b
        .iter()
        .enumerate()
        .map(|(i, v)| v.resolve(&format!("phase.b[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let base = ctx.model()?;
    let points = phase_diagram(&a_values, &b_values, &base, &grid, &ctx.solver(), ctx.exec)?;
    let mut table = Csv::new(
        "existence phase diagram of the NLS functional",
        &[
            ("a", "two-body coupling"),
            ("b", "three-body coupling"),
            ("b_over_bcrit", "b / (3 pi^2 / 2)"),
            ("phase", "classification from the gradient flow"),
            ("expected", "classification predicted from (a, b) and the critical strength"),
            ("energy", "last energy reached"),
            ("kinetic", "last kinetic energy reached"),
            ("iterations", "flow iterations"),
            ("residual", "Euler-Lagrange residual (nan when the kinetic ceiling stopped the flow)"),
        ],
    );
    for p in &points {
        let expected = theoretical_phase(p.a, p.b);
        println!(
            "a = {:>7.3} b = {:>6.4} bcrit -> {:<12} (expected {})",
            p.a,
            p.b / gnslab_core::gns::B_CRIT,
            phase_name(p.phase),
            phase_name(expected)
        );
        if p.phase != expected {
            out.fail(format!(
                "(a, b) = ({}, {}): classified {} but expected {}",
                p.a,
                p.b,
                phase_name(p.phase),
                phase_name(expected)
            ));
        }
        table.row(vec![
            num(p.a),
            num(p.b),
            num(p.b / gnslab_core::gns::B_CRIT),
            phase_name(p.phase).into(),
            phase_name(expected).into(),
            num(p.energy),
            num(p.kinetic),
            p.iterations.to_string(),
            num(p.residual),
        ]);
    }
    out.csv("phase.csv", &table)?;
    Ok(())
}

pub fn regime(ctx: &Context) -> Result<CollapseRegime, CliError> {
    let r = &ctx.config.regime;
    let schedule = match r.schedule.as_str() {
        "amplitude" => Schedule::Amplitude { c: r.c, p: r.p },
        _ => Schedule::Strength { c: r.c, p: r.p },
    };
    Ok(CollapseRegime::new(r.zeta, ctx.config.model.s, schedule)?.with_correction(r.correction_d, r.correction_q))
}

fn sweep_table(title: &str, report: &SweepReport) -> Csv {
    let mut t = Csv::new(
        title,
        &[
            ("n", "sequence index (particle number for Hartree sweeps)"),
            ("a", "two-body coupling a_n"),
            ("b", "three-body coupling b_n"),
            ("ell", "collapse length l_n"),
            ("energy", "minimal energy E_n"),
            ("ratio", "E_n / (((s+1)/s - zeta/12) Q_s l_n^s)"),
            ("h1_distance", "gauge-fixed H1 distance of l_n^(1/2) u_n(l_n x) to Q0"),
            ("gns_deficit", "||v'||^2 - (bcrit/6) int |v|^6 for the rescaled minimizer v"),
            ("hartree_nls_gap", "E^H / E^NLS - 1 (nan for NLS sweeps)"),
            ("residual", "Euler-Lagrange residual"),
            ("iterations", "flow iterations"),
            ("status", "converged | not_converged | failed"),
        ],
    );
    for p in &report.points {
        t.row(vec![
            num(p.n),
            num(p.a),
            num(p.b),
            num(p.ell),
            num(p.energy),
            num(p.energy_ratio),
            num(p.h1_distance),
            num(p.gns_deficit),
            opt_num(p.hartree_nls_gap),
            num(p.residual),
            p.iterations.to_string(),
            match p.status {
                PointStatus::Converged => "converged",
                PointStatus::NotConverged => "not_converged",
                PointStatus::Failed => "failed",
            }
            .into(),
        ]);
    }
    t
}

fn converged(points: &[BlowupDiagnostics]) -> Vec<&BlowupDiagnostics> {
    points.iter().filter(|p| p.status == PointStatus::Converged).collect()
}

/// Fits `y = C x^p` when enough points are available.
fn fit(xs: &[f64], ys: &[f64]) -> Option<RateFit> {
    fit_rate(xs, ys).ok()
}

#[derive(Serialize)]
struct SweepSummary {
    zeta: f64,
    s: f64,
    branch: String,
    trap_moment: f64,
    leading_coefficient: f64,
    degenerate: bool,
    ratio_limit: f64,
    points: usize,
    complete: bool,
    distance_decreasing: bool,
    ratio_approaching_one: bool,
    /// `ℓ_n ∝ n^p`.
    ell_vs_n: Option<RateFit>,
    /// `E_n ∝ ℓ_n^p`; `p → s` as the sweep collapses.
    energy_vs_ell: Option<RateFit>,
    /// `‖ũ_n - Q₀‖_{H¹} ∝ ℓ_n^p`.
    h1_distance_vs_ell: Option<RateFit>,
    hartree: Option<HartreeSummary>,
}

#[derive(Serialize)]
struct HartreeSummary {
    eta: f64,
    alpha: f64,
    beta: f64,
    complete: bool,
    distance_decreasing: bool,
    /// `E^H/E^NLS - 1 ∝ N^p`.
    gap_vs_n: Option<RateFit>,
}

pub fn collapse(ctx: &Context, out: &mut RunDir) -> Result<(), CliError> {
    let c = &ctx.config;
    let regime = regime(ctx)?;
    let sweep_cfg = SweepConfig {
        reference_half_width: c.regime.reference_half_width,
        points: c.regime.reference_points as usize,
        solver: ctx.solver(),
    };

    let mut seq = Csv::new(
        "collapse-length sequences of the regime",
        &[
            ("n", "sequence index"),
            ("a", "two-body coupling a_n"),
            ("delta", "bcrit - b_n"),
            ("ell", "collapse length used by the sweep"),
            ("ell_amplitude", "length from the amplitude formula (nan if undefined)"),
            ("ell_strength", "length from the strength formula (nan if undefined)"),
            ("branch_gap", "relative gap between the two length formulas"),
            ("ratio", "a_n / (bcrit - b_n)^((s+1)/(s+2)) (inf when zeta = 0)"),
            ("ratio_residual", "|ratio - limit| / |limit|"),
        ],
    );
    for r in regime_sequences(&regime, &c.regime.n)? {
        seq.row(vec![
            num(r.n),
            num(r.a),
            num(r.delta),
            num(r.ell),
            opt_num(r.ell_amplitude),
            opt_num(r.ell_strength),
            opt_num(r.branch_gap),
            num(r.ratio),
            num(r.ratio_residual),
        ]);
    }
    out.csv("regime.csv", &seq)?;

    let report = nls_collapse_sweep(&regime, &c.regime.n, &sweep_cfg)?;
    out.csv("points.csv", &sweep_table("NLS minimizers along the collapse regime", &report))?;
    for p in &report.points {
        println!(
            "n = {:>10} ell = {:.6e} E = {:.10e} ratio = {:.6} H1 = {:.3e} {:?}",
            p.n, p.ell, p.energy, p.energy_ratio, p.h1_distance, p.status
        );
    }
    if !report.complete {
        out.fail("NLS sweep did not converge at every point");
    }
    if !report.distance_decreasing {
        out.fail("H1 distance to Q0 is not strictly decreasing along the sweep");
    }
    let ok = converged(&report.points);
    let ells: Vec<f64> = ok.iter().map(|p| p.ell).collect();

    let hartree = if c.regime.hartree {
        let sweep = HartreeSweep {
            alpha: c.model.alpha,
            beta: c.model.beta,
            eta: c.regime.eta,
            base: ctx.model()?,
        };
        let cfg = SweepConfig {
            reference_half_width: c.regime.hartree_half_width,
            points: c.regime.hartree_points as usize,
            solver: ctx.solver(),
        };
        let hr = hartree_collapse_sweep(&regime, &c.regime.particles, &sweep, &cfg)?;
        out.csv("hartree_points.csv", &sweep_table("Hartree minimizers with l_N = N^(-eta)", &hr))?;
        if !hr.complete {
            out.fail("Hartree sweep did not converge at every point");
        }
        let hok = converged(&hr.points);
        let ns: Vec<f64> = hok.iter().map(|p| p.n).collect();
        let gaps: Vec<f64> = hok.iter().filter_map(|p| p.hartree_nls_gap.map(f64::abs)).collect();
        Some(HartreeSummary {
            eta: sweep.eta,
            alpha: sweep.alpha,
            beta: sweep.beta,
            complete: hr.complete,
            distance_decreasing: hr.distance_decreasing,
            gap_vs_n: fit(&ns, &gaps),
        })
    } else {
        None
    };

    let summary = SweepSummary {
        zeta: regime.zeta,
        s: regime.s,
        branch: format!("{:?}", regime.branch()).to_lowercase(),
        trap_moment: regime.trap_moment(),
        leading_coefficient: regime.leading_coefficient(),
        degenerate: regime.is_degenerate(),
        ratio_limit: regime.ratio_limit(),
        points: report.points.len(),
        complete: report.complete,
        distance_decreasing: report.distance_decreasing,
        ratio_approaching_one: report.ratio_approaching_one,
        ell_vs_n: fit(&ok.iter().map(|p| p.n).collect::<Vec<_>>(), &ells),
        energy_vs_ell: fit(&ells, &ok.iter().map(|p| p.energy.abs()).collect::<Vec<_>>()),
        h1_distance_vs_ell: fit(&ells, &ok.iter().map(|p| p.h1_distance).collect::<Vec<_>>()),
        hartree,
    };
    out.json("summary.json", &summary)?;
    Ok(())
}

pub fn manybody(ctx: &Context, out: &mut RunDir) -> Result<(), CliError> {
    let c = &ctx.config;
    let params = ctx.model()?;
    let ed = EdConfig {
        half_width: c.ed.half_width,
        points: c.ed.points as usize,
        modes: c.ed.modes as usize,
        lanczos: LanczosConfig {
            seed: c.seed,
            tolerance: c.ed.tolerance,
            ..LanczosConfig::default()
        },
        solver: ctx.solver(),
        exec: ctx.exec,
    };
    let mut table = Csv::new(
        "exact diagonalization against the restricted Hartree energy",
        &[
            ("N", "particle number"),
            ("K", "one-particle modes"),
            ("dimension", "Fock-space dimension"),
            ("nonzeros", "stored Hamiltonian entries"),
            ("E_Q_per_particle", "many-body ground-state energy / N"),
            ("E_H_restricted", "product-state energy of the Hartree minimizer projected on the modes"),
            ("E_H_grid", "Hartree minimum on the full grid (nan if the solve failed)"),
            ("condensate_fraction", "largest eigenvalue of the one-body density matrix"),
            ("trace_distance", "trace norm of gamma1 minus the projector on the Hartree minimizer"),
            ("lanczos_residual", "||H psi - E psi||"),
        ],
    );
    let mut reports = Vec::new();
    for (i, &n) in c.ed.particles.iter().enumerate() {
        let r = run_ed(&params, n as usize, &ed).map_err(|e| match e {
            gnslab_core::Error::InvalidParameter(m) => CliError::config(&format!("ed.N[{i}]"), m),
            other => other.into(),
        })?;
        println!(
            "N = {} K = {} dim = {:>7} E_Q/N = {:.10} E_H_restricted = {:.10} fraction = {:.6} trace distance = {:.4e}",
            r.particles, r.modes, r.dimension, r.e_q_per_particle, r.e_h_restricted, r.condensate_fraction, r.trace_distance
        );
        if r.e_q_per_particle > r.e_h_restricted + ORDERING_SLACK {
            out.fail(format!(
                "N = {n}: E_Q/N = {} exceeds E_H_restricted = {}",
                r.e_q_per_particle, r.e_h_restricted
            ));
        }
        if let Some(note) = &r.note {
            out.fail(format!("N = {n}: {note}"));
        }
        table.row(vec![
            r.particles.to_string(),
            r.modes.to_string(),
            r.dimension.to_string(),
            r.nonzeros.to_string(),
            num(r.e_q_per_particle),
            num(r.e_h_restricted),
            opt_num(r.e_h_grid),
            num(r.condensate_fraction),
            num(r.trace_distance),
            num(r.lanczos_residual),
        ]);
        if c.ed.dump_gamma {
            let k = r.gamma1.matrix.nrows();
            let mut text = format!(
                "# one-body density matrix gamma1_ij = <a_j^+ a_i> / N, N = {n}, K = {k}\n# i j value\n"
            );
            for a in 0..k {
                for b in 0..k {
                    text.push_str(&format!("{a} {b} {}\n", num(r.gamma1.matrix[(a, b)])));
                }
            }
            out.write(&format!("gamma1_N{n}.txt"), text.as_bytes())?;
        }
        reports.push(r);
    }
    out.csv("ed.csv", &table)?;
    out.json("ed.json", &reports)?;
    Ok(())
}

#[derive(Serialize)]
struct CompareSummary {
    particles: Vec<f64>,
    e_nls: f64,
    gaps: Vec<f64>,
    gaps_decreasing: bool,
    /// `|E^H - E^NLS| ∝ N^p`.
    energy_gap_rate: Option<RateFit>,
    /// Two-body interaction gap at `u = Q₀`, `∝ N^p`.
    two_body_rate: Option<RateFit>,
    three_body_rate: Option<RateFit>,
    alpha: f64,
    beta: f64,
}

pub fn compare(ctx: &Context, out: &mut RunDir) -> Result<(), CliError> {
    let c = &ctx.config;
    let grid = ctx.grid(c.compare.half_width, c.compare.points, "compare")?;
    let params = ctx.model()?;
    let solver = ctx.solver();
    let nls = minimize(FunctionalKind::Nls, &params, &grid, &solver)?;
    if !nls.converged {
        out.fail(format!("NLS flow did not converge (residual {:.3e})", nls.residual));
    }
    let e_nls = nls.breakdown.total;
    let q0 = q0_field(grid.clone());
    let mut table = Csv::new(
        "Hartree versus NLS ground-state energies",
        &[
            ("N", "particle number"),
            ("E_H", "Hartree minimum"),
            ("E_NLS", "NLS minimum"),
            ("gap", "|E_H - E_NLS|"),
            ("two_body_gap", "int Q0^4 - int int U_N(x-y) Q0^2(x) Q0^2(y) at u = Q0"),
            ("three_body_gap", "int Q0^6 - int int int W_N Q0^2 Q0^2 Q0^2 at u = Q0"),
            ("residual", "Euler-Lagrange residual of the Hartree minimizer"),
        ],
    );
    let mut gaps = Vec::new();
    let mut two = Vec::new();
    let mut three = Vec::new();
    for (i, &n) in c.compare.particles.iter().enumerate() {
        let p = params.clone().with_particles(n);
        // The NLS minimizer is an excellent start: the two differ by O(N^{-α}).
        let warm = SolverConfig {
            initializer: Initializer::Previous(nls.field.clone()),
            ..solver.clone()
        };
        let h = minimize(FunctionalKind::Hartree, &p, &grid, &warm).map_err(|e| match e {
            gnslab_core::Error::UnderResolved { .. } => CliError::config(&format!("compare.N[{i}]"), e.to_string()),
            other => other.into(),
        })?;
        if !h.converged {
            out.fail(format!("N = {n}: Hartree flow did not converge (residual {:.3e})", h.residual));
        }
        let g = interaction_gaps(&q0, &params, n)?;
        let gap = (h.breakdown.total - e_nls).abs();
        println!("N = {n:>10} E_H = {:.12} E_NLS = {e_nls:.12} gap = {gap:.4e}", h.breakdown.total);
        table.row(vec![
            num(n),
            num(h.breakdown.total),
            num(e_nls),
            num(gap),
            num(g.two_body),
            num(g.three_body),
            num(h.residual),
        ]);
        gaps.push(gap);
        two.push(g.two_body.abs());
        three.push(g.three_body.abs());
    }
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    if !decreasing {
        out.fail(format!("|E_H - E_NLS| is not decreasing in N: {gaps:?}"));
    }
    out.csv("compare.csv", &table)?;
    let ns = &c.compare.particles;
    // Rates are reported with a negated exponent so they read as decay rates.
    let decay = |ys: &[f64]| {
        fit(ns, ys).map(|f| RateFit {
            exponent: -f.exponent,
            ..f
        })
    };
    let summary = CompareSummary {
        particles: ns.clone(),
        e_nls,
        gaps_decreasing: decreasing,
        energy_gap_rate: decay(&gaps),
        two_body_rate: decay(&two),
        three_body_rate: decay(&three),
        gaps,
        alpha: params.alpha,
        beta: params.beta,
    };
    out.json("summary.json", &summary)?;
    Ok(())
}
