//! Exact diagonalization of the `N`-boson Hamiltonian at toy scale.
//!
//! The single-particle basis is the `K` lowest eigenmodes of
//! `h = -d²/dx² + |x|^s`. States are occupation vectors over those modes,
//! the interaction enters through mode-basis tensors of the sampled
//! kernels, and the ground state comes from a restarted Lanczos iteration.

pub mod basis;
pub mod density;
pub mod fock;
pub mod hamiltonian;
pub mod lanczos;

pub use basis::SingleParticleBasis;
pub use density::{
    condensation_distance, condensed_state, reduced_density, rescaled_condensation, ManyBodyState,
    ReducedDensityMatrix,
};
pub use fock::FockBasis;
pub use hamiltonian::{build_hamiltonian, CsrMatrix, Hamiltonian, InteractionTensors};
pub use lanczos::{lowest_eigenpair, Eigenpair, LanczosConfig};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::functionals::ModelParams;
use crate::grid::Grid;
use crate::par::Exec;
use crate::solver::{gauge_fix, minimize, FunctionalKind, SolverConfig};

#[derive(Debug, Clone)]
pub struct EdConfig {
    pub half_width: f64,
    pub points: usize,
    pub modes: usize,
    pub lanczos: LanczosConfig,
    pub solver: SolverConfig,
    pub exec: Exec,
}

impl Default for EdConfig {
    fn default() -> Self {
        EdConfig {
            half_width: 10.0,
            points: 256,
            modes: 8,
            lanczos: LanczosConfig::default(),
            solver: SolverConfig::default(),
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdReport {
    #[serde(rename = "N")]
    pub particles: usize,
    #[serde(rename = "K")]
    pub modes: usize,
    pub dimension: usize,
    pub nonzeros: usize,
    #[serde(rename = "E_Q_per_particle")]
    pub e_q_per_particle: f64,
    /// Product-state energy of the Hartree minimizer projected onto the modes.
    #[serde(rename = "E_H_restricted")]
    pub e_h_restricted: f64,
    /// Hartree minimum on the full grid (`None` if the solve failed).
    #[serde(rename = "E_H_grid")]
    pub e_h_grid: Option<f64>,
    pub condensate_fraction: f64,
    /// Trace distance of `γ¹` to the projected Hartree minimizer.
    pub trace_distance: f64,
    pub lanczos_residual: f64,
    pub hermiticity_error: f64,
    /// Set when the Hartree solve failed and the ground mode was used instead.
    pub note: Option<String>,
    #[serde(skip)]
    pub gamma1: ReducedDensityMatrix,
    #[serde(skip)]
    pub state: ManyBodyState,
    #[serde(skip)]
    pub basis: SingleParticleBasis,
    /// Mode coefficients of the projected, renormalized Hartree minimizer.
    pub hartree_coefficients: Vec<f64>,
}

/// Builds the Hamiltonian, finds its ground state and compares it with the
/// Hartree minimizer at the same `N`.
pub fn run_ed(params: &ModelParams, particles: usize, config: &EdConfig) -> Result<EdReport> {
    let grid = Grid::new(config.half_width, config.points)?;
    let params = params.clone().with_particles(particles as f64);
    let basis = SingleParticleBasis::new(&params.trap()?, &grid, config.modes)?;
    let h = build_hamiltonian(config.exec, &params, &basis, particles)?;
    let pair = lanczos::lowest_eigenpair_csr(&h.matrix, config.exec, &config.lanczos)?;
    let state = ManyBodyState::new(h.fock.clone(), pair.vector.clone())?;
    let gamma1 = reduced_density(&state, 1)?;

    let (coefficients, e_h_grid, note) = match minimize(FunctionalKind::Hartree, &params, &grid, &config.solver) {
        Ok(report) => {
            let u = gauge_fix(&report.field);
            let c = basis.project(&u)?;
            (c.iter().map(|z| z.re).collect::<Vec<f64>>(), Some(report.breakdown.total), None)
        }
        Err(e) => {
            let mut c = vec![0.0; basis.len()];
            c[0] = 1.0;
            (c, None, Some(format!("Hartree solve failed ({e}); using the ground mode")))
        }
    };
    let norm = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
    let coefficients: Vec<f64> = coefficients.iter().map(|c| c / norm).collect();
    let complex: Vec<Complex64> = coefficients.iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let e_h_restricted = h.tensors.product_energy(&h.energies, &params, &complex);
    let trace_distance = density::condensation_distance_coefficients(&gamma1, &complex)?;

    Ok(EdReport {
        particles,
        modes: basis.len(),
        dimension: h.dimension(),
        nonzeros: h.matrix.nonzeros(),
        e_q_per_particle: pair.value / particles as f64,
        e_h_restricted,
        e_h_grid,
        condensate_fraction: gamma1.largest_eigenvalue(),
        trace_distance,
        lanczos_residual: pair.residual,
        hermiticity_error: h.assembly_asymmetry,
        note,
        gamma1,
        state,
        basis,
        hartree_coefficients: coefficients,
    })
}
