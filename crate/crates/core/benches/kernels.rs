use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gnslab_core::functionals::HartreeFunctional;
use gnslab_core::gns::{q0_field, B_CRIT};
use gnslab_core::manybody::{build_hamiltonian, SingleParticleBasis};
use gnslab_core::par::Exec;
use gnslab_core::potentials::ThreeBodyRoute;
use gnslab_core::solver::{phase_diagram, SolverConfig};
use gnslab_core::{Grid, ModelParams};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn three_body(c: &mut Criterion) {
    let grid = Grid::new(10.0, 2048).unwrap();
    let params = ModelParams::new(1.0, B_CRIT / 2.0, 2.0).with_particles(100.0);
    let h = HartreeFunctional::new(&params, &grid).unwrap();
    let rho = q0_field(grid.clone()).density();
    let w = h.three_body_samples();
    let mut group = c.benchmark_group("three_body_apply");
    for route in [ThreeBodyRoute::Direct, ThreeBodyRoute::Spectral] {
        for (name, exec) in MODES {
            group.bench_function(BenchmarkId::new(format!("{route:?}"), name), |b| {
                b.iter(|| w.apply_with(exec, black_box(&rho), black_box(&rho), route))
            });
        }
    }
    group.finish();
}

fn hamiltonian(c: &mut Criterion) {
    let params = ModelParams::new(1.0, B_CRIT / 2.0, 2.0).with_exponents(0.4, 0.4);
    let grid = Grid::new(10.0, 256).unwrap();
    let basis = SingleParticleBasis::new(&params.trap().unwrap(), &grid, 8).unwrap();
    let mut group = c.benchmark_group("manybody");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("assemble_N4_K8", name), |b| {
            b.iter(|| build_hamiltonian(exec, &params, &basis, 4).unwrap())
        });
    }
    let h = build_hamiltonian(Exec::Sequential, &params, &basis, 6).unwrap();
    let x: Vec<f64> = (0..h.dimension()).map(|i| (i as f64 * 0.37).sin()).collect();
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("matvec_N6_K8", name), |b| {
            b.iter(|| h.matrix.matvec(exec, black_box(&x)))
        });
    }
    group.finish();
}

fn phase_scan(c: &mut Criterion) {
    let grid = Grid::new(16.0, 1024).unwrap();
    let base = ModelParams::new(0.0, 0.0, 2.0);
    let a = [-1.0, 0.0, 1.0];
    let b = [0.9 * B_CRIT, B_CRIT, 1.1 * B_CRIT];
    let cfg = SolverConfig::default();
    let mut group = c.benchmark_group("phase_diagram_3x3");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |bch| {
            bch.iter(|| phase_diagram(&a, &b, &base, &grid, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, three_body, hamiltonian, phase_scan);
criterion_main!(benches);
