use std::f64::consts::FRAC_1_SQRT_2;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use solqm_core::diffraction::{plane_wave, run_experiment, SlitSetup};
use solqm_core::ensemble::{build_psi_n, coarse_density, sample_trials};
use solqm_core::phase_qubits::{phase_correlation, solitonic_phases};
use solqm_core::soliton::{lattice_sum, make_profile};
use solqm_core::wiener::{random_band_limited, unitarity_check, DyadicGrid};
use solqm_core::{CenterDistribution, CoarseGrainSpec, DichotomicConfig, Etalon, Grid1D, PhaseSource};

fn lattice(c: &mut Criterion) {
    let p = make_profile(1.0, 0.0, 0.005, Grid1D::centered(1.0, 1 << 14).unwrap()).unwrap();
    let w = Grid1D::centered(1.0, 64).unwrap();
    c.bench_function("lattice_sum 223 nodes", |b| {
        b.iter(|| lattice_sum(&p, 20.0, 223, 0.0, &w).unwrap())
    });
}

fn ensemble(c: &mut Criterion) {
    let g = Grid1D::centered(0.05, 512).unwrap();
    let p = make_profile(10.0, 0.0, 10.0 * FRAC_1_SQRT_2, Grid1D::centered(0.05, 256).unwrap()).unwrap();
    let dist = CenterDistribution::gaussian(g, 0.0, 2.0).unwrap();
    c.bench_function("sample_trials n=1 N=1000", |b| {
        b.iter(|| sample_trials(&dist, &p, 1, 1000, 1).unwrap())
    });
    let trials = sample_trials(&dist, &p, 1, 1000, 1).unwrap();
    let spec = CoarseGrainSpec::new(1.0, 0.1).unwrap();
    c.bench_function("psi_n and coarse density", |b| {
        b.iter(|| coarse_density(&build_psi_n(&trials, &g).unwrap(), &spec).unwrap())
    });
}

fn qubits(c: &mut Criterion) {
    let cfg = DichotomicConfig::new(vec![0.0, 1.0], 1_000_000, 3).unwrap();
    c.bench_function("phase_correlation 1e6", |b| {
        b.iter(|| phase_correlation(&cfg, &PhaseSource::Uniform).unwrap())
    });
    let g = Grid1D::centered(2.0, 2048).unwrap();
    let p = make_profile(1.0, 0.0, 0.02, g).unwrap();
    let e = Etalon::from_profile(&p, g).unwrap();
    let dist = CenterDistribution::uniform(g, -1500.0, 1500.0).unwrap();
    let mut group = c.benchmark_group("matching");
    group.sample_size(10);
    group.bench_function("solitonic_phases 100 trials", |b| {
        b.iter(|| solitonic_phases(&dist, &p, &e, 2, 100, 5).unwrap())
    });
    group.finish();
}

fn wiener(c: &mut Criterion) {
    let g = DyadicGrid::new(10).unwrap();
    let f = random_band_limited(g, 8, 0, 0).unwrap();
    let mut group = c.benchmark_group("wiener");
    group.sample_size(10);
    group.bench_function("unitarity 1e4 paths p=10", |b| {
        b.iter(|| unitarity_check(&f, 10_000, 1).unwrap())
    });
    group.finish();
}

fn slit(c: &mut Criterion) {
    let s = SlitSetup::auto(1.0, 0.01, 2000.0, 100_000).unwrap();
    let half = s.default_screen_half_width();
    c.bench_function("slit far field 1e5", |b| {
        b.iter_batched(
            || plane_wave(&s),
            |beam| run_experiment(&s, &beam, half, 240, 2).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, lattice, ensemble, qubits, wiener, slit);
criterion_main!(benches);
