use std::f64::consts::TAU;

use solqm_core::wiener::{
    covariance_estimate, cross_moment, random_band_limited, sample_brownian, unitarity_batch, unitarity_check, DyadicGrid,
    SampledFunction,
};
use solqm_core::Complex64;

#[test]
fn covariance_surface_is_min() {
    let paths = sample_brownian(8, 20_000, 3).unwrap();
    let pts = [0.125, 0.25, 0.5, 0.75, 1.0];
    for &s in &pts {
        for &t in &pts {
            let est = covariance_estimate(&paths, s, t).unwrap();
            assert!((est.value - s.min(t)).abs() < 5.0 * est.stderr, "({s},{t}) {est:?}");
        }
    }
}

#[test]
fn constant_function_has_unit_norm() {
    let g = DyadicGrid::new(10).unwrap();
    let one = SampledFunction::from_fn(g, |_| Complex64::new(1.0, 0.0)).unwrap();
    let r = unitarity_check(&one, 20_000, 7).unwrap();
    assert!((r.lhs - 1.0).abs() < 1e-12);
    assert!((r.rhs - r.lhs).abs() < 4.0 * r.stderr, "{r:?}");
}

#[test]
fn plane_wave_isometry() {
    let g = DyadicGrid::new(10).unwrap();
    let f = SampledFunction::from_fn(g, |s| Complex64::from_polar(1.0, 3.0 * TAU * s)).unwrap();
    let r = unitarity_check(&f, 20_000, 2).unwrap();
    assert!((r.lhs - 1.0).abs() < 1e-12);
    assert!((r.rhs - r.lhs).abs() < 4.0 * r.stderr, "{r:?}");
}

#[test]
fn band_limited_batch_is_unitary() {
    let g = DyadicGrid::new(8).unwrap();
    let fs: Vec<SampledFunction> = (0..5).map(|i| random_band_limited(g, 6, 4, i).unwrap()).collect();
    let reports = unitarity_batch(&fs, 20_000, 9).unwrap();
    for r in &reports {
        assert!((r.rhs - r.lhs).abs() < 4.0 * r.stderr, "{r:?}");
    }
}

#[test]
fn cross_moment_matches_inner_product() {
    let g = DyadicGrid::new(8).unwrap();
    let a = random_band_limited(g, 4, 1, 0).unwrap();
    let b = random_band_limited(g, 4, 1, 1).unwrap();
    let exact = b.inner(&a).unwrap();
    let (mean, se) = cross_moment(&a, &b, 20_000, 5).unwrap();
    assert!((mean.re - exact.re).abs() < 4.0 * se.re, "{mean} vs {exact}");
    assert!((mean.im - exact.im).abs() < 4.0 * se.im, "{mean} vs {exact}");
}

#[test]
fn off_grid_times_are_rejected() {
    let g = DyadicGrid::new(6).unwrap();
    assert!(g.index(0.3).is_err());
    assert_eq!(g.index(0.25).unwrap(), 16);
    assert!(DyadicGrid::new(5).is_err());
    assert!(DyadicGrid::new(25).is_err());
}
