use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use solqm_core::diffraction::{plane_wave, propagate_free, truncate_at_slit, SlitSetup, Transport};
use solqm_core::ensemble::ObservableGenerator;
use solqm_core::phase_qubits::{angular_distance, phase_correlation, wrap_phase, DichotomicConfig, Etalon, PhaseSource};
use solqm_core::soliton::{make_profile, normalize_pair, one_quantum_pair};
use solqm_core::spectral;
use solqm_core::stats::{chi_square_gof, PiecewiseCdf};
use solqm_core::wiener::{complex_path, stochastic_transform, DyadicGrid, SampledFunction};
use solqm_core::{Complex64, Grid1D};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bump(grid: &Grid1D, center: f64, width: f64, coeff: Complex64, k: f64) -> Vec<Complex64> {
    grid.points()
        .map(|x| coeff * (-(x - center).powi(2) / (2.0 * width * width)).exp() * Complex64::from_polar(1.0, k * x))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn normalized_pairs_have_unit_aux_norm(
        a in 0.1f64..3.0, b in 0.1f64..3.0, w in 0.5f64..3.0, shift in -2.0f64..2.0, phase in 0.0f64..TAU,
    ) {
        let g = Grid1D::centered(0.1, 256).unwrap();
        let phi = bump(&g, 0.0, w, c(a, 0.0), 0.0);
        let pi = bump(&g, shift, w, Complex64::from_polar(b, phase), 0.7);
        if let Ok(pair) = normalize_pair(&phi, &pi, g.dx()) {
            prop_assert!((pair.aux_norm() - 1.0).abs() < 1e-8);
        }
        let scaled = one_quantum_pair(&phi, &pi, g.dx(), 1.3).unwrap();
        prop_assert!((scaled.aux_norm() - 1.0).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generators_are_hermitian(
        c1 in -3.0f64..3.0, c2 in -3.0f64..3.0, w1 in 0.5f64..2.0, w2 in 0.5f64..2.0,
        k1 in -3.0f64..3.0, k2 in -3.0f64..3.0, p in 0.0f64..TAU,
    ) {
        let g = Grid1D::centered(0.05, 512).unwrap();
        let f = bump(&g, c1, w1, c(1.0, 0.0), k1);
        let h = bump(&g, c2, w2, Complex64::from_polar(1.0, p), k2);
        for gen in [ObservableGenerator::Position, ObservableGenerator::Momentum] {
            let lhs = spectral::inner(&f, &gen.apply(&g, &h), g.dx());
            let rhs = spectral::inner(&gen.apply(&g, &f), &h, g.dx());
            prop_assert!((lhs - rhs).norm() < 1e-8);
        }
    }

    #[test]
    fn wrapped_phases_stay_in_range(phi in -100.0f64..100.0) {
        let w = wrap_phase(phi);
        prop_assert!((0.0..TAU).contains(&w));
        prop_assert!(((w - phi) / TAU - ((w - phi) / TAU).round()).abs() < 1e-9);
        let d = angular_distance(phi);
        prop_assert!((0.0..=PI).contains(&d));
        prop_assert!((d - angular_distance(-phi)).abs() < 1e-12);
    }

    #[test]
    fn correlation_is_even_in_delta(dt in -PI..PI, seed in 0u64..1000) {
        let a = phase_correlation(&DichotomicConfig::new(vec![0.0, dt], 2000, seed).unwrap(), &PhaseSource::Uniform).unwrap();
        let b = phase_correlation(&DichotomicConfig::new(vec![0.0, -dt], 2000, seed).unwrap(), &PhaseSource::Uniform).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn transform_is_linear(ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, seed in 0u64..100) {
        let g = DyadicGrid::new(6).unwrap();
        let f1 = SampledFunction::from_fn(g, |s| Complex64::from_polar(1.0, TAU * s)).unwrap();
        let f2 = SampledFunction::from_fn(g, |s| c(s * s, -s)).unwrap();
        let (a, b) = (c(ar, ai), c(br, 0.0));
        let combo = SampledFunction::new(g, f1.values.iter().zip(&f2.values).map(|(x, y)| a * x + b * y).collect()).unwrap();
        let z = complex_path(g, seed, 0);
        let lhs = stochastic_transform(&combo, &z).unwrap();
        let rhs = a * stochastic_transform(&f1, &z).unwrap() + b * stochastic_transform(&f2, &z).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn cdf_quantile_round_trip(masses in prop::collection::vec(0.0f64..1.0, 2..40), u in 0.001f64..0.999) {
        prop_assume!(masses.iter().sum::<f64>() > 1e-3);
        let cdf = PiecewiseCdf::from_masses(-1.0, 0.25, &masses).unwrap();
        prop_assert!((cdf.cdf(cdf.quantile(u)) - u).abs() < 1e-12);
    }

    #[test]
    fn chi_square_p_is_a_probability(obs in prop::collection::vec(0u32..200, 3..12)) {
        let n = obs.len() as f64;
        let probs = vec![1.0 / n; obs.len()];
        let counts: Vec<f64> = obs.iter().map(|&o| o as f64).collect();
        if let Ok(r) = chi_square_gof(&counts, &probs) {
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }
    }

    #[test]
    fn match_is_translation_equivariant(d0 in -5.0f64..5.0, s in -5.0f64..5.0, phase in -3.0f64..3.0) {
        let g = Grid1D::centered(0.1, 512).unwrap();
        let p = make_profile(1.0, 0.0, 0.7, g).unwrap();
        let e = Etalon::from_profile(&p, g).unwrap();
        let rot = Complex64::from_polar(1.0, phase);
        let a = e.match_center(&e.shifted(d0).iter().map(|v| v * rot).collect::<Vec<_>>()).unwrap();
        let b = e.match_center(&e.shifted(d0 + s).iter().map(|v| v * rot).collect::<Vec<_>>()).unwrap();
        prop_assert!((b.d_hat - a.d_hat - s).abs() < 1e-3 * g.dx());
        prop_assert!((a.overlap.norm() - b.overlap.norm()).abs() < 1e-8);
        prop_assert!((a.phase - phase).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn propagation_preserves_norm_and_order(l in 0.0f64..5000.0, b1 in -0.5f64..0.5, b2 in -0.5f64..0.5) {
        let s = SlitSetup::on_slit_grid(1.0, 0.01, l, 10_000, 63, 1 << 17).unwrap();
        let a = truncate_at_slit(&plane_wave(&s), &s).unwrap();
        let f = propagate_free(&a, l, &s).unwrap();
        prop_assert!((spectral::norm_sqr(&f.values, s.grid.dx()) - 1.0).abs() < 1e-10);
        let t = Transport::new(&a, &f, &s).unwrap();
        let (lo, hi) = (b1.min(b2), b1.max(b2));
        prop_assert!(t.landing(lo).unwrap() <= t.landing(hi).unwrap());
    }
}
