use std::f64::consts::{PI, TAU};

use solqm_core::phase_qubits::{correlation_curve, solitonic_phases, trial_phase};
use solqm_core::soliton::make_profile;
use solqm_core::stats::ks_test;
use solqm_core::{CenterDistribution, Etalon, Grid1D, PhaseSource, Trial};

fn setup() -> (CenterDistribution, solqm_core::soliton::SolitonProfile, Etalon) {
    let g = Grid1D::centered(2.0, 2048).unwrap();
    let p = make_profile(1.0, 0.0, 0.02, g).unwrap();
    let e = Etalon::from_profile(&p, g).unwrap();
    (CenterDistribution::uniform(g, -1500.0, 1500.0).unwrap(), p, e)
}

#[test]
fn recovered_phases_track_injected_phases() {
    let (dist, p, e) = setup();
    for (i, alpha) in [0.1, 1.0, 2.5, 3.9, 6.0].into_iter().enumerate() {
        let c = -800.0 + 370.0 * i as f64 + 0.37;
        let t = Trial::from_profile(&p, dist.grid(), &[c], &[alpha]).unwrap();
        let phi = trial_phase(&t, std::slice::from_ref(&e)).unwrap().value();
        let err = (phi - alpha + PI).rem_euclid(TAU) - PI;
        assert!(err.abs() < 2e-3, "alpha {alpha}: {phi}");
    }
}

#[test]
fn solitonic_phases_are_uniform_and_reproduce_the_line() {
    let (dist, p, e) = setup();
    let phases = solitonic_phases(&dist, &p, &e, 2, 1500, 11).unwrap();
    assert!(phases.iter().all(|&x| (0.0..TAU).contains(&x)));
    let ks = ks_test(&phases, |x| x / TAU).unwrap();
    assert!(ks.p_value > 1e-3, "KS p = {}", ks.p_value);
    let dts: Vec<f64> = (0..=8).map(|i| i as f64 * PI / 8.0).collect();
    let rows = correlation_curve(&dts, phases.len(), 0, &PhaseSource::Fixed(phases)).unwrap();
    assert_eq!(rows[0].estimate, 1.0);
    assert_eq!(rows[8].estimate, -1.0);
    for r in &rows[1..8] {
        assert!((r.estimate - r.linear).abs() < 4.0 * r.stderr, "{r:?}");
    }
}

#[test]
fn mismatched_etalon_grid_is_rejected() {
    let (dist, p, _) = setup();
    let other = Grid1D::centered(2.0, 1024).unwrap();
    let e = Etalon::from_profile(&make_profile(1.0, 0.0, 0.02, other).unwrap(), other).unwrap();
    assert!(solitonic_phases(&dist, &p, &e, 1, 10, 0).is_err());
}
