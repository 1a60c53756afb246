use solqm_cli::config::{BornParams, CltParams, LatticeParams, ObservableParams, WienerParams};
use solqm_cli::experiments::{born, clt, lattice, observable, qubit, wiener};
use solqm_cli::{execute, Params, RunConfig};

#[test]
fn delta_grid_spans_zero_to_pi() {
    let g = qubit::delta_grid(9);
    assert_eq!(g.len(), 9);
    assert_eq!(g[0], 0.0);
    assert_eq!(g[8], std::f64::consts::PI);
}

#[test]
fn born_reports_every_seed() {
    let p = BornParams {
        n_trials: 500,
        seeds: 3,
        ..Default::default()
    };
    let r = born::run(&p, 4).unwrap();
    assert_eq!(r.seeds.iter().map(|s| s.seed).collect::<Vec<_>>(), vec![4, 5, 6]);
    assert_eq!(r.rho.len(), r.target.len());
    let target_mass: f64 = r.target.iter().sum::<f64>() * r.cell_size;
    assert!((target_mass - 1.0).abs() < 1e-12);
}

#[test]
fn clt_oracle_is_close_to_density_for_small_solitons() {
    let p = CltParams {
        replicas: 500,
        n_trials: 50,
        ..Default::default()
    };
    let r = clt::run(&p, 1).unwrap();
    for q in &r.probes {
        assert!((q.oracle - q.rho).abs() < 0.05 * q.rho, "{} vs {}", q.oracle, q.rho);
    }
}

#[test]
fn observable_runs_each_size_with_shared_seeds() {
    let p = ObservableParams {
        l0: vec![0.2, 0.1],
        n_trials: 500,
        seeds: 2,
        ..Default::default()
    };
    let r = observable::run(&p, 9).unwrap();
    assert_eq!(r.rows.len(), 4);
    assert_eq!(r.mean_gaps().len(), 2);
    assert!(r.rows.iter().all(|row| (row.field - 2.0).abs() < 5.0 * row.stderr + 0.05));
}

#[test]
fn lattice_ripples_follow_doublings() {
    let r = lattice::run(&LatticeParams::default()).unwrap();
    let nodes: Vec<usize> = r.ripples.iter().map(|x| x.0).collect();
    assert_eq!(nodes, vec![27, 55, 111, 223]);
}

#[test]
fn wiener_surface_has_25_points() {
    let p = WienerParams {
        p: 6,
        n_paths: 2000,
        n_functions: 3,
        covariance_paths: 500,
        ..Default::default()
    };
    let r = wiener::run(&p, 2).unwrap();
    assert_eq!(r.covariance.len(), 25);
    assert_eq!(r.reports.len(), 3);
}

#[test]
fn execute_is_thread_independent() {
    let base = RunConfig {
        seed: 3,
        svg: true,
        ..RunConfig::with_params(Params::Born(BornParams {
            n_trials: 2000,
            ..Default::default()
        }))
    };
    let a = execute(&RunConfig {
        threads: 1,
        ..base.clone()
    })
    .unwrap();
    let b = execute(&RunConfig { threads: 3, ..base }).unwrap();
    assert_eq!(a, b);
}
