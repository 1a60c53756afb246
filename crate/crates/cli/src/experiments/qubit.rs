use std::f64::consts::{PI, TAU};

use solqm_core::phase_qubits::{correlation_curve, solitonic_phases, CorrelationRow};
use solqm_core::soliton::make_profile;
use solqm_core::stats::{ks_test, TestReport};
use solqm_core::{CenterDistribution, Etalon, Grid1D, PhaseSource, Result};

use crate::config::QubitCorrParams;
use crate::output::{line_plot, Artifact, Csv, Outcome, Series};

/// `steps` values of `Δθ` spread evenly over `[0, π]`.
pub fn delta_grid(steps: usize) -> Vec<f64> {
    (0..steps).map(|i| i as f64 * PI / (steps - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct QubitRun {
    pub rows: Vec<CorrelationRow>,
    /// Uniformity of recovered phases, for the soliton source.
    pub phase_uniformity: Option<TestReport>,
}

impl QubitRun {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| (r.estimate - r.linear).abs()).fold(0.0, f64::max)
    }

    /// Least-squares slope of the estimates against `Δθ`.
    pub fn slope(&self) -> f64 {
        let n = self.rows.len() as f64;
        let mx = self.rows.iter().map(|r| r.delta_theta).sum::<f64>() / n;
        let my = self.rows.iter().map(|r| r.estimate).sum::<f64>() / n;
        let sxy: f64 = self.rows.iter().map(|r| (r.delta_theta - mx) * (r.estimate - my)).sum();
        let sxx: f64 = self.rows.iter().map(|r| (r.delta_theta - mx).powi(2)).sum();
        sxy / sxx
    }

    pub fn outcome(&self, svg: bool) -> Outcome {
        let mut c = Csv::new(&["delta_theta", "estimate", "stderr", "linear", "singlet"]);
        for r in &self.rows {
            c.row(&[
                r.delta_theta.into(),
                r.estimate.into(),
                r.stderr.into(),
                r.linear.into(),
                r.singlet.into(),
            ]);
        }
        let mut out = Outcome {
            artifacts: vec![Artifact::new("qubit_corr.csv", c.finish())],
            ..Default::default()
        };
        if svg {
            let curve = |f: fn(&CorrelationRow) -> f64| self.rows.iter().map(|r| (r.delta_theta, f(r))).collect();
            out.artifacts.push(Artifact::new(
                "qubit_corr.svg",
                line_plot(
                    "dichotomic correlation",
                    "delta theta",
                    "E(f1 f2)",
                    &[
                        Series::new("estimate", curve(|r| r.estimate), "black"),
                        Series::new("1 - 2|dt|/pi", curve(|r| r.linear), "red"),
                        Series::new("-cos dt", curve(|r| r.singlet), "blue"),
                    ],
                ),
            ));
        }
        out.metric("max_deviation", self.max_deviation());
        out.metric("slope", self.slope());
        if let Some(ks) = &self.phase_uniformity {
            out.metric("phase_ks_p", ks.p_value);
        }
        out
    }
}

/// Narrowband two-particle trials on a wide grid, matched against the
/// rest etalon.
pub fn soliton_phases(n_trials: usize, seed: u64) -> Result<Vec<f64>> {
    let grid = Grid1D::centered(2.0, 2048)?;
    let profile = make_profile(1.0, 0.0, 0.02, grid)?;
    let etalon = Etalon::from_profile(&profile, grid)?;
    let dist = CenterDistribution::uniform(grid, -1500.0, 1500.0)?;
    solitonic_phases(&dist, &profile, &etalon, 2, n_trials, seed)
}

pub fn run(p: &QubitCorrParams, seed: u64) -> Result<QubitRun> {
    let deltas = delta_grid(p.steps);
    if p.solitonic_trials == 0 {
        return Ok(QubitRun {
            rows: correlation_curve(&deltas, p.n_samples, seed, &PhaseSource::Uniform)?,
            phase_uniformity: None,
        });
    }
    let phases = soliton_phases(p.solitonic_trials, seed)?;
    let ks = ks_test(&phases, |x| (x / TAU).clamp(0.0, 1.0))?;
    let n = phases.len();
    Ok(QubitRun {
        rows: correlation_curve(&deltas, n, seed, &PhaseSource::Fixed(phases))?,
        phase_uniformity: Some(ks),
    })
}
