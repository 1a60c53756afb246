use solqm_core::ensemble::{build_psi_n, expectation_field, expectation_operator, sample_trials};
use solqm_core::{CenterDistribution, ObservableGenerator, Result};

use super::ensemble_setup;
use crate::config::ObservableParams;
use crate::output::{line_plot, Artifact, Csv, Outcome, Series};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRow {
    pub l0: f64,
    pub seed: u64,
    pub field: f64,
    pub stderr: f64,
    pub operator: f64,
}

impl ObservableRow {
    pub fn gap(&self) -> f64 {
        self.operator - self.field
    }

    pub fn gap_in_stderr(&self) -> f64 {
        self.gap().abs() / self.stderr
    }
}

/// Position expectations in field and operator form, per soliton size and
/// seed. Every size uses the same seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRun {
    pub rows: Vec<ObservableRow>,
}

impl ObservableRun {
    /// `(l0, mean |gap| over seeds)` in input order.
    pub fn mean_gaps(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64, usize)> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|o| o.0 == r.l0) {
                Some(o) => {
                    o.1 += r.gap().abs();
                    o.2 += 1;
                }
                None => out.push((r.l0, r.gap().abs(), 1)),
            }
        }
        out.into_iter().map(|(l, s, n)| (l, s / n as f64)).collect()
    }

    pub fn outcome(&self, svg: bool) -> Outcome {
        let mut c = Csv::new(&["l0", "seed", "field", "field_stderr", "operator", "gap", "gap_over_stderr"]);
        for r in &self.rows {
            c.row(&[
                r.l0.into(),
                r.seed.into(),
                r.field.into(),
                r.stderr.into(),
                r.operator.into(),
                r.gap().into(),
                r.gap_in_stderr().into(),
            ]);
        }
        let gaps = self.mean_gaps();
        let mut g = Csv::new(&["l0", "mean_abs_gap"]);
        for &(l, v) in &gaps {
            g.row(&[l.into(), v.into()]);
        }
        let mut out = Outcome {
            artifacts: vec![
                Artifact::new("observable.csv", c.finish()),
                Artifact::new("observable_gap.csv", g.finish()),
            ],
            ..Default::default()
        };
        if svg {
            out.artifacts.push(Artifact::new(
                "observable_gap.svg",
                line_plot(
                    "field vs operator gap",
                    "l0",
                    "mean |gap|",
                    &[Series::new("gap", gaps.clone(), "black")],
                ),
            ));
        }
        out.metric(
            "max_gap_over_stderr",
            self.rows.iter().map(ObservableRow::gap_in_stderr).fold(0.0, f64::max),
        );
        out
    }
}

pub fn run(p: &ObservableParams, seed: u64) -> Result<ObservableRun> {
    let mut rows = Vec::new();
    for &l0 in &p.l0 {
        let (grid, profile) = ensemble_setup(l0, p.mean.abs() + 6.0 * p.sd)?;
        let dist = CenterDistribution::gaussian(grid, p.mean, p.sd)?;
        for s in seed..seed + p.seeds {
            let trials = sample_trials(&dist, &profile, 1, p.n_trials, s)?;
            let field = expectation_field(&trials, ObservableGenerator::Position, &grid)?;
            let psi = build_psi_n(&trials, &grid)?;
            let operator = expectation_operator(&psi, ObservableGenerator::Position)?;
            rows.push(ObservableRow {
                l0,
                seed: s,
                field: field.value,
                stderr: field.stderr,
                operator,
            });
        }
    }
    Ok(ObservableRun { rows })
}
