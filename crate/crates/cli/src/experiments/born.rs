use solqm_core::ensemble::{build_psi_n, coarse_density, sample_trials};
use solqm_core::stats::{chi_square_gof, TestReport};
use solqm_core::{CenterDistribution, CoarseGrainSpec, Result};

use super::ensemble_setup;
use crate::config::BornParams;
use crate::output::{line_plot, Artifact, Csv, Outcome, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct BornSeed {
    pub seed: u64,
    pub report: TestReport,
    pub norm: f64,
}

/// Coarse density of the first seed next to the target, plus one
/// chi-square test per seed.
#[derive(Debug, Clone, PartialEq)]
pub struct BornRun {
    pub cell_size: f64,
    pub centers: Vec<f64>,
    pub rho: Vec<f64>,
    pub target: Vec<f64>,
    pub n_trials: usize,
    pub seeds: Vec<BornSeed>,
}

impl BornRun {
    pub fn passing(&self, alpha: f64) -> usize {
        self.seeds.iter().filter(|s| s.report.p_value > alpha).count()
    }

    pub fn outcome(&self, svg: bool) -> Outcome {
        let mut c = Csv::new(&["cell_center", "rho_n", "target_rho", "chi2_contribution"]);
        let vol = self.cell_size;
        let total: f64 = self.rho.iter().sum::<f64>() * vol;
        let n = self.n_trials as f64;
        for ((&x, &r), &t) in self.centers.iter().zip(&self.rho).zip(&self.target) {
            let observed = n * r * vol;
            let expected = n * total * t * vol;
            let contrib = if expected > 0.0 {
                (observed - expected).powi(2) / expected
            } else {
                0.0
            };
            c.row(&[x.into(), r.into(), t.into(), contrib.into()]);
        }
        let mut s = Csv::new(&["seed", "chi2", "dof", "p_value", "norm"]);
        for b in &self.seeds {
            s.row(&[
                b.seed.into(),
                b.report.statistic.into(),
                b.report.dof.into(),
                b.report.p_value.into(),
                b.norm.into(),
            ]);
        }
        let mut out = Outcome {
            artifacts: vec![
                Artifact::new("born.csv", c.finish()),
                Artifact::new("born_seeds.csv", s.finish()),
            ],
            ..Default::default()
        };
        if svg {
            let pts = |v: &[f64]| self.centers.iter().copied().zip(v.iter().copied()).collect();
            out.artifacts.push(Artifact::new(
                "born.svg",
                line_plot(
                    "coarse-grained density",
                    "x",
                    "density",
                    &[
                        Series::new("rho_N", pts(&self.rho), "black"),
                        Series::new("target", pts(&self.target), "red"),
                    ],
                ),
            ));
        }
        out.metric("mass_in_cells", total);
        out.metric("seeds_passing", self.passing(0.01) as f64);
        out.metric("seeds", self.seeds.len() as f64);
        out
    }
}

pub fn run(p: &BornParams, seed: u64) -> Result<BornRun> {
    let reach = |m: f64, s: f64| m.abs() + 8.0 * s;
    let (grid, profile) = ensemble_setup(p.l0, reach(p.mean1, p.sd1).max(reach(p.mean2, p.sd2)))?;
    let dist = CenterDistribution::mixture(grid, &[(p.weight1, p.mean1, p.sd1), (1.0 - p.weight1, p.mean2, p.sd2)])?;
    let spec = CoarseGrainSpec::new(p.cell * p.l0, p.l0)?;
    let k = spec.points_per_cell(&grid)?;
    let cells = grid.len() / k;
    let target_mass: Vec<f64> = (0..cells).map(|c| dist.mass_of_points(c * k, k)).collect();
    let kept: f64 = target_mass.iter().sum();
    let probs: Vec<f64> = target_mass.iter().map(|m| m / kept).collect();

    let mut seeds = Vec::new();
    let mut first = None;
    for s in seed..seed + p.seeds {
        let trials = sample_trials(&dist, &profile, 1, p.n_trials, s)?;
        let psi = build_psi_n(&trials, &grid)?;
        let rho = coarse_density(&psi, &spec)?;
        let observed: Vec<f64> = rho.masses().iter().map(|m| m * p.n_trials as f64).collect();
        seeds.push(BornSeed {
            seed: s,
            report: chi_square_gof(&observed, &probs)?,
            norm: psi.norm_sqr(),
        });
        if first.is_none() {
            first = Some(rho);
        }
    }
    let rho = first.expect("at least one seed");
    Ok(BornRun {
        cell_size: spec.cell_size(),
        centers: rho.centers.clone(),
        rho: rho.values,
        target: probs.iter().map(|q| q / spec.cell_size()).collect(),
        n_trials: p.n_trials,
        seeds,
    })
}
