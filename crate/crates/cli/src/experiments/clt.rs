use std::f64::consts::TAU;

use solqm_core::ensemble::{aux_at, clt_replicas, AuxScale, CltSamples};
use solqm_core::stats::{ks_normal_fitted, pearson, TestReport};
use solqm_core::{CenterDistribution, Result};

use super::ensemble_setup;
use crate::config::CltParams;
use crate::output::{Artifact, Csv, Outcome};

/// Phases used to average `|aux|²` over the soliton phase.
const ORACLE_PHASES: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct CltProbe {
    pub x: f64,
    pub ks_re: TestReport,
    pub ks_im: TestReport,
    pub mean_intensity: f64,
    pub stderr: f64,
    /// `∫ ρ(c) E_α |aux(x - c)|² dc`.
    pub oracle: f64,
    pub rho: f64,
    pub corr_re_im: f64,
}

impl CltProbe {
    pub fn relative_error(&self) -> f64 {
        (self.mean_intensity - self.oracle).abs() / self.oracle
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltRun {
    pub samples: CltSamples,
    pub probes: Vec<CltProbe>,
}

impl CltRun {
    /// Normality tests (real and imaginary per probe) with `p > alpha`.
    pub fn normal_parts(&self, alpha: f64) -> usize {
        self.probes
            .iter()
            .map(|p| (p.ks_re.p_value > alpha) as usize + (p.ks_im.p_value > alpha) as usize)
            .sum()
    }

    pub fn outcome(&self, _svg: bool) -> Outcome {
        let mut dump = Csv::new(&["probe", "replica", "re", "im"]);
        for (x, values) in self.samples.probes.iter().zip(&self.samples.values) {
            for (r, v) in values.iter().enumerate() {
                dump.row(&[(*x).into(), r.into(), v.re.into(), v.im.into()]);
            }
        }
        let mut s = Csv::new(&[
            "probe",
            "ks_p_re",
            "ks_p_im",
            "mean_intensity",
            "stderr",
            "oracle",
            "rho",
            "corr_re_im",
        ]);
        for p in &self.probes {
            s.row(&[
                p.x.into(),
                p.ks_re.p_value.into(),
                p.ks_im.p_value.into(),
                p.mean_intensity.into(),
                p.stderr.into(),
                p.oracle.into(),
                p.rho.into(),
                p.corr_re_im.into(),
            ]);
        }
        let mut out = Outcome {
            artifacts: vec![
                Artifact::new("clt_replicas.csv", dump.finish()),
                Artifact::new("clt.csv", s.finish()),
            ],
            ..Default::default()
        };
        out.metric("normal_parts", self.normal_parts(0.01) as f64);
        out.metric(
            "max_relative_error",
            self.probes.iter().map(CltProbe::relative_error).fold(0.0, f64::max),
        );
        out
    }
}

pub fn run(p: &CltParams, seed: u64) -> Result<CltRun> {
    let (grid, profile) = ensemble_setup(p.l0, p.mean.abs() + 8.0 * p.sd)?;
    let dist = CenterDistribution::gaussian(grid, p.mean, p.sd)?;
    let samples = clt_replicas(&dist, &profile, p.n_trials, p.replicas, &p.probes, seed)?;
    let scale = AuxScale::new(&profile, &grid)?;
    let reach = profile.support_radius(0.0);
    let mut probes = Vec::with_capacity(p.probes.len());
    for (i, &x) in p.probes.iter().enumerate() {
        let re: Vec<f64> = samples.values[i].iter().map(|v| v.re).collect();
        let im: Vec<f64> = samples.values[i].iter().map(|v| v.im).collect();
        let est = samples.mean_intensity(i);
        let oracle = grid
            .points()
            .zip(dist.density())
            .filter(|(c, _)| (x - c).abs() <= reach)
            .map(|(c, d)| {
                let mean: f64 = (0..ORACLE_PHASES)
                    .map(|a| aux_at(&profile, &scale, c, a as f64 * TAU / ORACLE_PHASES as f64, x).norm_sqr())
                    .sum::<f64>()
                    / ORACLE_PHASES as f64;
                d * mean
            })
            .sum::<f64>()
            * grid.dx();
        probes.push(CltProbe {
            x,
            ks_re: ks_normal_fitted(&re)?,
            ks_im: ks_normal_fitted(&im)?,
            mean_intensity: est.mean,
            stderr: est.stderr(),
            oracle,
            rho: dist.value_at(x),
            corr_re_im: pearson(&re, &im),
        });
    }
    Ok(CltRun { samples, probes })
}
