use solqm_core::wiener::{
    covariance_estimate, random_band_limited, sample_brownian, unitarity_batch, DyadicGrid, Estimate, UnitarityReport,
};
use solqm_core::Result;

use crate::config::WienerParams;
use crate::output::{Artifact, Csv, Outcome};

/// Times of the covariance surface.
pub const SURFACE: [f64; 5] = [0.125, 0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePoint {
    pub s: f64,
    pub t: f64,
    pub estimate: Estimate,
}

impl CovariancePoint {
    pub fn z(&self) -> f64 {
        (self.estimate.value - self.s.min(self.t)).abs() / self.estimate.stderr
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WienerRun {
    pub p: u32,
    pub reports: Vec<UnitarityReport>,
    pub covariance: Vec<CovariancePoint>,
}

impl WienerRun {
    pub fn max_unitarity_z(&self) -> f64 {
        self.reports
            .iter()
            .map(|r| (r.rhs - r.lhs).abs() / r.stderr)
            .fold(0.0, f64::max)
    }

    pub fn max_covariance_z(&self) -> f64 {
        self.covariance.iter().map(CovariancePoint::z).fold(0.0, f64::max)
    }

    pub fn outcome(&self, _svg: bool) -> Outcome {
        let mut u = Csv::new(&["id", "lhs", "rhs", "stderr", "n_paths", "p"]);
        for (i, r) in self.reports.iter().enumerate() {
            u.row(&[
                i.into(),
                r.lhs.into(),
                r.rhs.into(),
                r.stderr.into(),
                r.n_paths.into(),
                self.p.into(),
            ]);
        }
        let mut c = Csv::new(&["s", "s_prime", "estimate", "stderr", "exact"]);
        for q in &self.covariance {
            c.row(&[
                q.s.into(),
                q.t.into(),
                q.estimate.value.into(),
                q.estimate.stderr.into(),
                q.s.min(q.t).into(),
            ]);
        }
        let mut out = Outcome {
            artifacts: vec![
                Artifact::new("wiener.csv", u.finish()),
                Artifact::new("wiener_covariance.csv", c.finish()),
            ],
            ..Default::default()
        };
        out.metric("max_unitarity_z", self.max_unitarity_z());
        out.metric("max_covariance_z", self.max_covariance_z());
        out
    }
}

pub fn run(p: &WienerParams, seed: u64) -> Result<WienerRun> {
    let grid = DyadicGrid::new(p.p)?;
    let functions = (0..p.n_functions as u64)
        .map(|id| random_band_limited(grid, p.max_mode, seed, id))
        .collect::<Result<Vec<_>>>()?;
    let reports = unitarity_batch(&functions, p.n_paths, seed)?;
    let paths = sample_brownian(p.p, p.covariance_paths, seed)?;
    let mut covariance = Vec::with_capacity(SURFACE.len() * SURFACE.len());
    for &s in &SURFACE {
        for &t in &SURFACE {
            covariance.push(CovariancePoint {
                s,
                t,
                estimate: covariance_estimate(&paths, s, t)?,
            });
        }
    }
    Ok(WienerRun {
        p: p.p,
        reports,
        covariance,
    })
}
