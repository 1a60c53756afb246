use solqm_core::soliton::{
    commensurate_spacing, lattice_sum, make_profile, plane_wave_fit, ripple, PlaneWaveFit, SpaceTimeField,
};
use solqm_core::{Grid1D, Result};

use crate::config::LatticeParams;
use crate::output::{line_plot, Artifact, Csv, Outcome, Series};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRun {
    pub spacing: f64,
    /// `(n_nodes, ripple)` for the base chain and each doubling.
    pub ripples: Vec<(usize, f64)>,
    pub fit: PlaneWaveFit,
    pub omega_expected: f64,
    pub k_expected: f64,
    pub mass: f64,
}

impl LatticeRun {
    /// Ratios of consecutive ripples.
    pub fn ripple_ratios(&self) -> Vec<f64> {
        self.ripples.windows(2).map(|w| w[1].1 / w[0].1).collect()
    }

    pub fn omega_error(&self) -> f64 {
        (self.fit.omega - self.omega_expected).abs() / self.omega_expected
    }

    /// Relative momentum error; absolute when the expected momentum is zero.
    pub fn k_error(&self) -> f64 {
        let d = (self.fit.k - self.k_expected).abs();
        if self.k_expected == 0.0 {
            d
        } else {
            d / self.k_expected.abs()
        }
    }

    pub fn outcome(&self, svg: bool) -> Outcome {
        let mut r = Csv::new(&["n_nodes", "ripple"]);
        for &(n, v) in &self.ripples {
            r.row(&[n.into(), v.into()]);
        }
        let mut f = Csv::new(&[
            "spacing",
            "omega",
            "k",
            "omega_expected",
            "k_expected",
            "residual",
            "dispersion_defect",
        ]);
        f.row(&[
            self.spacing.into(),
            self.fit.omega.into(),
            self.fit.k.into(),
            self.omega_expected.into(),
            self.k_expected.into(),
            self.fit.residual.into(),
            self.fit.dispersion_defect(self.mass).into(),
        ]);
        let mut out = Outcome {
            artifacts: vec![
                Artifact::new("lattice_ripple.csv", r.finish()),
                Artifact::new("lattice_fit.csv", f.finish()),
            ],
            ..Default::default()
        };
        if svg {
            let pts = self
                .ripples
                .iter()
                .map(|&(n, v)| ((n as f64).log2(), v.max(1e-300).log10()))
                .collect();
            out.artifacts.push(Artifact::new(
                "lattice_ripple.svg",
                line_plot(
                    "lattice ripple",
                    "log2 n_nodes",
                    "log10 ripple",
                    &[Series::new("ripple", pts, "black")],
                ),
            ));
        }
        out.metric("omega_rel_error", self.omega_error());
        out.metric("k_error", self.k_error());
        out.metric("max_ripple_ratio", self.ripple_ratios().into_iter().fold(0.0, f64::max));
        out
    }
}

pub fn run(p: &LatticeParams) -> Result<LatticeRun> {
    let profile = make_profile(
        p.m,
        p.v,
        p.spectral_width * p.m,
        Grid1D::centered(p.profile_dx, p.profile_points)?,
    )?;
    let spacing = commensurate_spacing(&profile, p.spacing * profile.l0());
    let window = Grid1D::centered(p.window_dx, p.window_points)?;
    let mut ripples = Vec::with_capacity(p.doublings + 1);
    let mut n = p.n_nodes;
    for _ in 0..=p.doublings {
        ripples.push((n, ripple(&lattice_sum(&profile, spacing, n, 0.0, &window)?)));
        n = 2 * n + 1;
    }
    let n_fit = ripples.last().map_or(p.n_nodes, |r| r.0);
    let times: Vec<f64> = (0..p.times).map(|i| i as f64 * p.dt).collect();
    let mut values = Vec::with_capacity(times.len() * window.len());
    for &t in &times {
        values.extend(lattice_sum(&profile, spacing, n_fit, t, &window)?);
    }
    let fit = plane_wave_fit(&SpaceTimeField::new(times, window.points().collect(), values)?)?;
    Ok(LatticeRun {
        spacing,
        ripples,
        fit,
        omega_expected: profile.central_energy(),
        k_expected: profile.central_momentum(),
        mass: p.m,
    })
}
