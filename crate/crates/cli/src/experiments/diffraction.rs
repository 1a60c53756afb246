use solqm_core::diffraction::{plane_wave, run_experiment, ExperimentResult, SlitSetup};
use solqm_core::Result;

use crate::config::DiffractionParams;
use crate::output::{line_plot, Artifact, Csv, Outcome, Series};

pub fn run(p: &DiffractionParams, seed: u64) -> Result<ExperimentResult> {
    let setup = SlitSetup::auto(p.w, p.lambda, p.distance, p.n_trials)?;
    let half = if p.half_width > 0.0 {
        p.half_width
    } else {
        setup.default_screen_half_width()
    };
    run_experiment(&setup, &plane_wave(&setup), half, p.bins, seed)
}

pub fn outcome(r: &ExperimentResult, svg: bool) -> Outcome {
    let h = &r.histogram;
    let n = h.total() as f64;
    let mut c = Csv::new(&["bin_center", "count", "predicted", "fraunhofer"]);
    for (b, &count) in h.counts.iter().enumerate() {
        let fr = r.fraunhofer.as_ref().map(|f| n * f[b + 1]);
        c.row(&[h.center(b).into(), count.into(), (n * r.predicted[b + 1]).into(), fr.into()]);
    }
    let mut out = Outcome {
        artifacts: vec![Artifact::new("diffraction.csv", c.finish())],
        ..Default::default()
    };
    if svg {
        let xs = (0..h.counts.len()).map(|b| h.center(b));
        let mut series = vec![
            Series::new(
                "counts",
                xs.clone().zip(h.counts.iter().map(|&c| c as f64)).collect(),
                "black",
            ),
            Series::new(
                "propagated",
                xs.clone()
                    .zip(r.predicted[1..=h.counts.len()].iter().map(|p| n * p))
                    .collect(),
                "red",
            ),
        ];
        if let Some(f) = &r.fraunhofer {
            series.push(Series::new(
                "sinc^2",
                xs.zip(f[1..=h.counts.len()].iter().map(|p| n * p)).collect(),
                "blue",
            ));
        }
        out.artifacts.push(Artifact::new(
            "diffraction.svg",
            line_plot("slit landings", "x", "count", &series),
        ));
    }
    out.metric("fresnel_number", r.setup.fresnel_number());
    out.metric("p_propagated", r.vs_propagated.p_value);
    if let Some(t) = &r.vs_fraunhofer {
        out.metric("p_fraunhofer", t.p_value);
    }
    if let Some(m) = r.first_minimum() {
        out.metric("first_minimum", m);
    }
    out.metric("spread", r.setup.spread());
    out.metric("interior_maxima", r.interior_maxima() as f64);
    out
}
