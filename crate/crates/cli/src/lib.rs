//! Runner for the stochastic soliton experiments: TOML configuration,
//! deterministic execution on a sized thread pool, CSV/SVG artifacts and
//! a JSON manifest.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::Path;
use std::time::Instant;

pub use config::{parse_config, read_config, Params, RunConfig, Subcommand};
pub use error::CliError;
pub use output::{Artifact, Manifest, Outcome};

/// Runs `f` on a pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("`threads`: {e}")))?;
    Ok(pool.install(f))
}

/// Computes the artifacts of `cfg` without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    config::validate(cfg)?;
    let ctx = cfg.subcommand.name();
    let err = CliError::numerical;
    with_threads(cfg.threads, || {
        let seed = cfg.seed;
        let svg = cfg.svg;
        match &cfg.params {
            Params::Lattice(p) => experiments::lattice::run(p).map(|r| r.outcome(svg)),
            Params::Born(p) => experiments::born::run(p, seed).map(|r| r.outcome(svg)),
            Params::Clt(p) => experiments::clt::run(p, seed).map(|r| r.outcome(svg)),
            Params::Observable(p) => experiments::observable::run(p, seed).map(|r| r.outcome(svg)),
            Params::QubitCorr(p) => experiments::qubit::run(p, seed).map(|r| r.outcome(svg)),
            Params::Wiener(p) => experiments::wiener::run(p, seed).map(|r| r.outcome(svg)),
            Params::Diffraction(p) => experiments::diffraction::run(p, seed).map(|r| experiments::diffraction::outcome(&r, svg)),
        }
    })?
    .map_err(err(ctx))
}

/// Executes `cfg` and writes its artifacts and `manifest.json` into
/// `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<Manifest, CliError> {
    let start = Instant::now();
    let outcome = execute(cfg)?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(&cfg.out).map_err(io(&cfg.out))?;
    for a in &outcome.artifacts {
        let path = cfg.out.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(io(&path))?;
    }
    let manifest = Manifest {
        subcommand: cfg.subcommand.name().to_string(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads: cfg.threads,
        params: serde_json::to_value(&cfg.params).expect("params serialize"),
        files: outcome.artifacts.iter().map(|a| a.name.clone()).collect(),
        metrics: outcome.metrics,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let path = cfg.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(io(&path))?;
    Ok(manifest)
}
