use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Lattice,
    Born,
    Clt,
    Observable,
    QubitCorr,
    Wiener,
    Diffraction,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Lattice => "lattice",
            Subcommand::Born => "born",
            Subcommand::Clt => "clt",
            Subcommand::Observable => "observable",
            Subcommand::QubitCorr => "qubit-corr",
            Subcommand::Wiener => "wiener",
            Subcommand::Diffraction => "diffraction",
        }
    }
}

/// Soliton chain summed into a plane wave.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeParams {
    pub m: f64,
    pub v: f64,
    /// Spectral width of the packet in units of `m`.
    pub spectral_width: f64,
    /// Minimum node spacing in units of `l0`; moving chains round it up to
    /// a spacing commensurate with the de Broglie momentum.
    pub spacing: f64,
    pub n_nodes: usize,
    pub doublings: usize,
    pub window_points: usize,
    pub window_dx: f64,
    pub times: usize,
    pub dt: f64,
    pub profile_points: usize,
    pub profile_dx: f64,
}

impl Default for LatticeParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            v: 0.0,
            spectral_width: 0.005,
            spacing: 20.0,
            n_nodes: 27,
            doublings: 3,
            window_points: 64,
            window_dx: 1.0,
            times: 16,
            dt: 0.5,
            profile_points: 1 << 14,
            profile_dx: 1.0,
        }
    }
}

/// Two-component Gaussian mixture of soliton centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BornParams {
    pub l0: f64,
    pub n_trials: usize,
    /// Cell size in units of `l0`.
    pub cell: f64,
    pub weight1: f64,
    pub mean1: f64,
    pub sd1: f64,
    pub mean2: f64,
    pub sd2: f64,
    /// Consecutive seeds starting at the run seed.
    pub seeds: u64,
}

impl Default for BornParams {
    fn default() -> Self {
        Self {
            l0: 0.1,
            n_trials: 10_000,
            cell: 10.0,
            weight1: 0.4,
            mean1: -1.5,
            sd1: 0.6,
            mean2: 1.5,
            sd2: 0.8,
            seeds: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CltParams {
    pub l0: f64,
    pub n_trials: usize,
    pub replicas: usize,
    pub mean: f64,
    pub sd: f64,
    pub probes: Vec<f64>,
}

impl Default for CltParams {
    fn default() -> Self {
        Self {
            l0: 0.05,
            n_trials: 200,
            replicas: 2000,
            mean: 0.0,
            sd: 1.0,
            probes: vec![-1.0, 0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservableParams {
    pub l0: Vec<f64>,
    pub n_trials: usize,
    pub mean: f64,
    pub sd: f64,
    pub seeds: u64,
}

impl Default for ObservableParams {
    fn default() -> Self {
        Self {
            l0: vec![0.2, 0.1, 0.05],
            n_trials: 10_000,
            mean: 2.0,
            sd: 1.0,
            seeds: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QubitCorrParams {
    pub n_samples: usize,
    /// Number of `Δθ` values spread evenly over `[0, π]`.
    pub steps: usize,
    /// Zero draws phases uniformly; otherwise phases are recovered from
    /// this many two-particle soliton trials.
    pub solitonic_trials: usize,
}

impl Default for QubitCorrParams {
    fn default() -> Self {
        Self {
            n_samples: 1_000_000,
            steps: 9,
            solitonic_trials: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WienerParams {
    pub p: u32,
    pub n_paths: usize,
    pub n_functions: usize,
    pub max_mode: u32,
    pub covariance_paths: usize,
}

impl Default for WienerParams {
    fn default() -> Self {
        Self {
            p: 10,
            n_paths: 100_000,
            n_functions: 20,
            max_mode: 8,
            covariance_paths: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiffractionParams {
    pub w: f64,
    pub lambda: f64,
    #[serde(rename = "L")]
    pub distance: f64,
    pub n_trials: usize,
    pub bins: usize,
    /// Screen half-width; zero picks a default covering the pattern.
    pub half_width: f64,
}

impl Default for DiffractionParams {
    fn default() -> Self {
        Self {
            w: 1.0,
            lambda: 0.01,
            distance: 2000.0,
            n_trials: 100_000,
            bins: 240,
            half_width: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Lattice(LatticeParams),
    Born(BornParams),
    Clt(CltParams),
    Observable(ObservableParams),
    QubitCorr(QubitCorrParams),
    Wiener(WienerParams),
    Diffraction(DiffractionParams),
}

impl Params {
    pub fn defaults(sub: Subcommand) -> Self {
        match sub {
            Subcommand::Lattice => Params::Lattice(Default::default()),
            Subcommand::Born => Params::Born(Default::default()),
            Subcommand::Clt => Params::Clt(Default::default()),
            Subcommand::Observable => Params::Observable(Default::default()),
            Subcommand::QubitCorr => Params::QubitCorr(Default::default()),
            Subcommand::Wiener => Params::Wiener(Default::default()),
            Subcommand::Diffraction => Params::Diffraction(Default::default()),
        }
    }

    /// Parses the `[params]` table for `sub`.
    pub fn parse(sub: Subcommand, table: &toml::Table) -> Result<Self, CliError> {
        // Round-trip through text so diagnostics quote the offending key.
        let text = toml::to_string(table).map_err(|e| CliError::Config(e.to_string()))?;
        fn read<T: DeserializeOwned>(text: &str) -> Result<T, CliError> {
            toml::from_str(text).map_err(|e| CliError::Config(format!("[params] {}", e.to_string().trim_end())))
        }
        Ok(match sub {
            Subcommand::Lattice => Params::Lattice(read(&text)?),
            Subcommand::Born => Params::Born(read(&text)?),
            Subcommand::Clt => Params::Clt(read(&text)?),
            Subcommand::Observable => Params::Observable(read(&text)?),
            Subcommand::QubitCorr => Params::QubitCorr(read(&text)?),
            Subcommand::Wiener => Params::Wiener(read(&text)?),
            Subcommand::Diffraction => Params::Diffraction(read(&text)?),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    subcommand: Subcommand,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    svg: Option<bool>,
    #[serde(default)]
    params: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: usize,
    pub svg: bool,
    pub params: Params,
}

pub const DEFAULT_SEED: u64 = 0;

impl RunConfig {
    pub fn new(subcommand: Subcommand) -> Self {
        Self {
            subcommand,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
            threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            svg: false,
            params: Params::defaults(subcommand),
        }
    }

    pub fn with_params(params: Params) -> Self {
        let sub = match &params {
            Params::Lattice(_) => Subcommand::Lattice,
            Params::Born(_) => Subcommand::Born,
            Params::Clt(_) => Subcommand::Clt,
            Params::Observable(_) => Subcommand::Observable,
            Params::QubitCorr(_) => Subcommand::QubitCorr,
            Params::Wiener(_) => Subcommand::Wiener,
            Params::Diffraction(_) => Subcommand::Diffraction,
        };
        Self {
            params,
            ..Self::new(sub)
        }
    }
}

/// Parses a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))?;
    let mut cfg = RunConfig::new(file.subcommand);
    cfg.params = Params::parse(file.subcommand, &file.params)?;
    if let Some(seed) = file.seed {
        cfg.seed = seed;
    }
    if let Some(out) = file.out {
        cfg.out = out;
    }
    if let Some(threads) = file.threads {
        cfg.threads = threads;
    }
    if let Some(svg) = file.svg {
        cfg.svg = svg;
    }
    validate(&cfg)?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Checks the knobs that belong to the runner rather than to a module.
pub fn validate(cfg: &RunConfig) -> Result<(), CliError> {
    let bad = |key: &str, why: &str| Err(CliError::Config(format!("`{key}` {why}")));
    if cfg.threads == 0 {
        return bad("threads", "must be at least 1");
    }
    match &cfg.params {
        Params::Lattice(p) if p.doublings == 0 => bad("params.doublings", "must be at least 1"),
        Params::Lattice(p) if p.times < 2 => bad("params.times", "must be at least 2"),
        Params::Born(p) if p.seeds == 0 => bad("params.seeds", "must be at least 1"),
        Params::Born(p) if !(p.weight1 > 0.0 && p.weight1 < 1.0) => bad("params.weight1", "must lie in (0, 1)"),
        Params::Observable(p) if p.seeds == 0 => bad("params.seeds", "must be at least 1"),
        Params::Observable(p) if p.l0.is_empty() => bad("params.l0", "needs at least one size"),
        Params::Clt(p) if p.probes.is_empty() => bad("params.probes", "needs at least one point"),
        Params::QubitCorr(p) if p.steps < 2 => bad("params.steps", "must be at least 2"),
        Params::Wiener(p) if p.n_functions == 0 => bad("params.n_functions", "must be at least 1"),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_qubit_config_fills_defaults() {
        let cfg = parse_config("subcommand = \"qubit-corr\"\nseed = 7\n[params]\nn_samples = 1000000\n").unwrap();
        assert_eq!(cfg.seed, 7);
        match cfg.params {
            Params::QubitCorr(p) => {
                assert_eq!(p.n_samples, 1_000_000);
                assert_eq!(p.steps, 9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config("subcommand = \"born\"\n[params]\nl0 = 0.1\ncells = 3\n").unwrap_err();
        assert!(err.to_string().contains("cells"), "{err}");
        let err = parse_config("subcommand = \"born\"\nsed = 3\n").unwrap_err();
        assert!(err.to_string().contains("sed"), "{err}");
    }

    #[test]
    fn type_mismatch_is_named() {
        let err = parse_config("subcommand = \"wiener\"\n[params]\np = \"ten\"\n").unwrap_err();
        assert!(err.to_string().contains("p = "), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn parsing_is_deterministic() {
        let text = "subcommand = \"diffraction\"\nseed = 3\n[params]\nL = 10.0\n";
        assert_eq!(parse_config(text).unwrap(), parse_config(text).unwrap());
    }

    #[test]
    fn runner_constraints() {
        assert!(parse_config("subcommand = \"born\"\nthreads = 0\n").is_err());
        assert!(parse_config("subcommand = \"observable\"\n[params]\nl0 = []\n").is_err());
    }
}
