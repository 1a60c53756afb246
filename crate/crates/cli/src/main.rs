use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use solqm_cli::{read_config, run, CliError, RunConfig, Subcommand};

/// Stochastic soliton Monte Carlo experiments.
#[derive(Debug, Parser)]
#[command(name = "solqm", version)]
struct Args {
    /// Experiment to run; taken from the config file when omitted.
    #[arg(value_enum)]
    subcommand: Option<Subcommand>,

    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,

    #[arg(long, action = clap::ArgAction::Set)]
    svg: Option<bool>,
}

fn resolve(args: Args) -> Result<RunConfig, CliError> {
    let mut cfg = match (&args.config, args.subcommand) {
        (Some(path), sub) => {
            let cfg = read_config(path)?;
            if let Some(sub) = sub.filter(|s| *s != cfg.subcommand) {
                return Err(CliError::Config(format!(
                    "subcommand `{}` conflicts with `{}` in {}",
                    sub.name(),
                    cfg.subcommand.name(),
                    path.display()
                )));
            }
            cfg
        }
        (None, Some(sub)) => RunConfig::new(sub),
        (None, None) => return Err(CliError::Config("give a subcommand or --config".into())),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if let Some(threads) = args.threads {
        cfg.threads = threads;
    }
    if let Some(svg) = args.svg {
        cfg.svg = svg;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match resolve(args).and_then(|cfg| run(&cfg)) {
        Ok(m) => {
            eprintln!("{}: wrote {} files ({:.2} s)", m.subcommand, m.files.len() + 1, m.wall_time_s);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("solqm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
