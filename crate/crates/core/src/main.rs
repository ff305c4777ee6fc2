use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use crlab::cli::{self, RawConfig, RunError};

/// Deterministic experiments on real Cauchy-Riemann operators over tori.
#[derive(Debug, Parser)]
#[command(name = "crlab", version)]
struct Args {
    /// Config file in `key = value` form.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write an SVG plot of the sweep.
    #[arg(long, global = true)]
    plot: bool,
    /// PRNG seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    task: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fredholm index of a smooth curve.
    Index(Overrides),
    /// Sublattices of a given index.
    Covers(Overrides),
    /// Smallest singular value along a tau sweep, with refined roots.
    Sweep(Overrides),
    /// Energy identity and lower-bound constants for one section.
    Weitzenboeck(Overrides),
    /// Takagi and orthogonal-symmetric factorizations of a matrix.
    Factor(Overrides),
    /// Schur-reduced determinant near a degenerate parameter.
    Schur(Overrides),
}

#[derive(Debug, clap::Args)]
struct Overrides {
    /// `key=value` pairs replacing config entries.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(&self) -> (&'static str, &[String]) {
        match self {
            Command::Index(o) => ("index", &o.set),
            Command::Covers(o) => ("covers", &o.set),
            Command::Sweep(o) => ("sweep", &o.set),
            Command::Weitzenboeck(o) => ("weitzenboeck", &o.set),
            Command::Factor(o) => ("factor", &o.set),
            Command::Schur(o) => ("schur", &o.set),
        }
    }
}

fn execute(args: &Args) -> anyhow::Result<()> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    let (task, overrides) = args.task.split();
    raw.apply_overrides(overrides)?;
    raw.set("task", task)?;
    let mut config = raw.build()?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    config.plot |= args.plot;
    let summary = cli::run(&config)?;
    print!("{}", summary.stdout);
    Ok(())
}

fn kind(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<RunError>() {
        e.kind()
    } else if err.downcast_ref::<cli::ConfigError>().is_some() {
        "config"
    } else {
        "io"
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CRLAB_LOG", "warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let message = format!("{err:#}").replace(['\n', '\r'], " ");
            eprintln!("error kind={} message={message:?}", kind(&err));
            ExitCode::FAILURE
        }
    }
}
