use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use consrc::config::{Experiment, RunConfig};
use consrc::experiments::run;
use consrc::Error;

/// Constrained-pseudoinverse source reconstruction experiments.
#[derive(Parser, Debug)]
#[command(name = "consrc", version)]
struct Cli {
    experiment: Experiment,
    /// Flat TOML run configuration; missing keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Nodes on the equivalent sphere.
    #[arg(long)]
    ns: Option<usize>,
    /// Nodes on the measurement sphere.
    #[arg(long)]
    nm: Option<usize>,
    /// Singular value cut-off of the selected experiment.
    #[arg(long)]
    tol: Option<f64>,
}

fn configure(cli: &Cli) -> consrc::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.experiment = cli.experiment;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(ns) = cli.ns {
        cfg.n_s = ns;
    }
    if let Some(nm) = cli.nm {
        cfg.n_m = nm;
    }
    if let Some(tol) = cli.tol {
        cfg.set_active_tol(tol);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set_threads() -> Result<(), Error> {
    let par = match std::env::var("CONSRC_THREADS") {
        Err(_) => faer::Par::Seq,
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0 | 1) => faer::Par::Seq,
            Ok(n) => faer::Par::rayon(n),
            Err(_) => {
                return Err(Error::Config {
                    field: "CONSRC_THREADS".into(),
                    message: format!("expected a thread count, got {v:?}"),
                })
            }
        },
    };
    faer::set_global_parallelism(par);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match set_threads().and_then(|_| configure(&cli)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("consrc: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            if out.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &out.failures {
                    eprintln!("consrc: check failed: {f}");
                }
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("consrc: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("consrc: {e}");
            ExitCode::from(1)
        }
    }
}
