use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use phonon_cli::{parse_config, run, CliError, Experiment, ExperimentConfig};

/// Replays phonon addition and subtraction experiments on a simulated
/// trapped ion and writes plot-ready data.
#[derive(Debug, Parser)]
#[command(name = "phonon", version)]
struct Args {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured experiment.
    #[arg(long, value_enum)]
    experiment: Option<Experiment>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Root of the run directories.
    #[arg(long, value_name = "PATH", default_value = "runs")]
    outdir: PathBuf,
    /// Run directory name (default `seed-<N>`).
    #[arg(long)]
    label: Option<String>,
    /// Noiseless pulses, exact data and exact detection probabilities.
    #[arg(long)]
    exact: bool,
    /// Shots per tomography setting or scan point, and per detection.
    #[arg(long, value_name = "N")]
    shots: Option<u64>,
}

fn configure(args: &Args) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(e) = args.experiment {
        cfg.experiment = e;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(l) = &args.label {
        cfg.label = Some(l.clone());
    }
    if let Some(n) = args.shots {
        cfg.data.shots = n;
        cfg.sequence.detection_shots = n;
    }
    cfg.exact |= args.exact;
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let outcome = configure(&args).and_then(|cfg| run(&cfg, &args.outdir));
    match outcome {
        Ok(report) => {
            print!("{}", report.render());
            if let Some(manifest) = report.artifacts.last() {
                println!("\nartifacts: {}", manifest.parent().unwrap_or(manifest).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
