use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use trotterlab::cli::{self, DecayTable, ExperimentConfig};

/// Trotterized XXX chain experiments: charges, decay, spectra, tomography, mitigation and fits.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    /// JSON experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Export the configured charges as JSON.
    Charges,
    /// Charge expectation values versus Trotter depth.
    Decay,
    /// Eigenvalues of the noisy one-step channel.
    Spectrum,
    /// Tomographic fidelities along the evolution.
    Tomo,
    /// Readout correction plus zero-noise extrapolation.
    Mitigate,
    /// Fit a decay table (rates, early slopes, benchmark verdicts).
    Fit {
        /// Decay CSV to fit; defaults to `decay.csv` in the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn run(args: Args) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker pool")?;
    }
    let out = args.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let files = match &args.verb {
        Verb::Charges => cli::charge_artifacts(&cfg)?,
        Verb::Decay => {
            let table = cli::run_decay(&cfg)?;
            for w in &table.warnings {
                eprintln!("warning: {w}");
            }
            cli::decay_artifacts(&cfg, &table)?
        }
        Verb::Spectrum => cli::spectrum_artifacts(&cfg, &cli::run_spectrum(&cfg)?)?,
        Verb::Tomo => cli::tomo_artifacts(&cfg, &cli::run_tomo(&cfg)?)?,
        Verb::Mitigate => {
            eprintln!("noise: {}", cli::describe_noise(&cfg.mitigation.noise));
            cli::mitigation_artifacts(&cfg, &cli::run_mitigation(&cfg)?)?
        }
        Verb::Fit { input } => {
            let path = input.clone().unwrap_or_else(|| out.join("decay.csv"));
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            let table = DecayTable::from_csv(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
            let fits = cli::run_fit(&cfg, &table)?;
            for f in &fits {
                for n in &f.notes {
                    eprintln!("{}: {n}", f.charge);
                }
            }
            cli::fit_artifacts(&cfg, &fits)?
        }
    };
    for path in cli::write_artifacts(&out, &files)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
