use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use nrbeam::experiment::{parse_methods, parse_snr_grid};
use nrbeam::{run_experiment, ExperimentConfig};

/// Monte Carlo beam-pair detection experiments for SSB initial access.
///
/// Writes summary.csv (detection probabilities per SNR and method) and
/// error_cdf.csv (beam-index error counts) into the output directory.
#[derive(Debug, Parser)]
#[command(name = "nrbeam", version)]
struct Args {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Channel realizations per SNR point.
    #[arg(long)]
    trials: Option<usize>,

    /// SNR grid in dB, as start:step:stop or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,

    /// Comma-separated methods: ES, OMP-Random, OMP-DFT, OMP-MultiBeam,
    /// OMP-Designed.
    #[arg(long)]
    methods: Option<String>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
}

fn build_config(args: &Args) -> nrbeam::Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(n) = args.trials {
        cfg.n_trials = n;
    }
    if let Some(snr) = &args.snr {
        cfg.snr_grid_db = parse_snr_grid(snr)?;
    }
    if let Some(methods) = &args.methods {
        cfg.methods = parse_methods(methods)?;
    }
    if let Some(out) = &args.out {
        cfg.output_path = Some(out.clone());
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if cfg.output_path.is_none() {
        cfg.output_path = Some(PathBuf::from("results"));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let start = Instant::now();
    let result = build_config(&args).and_then(|cfg| run_experiment(&cfg).map(|r| (cfg, r)));
    match result {
        Ok((cfg, results)) => {
            let out = cfg.output_path.unwrap_or_default();
            eprintln!(
                "{} records, {} groups written to {} in {:.1}s",
                results.records.len(),
                results.summary.len(),
                out.display(),
                start.elapsed().as_secs_f64()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
