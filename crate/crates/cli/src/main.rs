use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use continuum_core::harness::{self, ExperimentConfig};

/// Experiments on a simulated tendon-driven continuum robot.
#[derive(Debug, Parser)]
#[command(name = "continuum-lab", version)]
struct Cli {
    /// TOML experiment config; unspecified keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the plant, exploration and training seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for artifacts; upstream artifacts are read from here too.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Explore the unloaded workspace and write dataset.csv.
    Collect,
    /// Train the configured model and write model.json.
    Train,
    /// Score the checkpoint on the validation split.
    Eval,
    /// Train the LSTM/CNN grid and write the comparison table.
    Compare,
    /// Wall impulses with the compliance controller.
    Impulse,
    /// Repeated tube insertion with and without compliance.
    Insert,
    /// Coin-weight calibration of the tip coupling.
    Calibrate,
    /// Triangle-wave drive of one cable at several speeds.
    RateStatics,
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::PrintConfig => print!("{}", cfg.to_toml_string()?),
        Command::Collect => {
            let o = harness::run_collect(&cfg, out)?;
            println!(
                "collected {} records, {} faults, {:.1}% out of range",
                o.dataset.len(),
                o.faults,
                100.0 * o.out_of_range_fraction
            );
        }
        Command::Train => {
            let (o, _) = harness::run_train(&cfg, out)?;
            if let Some(last) = o.history.last() {
                println!("{} epochs, validation mean error {:.4} N", o.history.len(), last.val_mean_error);
            }
        }
        Command::Eval => {
            let r = harness::run_eval(&cfg, out)?;
            println!(
                "{} n={}: mean error {:.4} N ({:.3} of tension std), lambda {:.4} N",
                r.model, r.window_len, r.val_mean_error, r.relative_error, r.lambda
            );
        }
        Command::Compare => {
            let r = harness::run_compare(&cfg, out)?;
            for c in &r.cells {
                match c.mean_error {
                    Some(e) => println!("{:<16} {:.4} N", c.label, e),
                    None => println!("{:<16} {:?}", c.label, c.status),
                }
            }
        }
        Command::Impulse => {
            let r = harness::run_impulse(&cfg, out)?;
            let passed = r.trials.iter().filter(|t| t.passed == Some(true)).count();
            println!("{passed}/{} impulses recovered, lambda {:.4} N", r.trials.len(), r.lambda);
        }
        Command::Insert => {
            let r = harness::run_insert(&cfg, out)?;
            println!(
                "peak contact force {:.3} N with compliance, {:.3} N without",
                r.enabled.peak_force, r.disabled.peak_force
            );
        }
        Command::Calibrate => {
            let r = harness::run_calibrate(&cfg, out)?;
            println!(
                "alpha = 1/{:.3} from {} trials, ground truth 1/{:.3}, relative error {:.2}%",
                1.0 / r.fit.alpha,
                r.fit.trials,
                1.0 / r.ground_truth_alpha,
                100.0 * r.relative_error
            );
        }
        Command::RateStatics => {
            let r = harness::run_rate_statics(&cfg, out)?;
            for t in &r.traces {
                println!("{:>5} mm/s: {} rows, max deviation {:.3} N", t.speed, t.t.len(), t.max_deviation(r.cable));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
