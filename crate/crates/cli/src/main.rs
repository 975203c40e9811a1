//! Command-line front end: run scenarios, compare bundles, emit budget
//! constraint curves, validate configs and list schedule presets.

use anyhow::Context;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wagesim_core::scenario::{
    compare_runs, emit_budget_constraints, run_scenario, write_example_bundle, ScenarioConfig,
};

#[derive(Parser)]
#[command(
    name = "wagesim",
    about = "Microsimulation of banded wage-subsidy and unemployment-payment designs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end and write the output bundle.
    Run {
        /// Scenario configuration (JSON).
        config: PathBuf,
    },
    /// Compare two output bundles sharing a population and seed.
    Compare {
        bundle_a: PathBuf,
        bundle_b: PathBuf,
        /// Write the delta report to a CSV file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit budget-constraint curve files for every shipped subsidy design.
    Curves {
        /// Scenario configuration (JSON); supplies the unemployment payment,
        /// tax parameters and output directory.
        config: PathBuf,
        /// Grid maximum (weekly gross earnings).
        #[arg(long, default_value_t = 1500.0)]
        max: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 1500)]
        points: usize,
    },
    /// Validate a scenario configuration without running it.
    Validate { config: PathBuf },
    /// Preset utilities.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Write a ready-to-run example bundle (config plus derived control
    /// totals for three waves) into a directory.
    InitExample {
        dir: PathBuf,
        /// Synthetic population size.
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        /// Master seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List the shipped wage-subsidy and unemployment-payment designs.
    List,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = ScenarioConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let outputs = run_scenario(&cfg)?;
            println!(
                "wrote {} ({} wave{})",
                outputs.out_dir.display(),
                outputs.waves.len(),
                if outputs.waves.len() == 1 { "" } else { "s" }
            );
            for w in &outputs.waves {
                println!(
                    "  {}: in-work {}, unemployed {}, subsidy recipients {}, out-of-work recipients {}",
                    w.label, w.aligned_in_work, w.aligned_unemployed, w.cws_recipients, w.pup_recipients
                );
            }
            Ok(())
        }
        Command::Compare { bundle_a, bundle_b, out } => {
            let report = compare_runs(&bundle_a, &bundle_b)?;
            let csv = report.to_csv_string();
            match out {
                Some(path) => {
                    std::fs::write(&path, csv)?;
                    println!("wrote {}", path.display());
                }
                None => print!("{csv}"),
            }
            if report.sign_changes.is_empty() {
                println!("# no sign changes");
            } else {
                for s in &report.sign_changes {
                    println!("# sign change: {s}");
                }
            }
            Ok(())
        }
        Command::Curves { config, max, points } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            let step = max / points as f64;
            let grid: Vec<f64> = (1..=points).map(|i| step * i as f64).collect();
            let files = emit_budget_constraints(&cfg, &grid)?;
            for (path, _) in files {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::from_file(&config)?;
            cfg.validate()?;
            println!("{} is valid", config.display());
            Ok(())
        }
        Command::Presets { action: PresetAction::List } => {
            println!("wage subsidy designs:");
            for s in wagesim_core::policy::cws_presets()? {
                println!(
                    "  {:10} effective {} basis {:?} ({} bands)",
                    s.id,
                    s.effective,
                    s.basis,
                    s.bands.len()
                );
            }
            println!("unemployment payment designs:");
            for s in wagesim_core::policy::pup_presets()? {
                println!("  {:14} effective {} ({} bands)", s.id, s.effective, s.bands.len());
            }
            Ok(())
        }
        Command::InitExample { dir, n, seed } => {
            let config = write_example_bundle(&dir, n, seed)?;
            println!("wrote {}", config.display());
            println!("run it with: wagesim run {}", config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
