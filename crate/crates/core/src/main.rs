use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hmasim::cli_io::{load_config, run_preset, run_to_dir, ExperimentPreset, PresetName};

#[derive(Parser)]
#[command(name = "hmasim", version, about = "Hybrid multiple access RAN slicing simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train and evaluate one configuration; writes metrics.csv and summary.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides sim.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a named experiment: rate_vs_eps, power_alloc or oracle_check.
    Preset {
        name: PresetName,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match real_main(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Run { config, seed, reps, out } => {
            let (mut cfg, warnings) = load_config(&config, |k| std::env::var(k).ok())?;
            warnings.iter().for_each(|w| eprintln!("warning: {w}"));
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let s = run_to_dir(&cfg, reps, &out)?;
            let (lo, hi) = s.ns_outage_ci();
            println!(
                "reliable rate {:.1} bit/s (±{:.1}), NS outage {:.3e} [{:.3e}, {:.3e}] over {} attempts",
                s.goodput_mean_bps, s.goodput_half_width_bps, s.ns_outage_rate, lo, hi, s.ns_attempts
            );
            println!("wrote {}", out.display());
        }
        Cmd::Preset { name, out, reps, seed } => {
            let mut p = ExperimentPreset::new(name);
            if let Some(r) = reps {
                p.reps = r;
            }
            if let Some(s) = seed {
                p.base.seed = s;
            }
            let path = run_preset(&p, &out)?;
            println!("wrote {}", path.display());
        }
        Cmd::Validate { config } => {
            let (_, warnings) = load_config(&config, |k| std::env::var(k).ok())?;
            warnings.iter().for_each(|w| eprintln!("warning: {w}"));
            println!("{}: ok", config.display());
        }
    }
    Ok(())
}
