use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use irs_core::PhaseResolution;
use irs_sim::config::parse_config_with;
use irs_sim::{eta_table, run, selfcheck};

#[derive(Parser)]
#[command(name = "irs-sim", version, about = "Multi-IRS mmWave beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override a config key, e.g. `--set system.b=1`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check core invariants and print one line per property.
    Selfcheck,
    /// Print the closed-form quantization loss.
    Eta {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        bits: Vec<u32>,
    },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, set, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut rc = parse_config_with(&text, &set).with_context(|| format!("in {}", config.display()))?;
            if let Some(dir) = out {
                rc.output_dir = dir;
            }
            let output = run::run(&rc)?;
            println!("wrote {} ({} rows)", output.csv_path.display(), output.result.rows.len());
            println!("wrote {}", output.meta_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Selfcheck => {
            let checks = selfcheck::selfcheck();
            for c in &checks {
                println!("{} {:<26} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} of {} checks passed", checks.len() - failed, checks.len());
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Eta { bits } => {
            for &b in &bits {
                if PhaseResolution::Bits(b).validate().is_err() {
                    bail!("b must be ≥ 1 or 'continuous' (and at most {}), got {b}", PhaseResolution::MAX_BITS);
                }
            }
            print!("{}", eta_table(&bits));
            Ok(ExitCode::SUCCESS)
        }
    }
}
