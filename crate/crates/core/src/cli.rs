//! `swarmcell` command-line entry point.
//!
//! Exit codes: 0 success, 1 invalid arguments or scenario, 2 I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{ControllerMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::export::{self, RunSummary};
use crate::orchestrator::{run_with, RunOptions};
use crate::sweep::{parse_count_range, run_sweep};

/// Overrides the default output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "SWARMCELL_OUT";

#[derive(Parser, Debug)]
#[command(name = "swarmcell", version, about = "QoS-driven UAV small-cell swarm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Qos,
    Flocking,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate one scenario and write metrics, trace and summary files
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Also write per-user rates (user_rates.csv)
        #[arg(long)]
        trace: bool,
    },
    /// Run the scenario once per UAV count and write steady-state metrics
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Inclusive range such as 6..21
        #[arg(long)]
        uavs: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and check a scenario without running it
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

fn out_dir(flag: Option<PathBuf>, default_name: &str) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new("swarmcell-out").join(default_name))
}

fn scenario_name(path: &Path, cfg: &ScenarioConfig) -> String {
    if cfg.name.is_empty() {
        path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
    } else {
        cfg.name.clone()
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { scenario } => {
            let cfg = ScenarioConfig::from_file(&scenario)?;
            println!(
                "{}: ok ({} users, {} UAVs, {} s)",
                scenario.display(),
                cfg.total_users(),
                cfg.uav_count,
                cfg.duration
            );
        }
        Command::Run { scenario, seed, out, mode, trace } => {
            let mut cfg = ScenarioConfig::from_file(&scenario)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            match mode {
                Some(Mode::Qos) => cfg.controller_mode = ControllerMode::QosDriven,
                Some(Mode::Flocking) => cfg.controller_mode = ControllerMode::FlockingBaseline,
                None => {}
            }
            let name = scenario_name(&scenario, &cfg);
            let dir = out_dir(out, &name);
            let output = run_with(&cfg, &RunOptions { record_user_trace: trace })?;
            let summary = RunSummary::new(&name, cfg.seed, &output);
            export::write_run(&dir, &summary, &output)?;
            if let Some(s) = &summary.steady_state {
                println!(
                    "{name}: steady state premium {:.3} Mbps ({:.1}% fulfilled), regular {:.3} Mbps ({:.1}% fulfilled)",
                    s.premium.mean_rate_mbps,
                    s.premium.fulfilled_pct,
                    s.regular.mean_rate_mbps,
                    s.regular.fulfilled_pct
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Sweep { scenario, uavs, seed, out } => {
            let counts = parse_count_range(&uavs)
                .ok_or_else(|| Error::InvalidConfig(format!("bad --uavs range `{uavs}`")))?;
            let mut cfg = ScenarioConfig::from_file(&scenario)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let name = scenario_name(&scenario, &cfg);
            let dir = out_dir(out, &format!("{name}-sweep"));
            let result = run_sweep(&cfg, &counts)?;
            export::write_sweep(&dir, &result)?;
            for e in &result.entries {
                println!(
                    "{:>3} UAVs: served {:.1}%, fulfilled {:.1}%",
                    e.uav_count, e.steady.all.served_pct, e.steady.all.fulfilled_pct
                );
            }
            println!("wrote {}", dir.display());
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
