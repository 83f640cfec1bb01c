use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use faultsim::config::{dump_config, load_config, RunConfig};
use faultsim::csvio::read_trajectory;
use faultsim::report::{format_report, report_entries};
use faultsim::run::{execute, load_config_dir, run_sweep, sweep_table};
use faultsim::svg::emit_svg;
use faultsim::HarnessError;
use faultsim_core::controller::remark_k2;
use faultsim_core::scenario::certify_gains;

/// Hierarchical fault-tolerant pitch control simulator.
#[derive(Parser)]
#[command(name = "faultsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trajectory, report and plots.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `wind.seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Treat failed gain conditions as errors.
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate both gain sufficient conditions; exits 3 if either fails.
    CheckGains {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every `*.ini` in a directory and write a summary table.
    Sweep {
        #[arg(long)]
        config_dir: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the fully resolved configuration (defaults if no file given).
    DumpConfig {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Plot channels of a trajectory CSV.
    Plot {
        #[arg(long)]
        traj: PathBuf,
        /// Comma-separated column names or groups (`beta` = beta_1..beta_n).
        #[arg(long, value_delimiter = ',', required = true)]
        channels: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
    },
}

fn load(path: &Path) -> Result<RunConfig, HarnessError> {
    load_config(path).map_err(|e| match e {
        // an unreadable config is a configuration problem
        HarnessError::Io { path, source } => {
            HarnessError::Config(faultsim::ConfigError::new(None, "", source.to_string()).in_file(path))
        }
        other => other,
    })
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Simulate { config, seed, out, strict } => {
            let mut run = load(&config)?;
            if let Some(s) = seed {
                run.scenario.wind.seed = s;
            }
            run.scenario.strict |= strict;
            let output = execute(&run, Some(&out))?;
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", format_report(&report_entries(&run.scenario, &output)));
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckGains { config } => {
            let run = load(&config)?;
            let cfg = &run.scenario;
            let g = certify_gains(cfg)?;
            println!("k1 = {}", cfg.high.k1);
            println!("k1_threshold = {}", g.k1.threshold);
            println!("k1_margin = {}", g.k1.margin);
            println!("k1_satisfied = {}", g.k1.satisfied);
            println!("k2_a_r = {}", g.k2.a_r);
            println!("k2_max_eig = {}", g.k2.max_eig);
            println!("k2_satisfied = {}", g.k2.satisfied);
            let n = cfg.n_actuators();
            if let Ok(k2) = remark_k2(&cfg.nominal, &vec![1.0 / n as f64; n], 1.0) {
                let list: Vec<String> = k2.iter().map(|v| v.to_string()).collect();
                println!("aligned_k2_eps1 = {}", list.join(", "));
            }
            Ok(if g.all_satisfied() { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
        Command::Sweep { config_dir, out } => {
            let runs = load_config_dir(&config_dir)?;
            let rows = run_sweep(&runs, Some(&out))?;
            let table = sweep_table(&rows);
            std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(&out, e))?;
            let path = out.join("summary.csv");
            std::fs::write(&path, &table).map_err(|e| HarnessError::io(&path, e))?;
            print!("{table}");
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            if failed > 0 {
                eprintln!("{failed} of {} scenarios failed", rows.len());
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpConfig { config } => {
            let run = match config {
                Some(p) => load(&p)?,
                None => RunConfig::default(),
            };
            print!("{}", dump_config(&run));
            Ok(ExitCode::SUCCESS)
        }
        Command::Plot { traj, channels, out, from, to } => {
            let (t, _) = read_trajectory(&traj)?;
            let window = match (from, to) {
                (None, None) => None,
                (a, b) => Some((a.unwrap_or(f64::NEG_INFINITY), b.unwrap_or(f64::INFINITY))),
            };
            emit_svg(&t, &channels, window, &out)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
