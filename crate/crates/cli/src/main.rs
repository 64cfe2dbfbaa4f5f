//! roughdrive: simulate rough differential equations driven through the
//! fractional stochastic heat equation and verify their quantitative laws.
//!
//! Exit codes: 0 all experiments pass, 1 experiment failure or numeric error,
//! 2 configuration error.

mod config;
mod run;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "roughdrive", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the derived model constants for a Hurst exponent.
    Params {
        /// Hurst exponent in (0, 1/4].
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 1.0)]
        y0: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
    /// Build the stable density table and dump it as CSV.
    Kernel {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 5001)]
        resolution: usize,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the coupled simulation and dump traces (replica, t, u0, v0, xi).
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run verification experiments (a selector may restrict the set).
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated experiment names; defaults to the config list.
        #[arg(long, value_delimiter = ',')]
        experiments: Option<Vec<String>>,
    },
    /// Run every experiment.
    All {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig, ExitCode> {
    match RunConfig::load(path) {
        Ok(mut cfg) => {
            if let Some(s) = seed {
                cfg.seed = Some(s);
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            Ok(cfg)
        }
        Err(problems) => {
            for p in &problems {
                eprintln!("config error: {p}");
            }
            Err(ExitCode::from(2))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Params { h, y0, t } => match roughdrive_core::derive_params(h, y0, t) {
            Ok(p) => {
                println!("{}", serde_json::to_string_pretty(&p).expect("serializable"));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
        Command::Kernel {
            alpha,
            resolution,
            out,
        } => match roughdrive_core::kernel::build_table(alpha, resolution) {
            Ok(table) => {
                let mut buf = Vec::new();
                if let Err(e) = table.write_csv(&mut buf) {
                    eprintln!("{e}");
                    return ExitCode::from(1);
                }
                if let Err(e) = std::fs::write(&out, buf) {
                    eprintln!("cannot write {}: {e}", out.display());
                    return ExitCode::from(1);
                }
                println!("kernel table (alpha = {alpha}) -> {}", out.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
        Command::Simulate { config, seed, out } => {
            let cfg = match load_config(&config, seed, out) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
                eprintln!("cannot create output dir: {e}");
                return ExitCode::from(2);
            }
            let path = cfg.output_dir.join("trace.csv");
            match run::dump_trace(&cfg, &path) {
                Ok(p) => {
                    println!("traces -> {}", p.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Verify {
            config,
            seed,
            out,
            experiments,
        } => {
            let cfg = match load_config(&config, seed, out) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(list) = &experiments {
                for e in list {
                    if !config::EXPERIMENTS.contains(&e.as_str()) {
                        eprintln!("config error: unknown experiment '{e}'");
                        return ExitCode::from(2);
                    }
                }
            }
            ExitCode::from(run::run(cfg, experiments) as u8)
        }
        Command::All { config, seed, out } => {
            let cfg = match load_config(&config, seed, out) {
                Ok(c) => c,
                Err(code) => return code,
            };
            ExitCode::from(run::run(cfg, None) as u8)
        }
    }
}
