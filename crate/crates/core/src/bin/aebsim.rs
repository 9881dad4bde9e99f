use aeb_testbench::config::RunConfig;
use aeb_testbench::fmcw::{
    estimate_range_doppler, range_doppler_map, synthesize_beat, FmcwWaveform, PointTarget,
};
use aeb_testbench::scenario::catalog;
use aeb_testbench::sim::{self, compare_runs, csv, plot, RunResult};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "aebsim", version, about = "Closed-loop AEB testbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV log.
    Run {
        /// Built-in scenario name or path to a TOML file.
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides the scenario duration, s.
        #[arg(long)]
        duration: Option<f64>,
        /// Overrides the controller sample time, s.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Log controller decisions but never brake.
        #[arg(long)]
        no_aeb: bool,
        #[arg(long)]
        emit_plots: bool,
    },
    /// Print the built-in scenarios.
    ListScenarios,
    /// Run with and without AEB and report the mitigation.
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate two point targets through the FMCW chain and write the
    /// range-Doppler magnitude map as CSV.
    FmcwDemo {
        #[arg(long, default_value = "range_doppler.csv")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

fn load(scenario: &str, duration: Option<f64>, dt: Option<f64>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::resolve(scenario).map_err(|e| Failure::Config(e.to_string()))?;
    if let Some(d) = duration {
        cfg.scenario.duration = d;
    }
    if let Some(dt) = dt {
        cfg.controller.sample_time = dt;
    }
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    Ok(cfg)
}

fn simulate(cfg: &RunConfig, seed: u64, aeb: bool) -> Result<RunResult, Failure> {
    sim::run(&cfg.scenario, &cfg.sensors, &cfg.tracker, &cfg.controller, seed, aeb)
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn execute(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Run {
            scenario,
            seed,
            duration,
            dt,
            out,
            no_aeb,
            emit_plots,
        } => {
            let cfg = load(&scenario, duration, dt)?;
            let result = simulate(&cfg, seed, !no_aeb)?;
            std::fs::create_dir_all(&out).map_err(io_err(&out))?;
            let stem = format!("{}_seed{}{}", cfg.scenario.name, seed, if no_aeb { "_noaeb" } else { "" });
            let csv_path = out.join(format!("{stem}.csv"));
            csv::emit_csv(&result, &csv_path).map_err(io_err(&csv_path))?;
            println!("wrote {}", csv_path.display());
            if emit_plots {
                for p in plot::emit_plots(&result, &out.join(&stem)).map_err(io_err(&out))? {
                    println!("wrote {}", p.display());
                }
            }
            let c = &result.collision;
            if c.collided {
                println!(
                    "collision at t = {:.2} s, impact speed {:.2} m/s",
                    c.time.unwrap_or(0.0),
                    result.impact_speed()
                );
            } else {
                println!("no collision, final speed {:.2} m/s", result.final_speed());
            }
            Ok(c.collided)
        }
        Command::ListScenarios => {
            for s in catalog() {
                println!("{}", s.name);
            }
            Ok(false)
        }
        Command::Compare { scenario, seed } => {
            let cfg = load(&scenario, None, None)?;
            let on = simulate(&cfg, seed, true)?;
            let off = simulate(&cfg, seed, false)?;
            let summary = compare_runs(&on, &off).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("{summary}");
            Ok(on.collision.collided)
        }
        Command::FmcwDemo { out, seed } => {
            let w = FmcwWaveform::default();
            let targets = [
                PointTarget::new(40.0, -10.0),
                PointTarget {
                    reflect_amplitude: 0.5,
                    ..PointTarget::new(75.0, 8.0)
                },
            ];
            let fmcw_err = |e: aeb_testbench::fmcw::FmcwError| Failure::Runtime(e.to_string());
            let cube = synthesize_beat(&w, &targets, 0.05, seed).map_err(fmcw_err)?;
            let map = range_doppler_map(&cube, &w).map_err(fmcw_err)?;
            std::fs::write(&out, map.to_csv()).map_err(io_err(&out))?;
            println!("wrote {}", out.display());
            for e in estimate_range_doppler(&cube, &w).map_err(fmcw_err)? {
                println!("target: range {:.2} m, radial speed {:.2} m/s", e.range, e.radial_speed);
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(Failure::Config(m) | Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
