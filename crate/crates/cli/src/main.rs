use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optomech::catalog::resolve;
use optomech::{list_scenarios, run_scenario, run_sweep, Config, HarnessError, ScenarioSpec, TimeSpec};

#[derive(Parser)]
#[command(name = "optomech", version, about = "Modulated cavity-mirror-quantum-dot simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a manifest without running it.
    Validate { config: String },
    /// Run a built-in scenario or a manifest file.
    Run {
        target: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a sweep manifest and write its summary table.
    Sweep {
        config: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List the built-in scenarios.
    List,
}

#[derive(Args)]
struct RunOpts {
    /// Output directory root.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Step size, e.g. `tau/4000` or `0.001`.
    #[arg(long)]
    dt: Option<TimeSpec>,
    /// Final time, e.g. `100tau`.
    #[arg(long = "t-end")]
    t_end: Option<TimeSpec>,
    /// Concurrent sweep workers.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(usize::from).unwrap_or(1)
}

fn load(target: &str, opts: Option<&RunOpts>) -> Result<Config, HarnessError> {
    let mut config = resolve(target)?;
    if let Some(opts) = opts {
        let spec = config.scenario_mut();
        if let Some(dt) = opts.dt {
            spec.dt = dt;
        }
        if let Some(t_end) = opts.t_end {
            spec.t_end = t_end;
        }
        config.validate()?;
    }
    Ok(config)
}

fn sweep_dir(base: &ScenarioSpec, out: &Path) -> PathBuf {
    base.output_dir.clone().unwrap_or_else(|| out.join(&base.name))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Validate { config } => {
            let config = load(&config, None)?;
            println!("ok: {}", config.name());
        }
        Command::List => {
            for entry in list_scenarios()? {
                println!("{:<14} {:<9} {}", entry.name, entry.kind, entry.provenance);
            }
        }
        Command::Run { target, opts } => match load(&target, Some(&opts))? {
            Config::Scenario(spec) => print_paths(&run_scenario(&spec, &opts.out)?),
            Config::Sweep(spec) => {
                let summary = run_sweep(&spec, opts.workers)?;
                print_paths(&summary.write(&sweep_dir(&spec.base, &opts.out))?);
            }
        },
        Command::Sweep { config, opts } => match load(&config, Some(&opts))? {
            Config::Sweep(spec) => {
                let summary = run_sweep(&spec, opts.workers)?;
                print_paths(&summary.write(&sweep_dir(&spec.base, &opts.out))?);
            }
            Config::Scenario(spec) => {
                return Err(HarnessError::Sweep { origin: spec.name, message: "manifest has no [sweep] table".into() })
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}
