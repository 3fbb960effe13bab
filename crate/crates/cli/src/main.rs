use anyhow::{bail, Context};
use clap::Parser;
use mptc_cli::{
    builtin, emit_plot_data, run_grid, to_csv, CliError, GridResult, RunOptions, ScenarioConfig,
};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run replicated-log scenarios in the deterministic simulator.
#[derive(Debug, Parser)]
#[command(name = "mptc", version)]
struct Args {
    /// Scenario JSON file; repeatable.
    #[arg(long = "scenario", value_name = "PATH")]
    scenarios: Vec<PathBuf>,
    /// Builtin scenario: no-attack, attack-leader-reconfig or attack-leader-static; repeatable.
    #[arg(long = "builtin", value_name = "NAME")]
    builtins: Vec<String>,
    /// Runs per point, seeded from the scenario seed upward.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Comma-separated client counts, overriding the scenarios.
    #[arg(long, value_delimiter = ',')]
    clients: Option<Vec<usize>>,
    /// Override every scenario's duration, in seconds.
    #[arg(long, value_name = "SECONDS")]
    duration: Option<f64>,
    /// Write the wire-format delivery trace of the first run (or of the
    /// failing run when a monitor trips).
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Directory for results.csv, throughput.dat and latency.dat.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn load(args: &Args) -> anyhow::Result<Vec<ScenarioConfig>> {
    let mut configs = Vec::new();
    for path in &args.scenarios {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        configs.push(
            ScenarioConfig::from_json(&text).with_context(|| format!("in {}", path.display()))?,
        );
    }
    for name in &args.builtins {
        configs.push(builtin(name)?);
    }
    if configs.is_empty() {
        bail!("give at least one --scenario or --builtin");
    }
    if let Some(d) = args.duration {
        for c in &mut configs {
            c.duration_s = d;
            c.validate()?;
        }
    }
    Ok(configs)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let configs = match load(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seeds: args.seeds,
        clients: args.clients.clone(),
        trace: args.trace.is_some(),
    };
    let mut grid = GridResult::default();
    let outcome = run_grid(&configs, &opts, &mut grid);
    if let (Some(path), Some(bytes)) = (&args.trace, &grid.trace) {
        if let Err(e) = std::fs::write(path, bytes) {
            eprintln!("error: writing {}: {e}", path.display());
            return ExitCode::from(2);
        }
    }
    let csv = to_csv(&grid.rows);
    print!("{csv}");
    if let Some(dir) = &args.out {
        if let Err(e) = write_out(dir, &csv, &grid) {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Monitor { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn write_out(dir: &PathBuf, csv: &str, grid: &GridResult) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("results.csv"), csv)?;
    match emit_plot_data(&grid.rows) {
        Ok(p) => {
            std::fs::write(dir.join("throughput.dat"), p.throughput)?;
            std::fs::write(dir.join("latency.dat"), p.latency)?;
        }
        Err(e) => eprintln!("warning: {e}; plot files not written"),
    }
    Ok(())
}
