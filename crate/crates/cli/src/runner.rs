//! Runs a grid of (scenario, client count, seed) and formats the results.

use crate::config::ScenarioConfig;
use crate::error::CliError;
use mptc_simnet::{run_smr, RunReport, SimError};
use std::fmt::Write as _;

pub const CSV_HEADER: &str =
    "scenario,clients,throughput_ops_s,mean_latency_us,p99_latency_us,reconfigs,seed";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scenario: String,
    pub clients: usize,
    pub throughput_ops_s: f64,
    pub mean_latency_us: f64,
    pub p99_latency_us: u64,
    pub reconfigs: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Seeds per point; seed k is the scenario seed plus k.
    pub seeds: u64,
    /// Overrides the scenario's client counts.
    pub clients: Option<Vec<usize>>,
    /// Record the full delivery trace of the first run.
    pub trace: bool,
}

#[derive(Debug, Default)]
pub struct GridResult {
    pub rows: Vec<Row>,
    /// Wire-format trace: the first run's deliveries, or the deliveries
    /// leading up to a monitor trip.
    pub trace: Option<Vec<u8>>,
}

pub fn run_one(
    cfg: &ScenarioConfig,
    clients: usize,
    seed: u64,
    full_trace: bool,
) -> Result<RunReport, SimError> {
    let mut sc = cfg
        .to_smr(clients, seed)
        .map_err(|e| SimError::Scenario(e.to_string()))?;
    sc.full_trace = full_trace;
    run_smr(&sc)
}

/// Runs every point. Stops at the first monitor trip; the returned error
/// carries the counterexample trace in `partial.trace`.
pub fn run_grid(
    configs: &[ScenarioConfig],
    opts: &RunOptions,
    partial: &mut GridResult,
) -> Result<(), CliError> {
    let seeds = opts.seeds.max(1);
    for cfg in configs {
        let clients = opts.clients.clone().unwrap_or_else(|| cfg.clients.clone());
        for &c in &clients {
            if c == 0 || c > crate::config::MAX_CLIENTS {
                return Err(CliError::Config(format!(
                    "client counts must be in 1..={}",
                    crate::config::MAX_CLIENTS
                )));
            }
            for k in 0..seeds {
                let seed = cfg.seed.wrapping_add(k);
                let first = opts.trace && partial.trace.is_none();
                let report = match run_one(cfg, c, seed, first) {
                    Ok(r) => r,
                    Err(SimError::Monitor {
                        at_us,
                        detail,
                        trace,
                    }) => {
                        if opts.trace {
                            partial.trace = Some(trace.iter().flat_map(|t| t.encode()).collect());
                        }
                        return Err(CliError::Monitor {
                            scenario: cfg.name.clone(),
                            clients: c,
                            seed,
                            at_us,
                            detail,
                        });
                    }
                    Err(source) => {
                        return Err(CliError::Sim {
                            scenario: cfg.name.clone(),
                            clients: c,
                            seed,
                            source,
                        })
                    }
                };
                if first {
                    partial.trace = Some(report.trace.clone().unwrap_or_default());
                }
                let m = &report.metrics;
                partial.rows.push(Row {
                    scenario: cfg.name.clone(),
                    clients: c,
                    throughput_ops_s: m.throughput_ops_s(),
                    mean_latency_us: m.mean_latency_us(),
                    p99_latency_us: m.p99_latency_us(),
                    reconfigs: m.reconfigurations,
                    seed,
                });
            }
        }
    }
    Ok(())
}

pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(|a, b| {
        (a.scenario.as_str(), a.clients, a.seed).cmp(&(b.scenario.as_str(), b.clients, b.seed))
    });
}

/// Canonical CSV: sorted rows, fixed precision.
pub fn to_csv(rows: &[Row]) -> String {
    let mut rows = rows.to_vec();
    sort_rows(&mut rows);
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        writeln!(
            out,
            "{},{},{:.3},{:.1},{},{},{}",
            r.scenario,
            r.clients,
            r.throughput_ops_s,
            r.mean_latency_us,
            r.p99_latency_us,
            r.reconfigs,
            r.seed
        )
        .expect("writing to a String");
    }
    out
}
