//! Plot data: one column per scenario, averaged over seeds.

use crate::error::CliError;
use crate::runner::Row;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotData {
    pub throughput: String,
    pub latency: String,
}

/// Builds the throughput-vs-load and latency-vs-load tables. Scenarios are
/// columns in name order; every scenario must cover every client count.
pub fn emit_plot_data(rows: &[Row]) -> Result<PlotData, CliError> {
    if rows.is_empty() {
        return Err(CliError::Plot("no rows".into()));
    }
    // (scenario, clients) -> (throughput sum, latency sum, count)
    let mut acc: BTreeMap<(&str, usize), (f64, f64, u32)> = BTreeMap::new();
    let mut scenarios = BTreeSet::new();
    let mut loads = BTreeSet::new();
    for r in rows {
        scenarios.insert(r.scenario.as_str());
        loads.insert(r.clients);
        let e = acc.entry((r.scenario.as_str(), r.clients)).or_default();
        e.0 += r.throughput_ops_s;
        e.1 += r.mean_latency_us;
        e.2 += 1;
    }
    if loads.len() < 2 {
        return Err(CliError::Plot(format!(
            "need at least 2 client counts, got {}",
            loads.len()
        )));
    }
    let header: String = std::iter::once("clients")
        .chain(scenarios.iter().copied())
        .collect::<Vec<_>>()
        .join(" ");
    let mut tp = format!("# {header}\n");
    let mut lat = format!("# {header}\n");
    for &c in &loads {
        write!(tp, "{c}").expect("writing to a String");
        write!(lat, "{c}").expect("writing to a String");
        for &s in &scenarios {
            let Some(&(t, l, k)) = acc.get(&(s, c)) else {
                return Err(CliError::Plot(format!(
                    "scenario {s} has no runs at {c} clients"
                )));
            };
            write!(tp, " {:.3}", t / k as f64).expect("writing to a String");
            write!(lat, " {:.1}", l / k as f64).expect("writing to a String");
        }
        tp.push('\n');
        lat.push('\n');
    }
    Ok(PlotData {
        throughput: tp,
        latency: lat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: &str, c: usize, seed: u64, tp: f64) -> Row {
        Row {
            scenario: s.into(),
            clients: c,
            throughput_ops_s: tp,
            mean_latency_us: tp * 2.0,
            p99_latency_us: 0,
            reconfigs: 0,
            seed,
        }
    }

    #[test]
    fn three_scenarios_seven_loads_ten_seeds() {
        let mut rows = Vec::new();
        for s in ["a", "b", "c"] {
            for k in 0..7 {
                for seed in 0..10 {
                    rows.push(row(s, 1 << k, seed, seed as f64));
                }
            }
        }
        let p = emit_plot_data(&rows).unwrap();
        let lines: Vec<&str> = p.throughput.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0], "# clients a b c");
        let data: Vec<Vec<&str>> = lines[1..]
            .iter()
            .map(|l| l.split_whitespace().collect())
            .collect();
        assert!(data.iter().all(|r| r.len() == 4));
        assert_eq!(data[0], ["1", "4.500", "4.500", "4.500"]);
        assert_eq!(data[6][0], "64");
        assert_eq!(p.latency.lines().nth(1).unwrap(), "1 9.0 9.0 9.0");
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(emit_plot_data(&[]).is_err());
        let one_load = [row("a", 1, 0, 1.0), row("b", 1, 0, 1.0)];
        assert!(emit_plot_data(&one_load).is_err());
        let gap = [
            row("a", 1, 0, 1.0),
            row("a", 2, 0, 1.0),
            row("b", 1, 0, 1.0),
        ];
        let err = emit_plot_data(&gap).unwrap_err().to_string();
        assert!(err.contains("scenario b"), "{err}");
    }
}
