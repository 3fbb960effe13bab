use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    /// Responses received by clients within the measured duration.
    pub completed_ops: u64,
    pub latencies_us: Vec<u64>,
    pub reconfigurations: u64,
    /// Round in which each instance was first decided, as a count per round.
    pub rounds_per_instance: BTreeMap<u64, u64>,
    pub messages_sent: u64,
    pub duration_us: u64,
    pub issued: u64,
    /// Completions after the measured duration, while draining.
    pub late_completions: u64,
    /// Requests still unanswered when the run stopped.
    pub outstanding: u64,
    pub budget_exceeded: u64,
    pub dropped_to_crashed: u64,
    /// Messages whose DoS deferral outlives the run.
    pub held_by_dos: u64,
    pub end_us: u64,
}

impl Metrics {
    pub fn throughput_ops_s(&self) -> f64 {
        if self.duration_us == 0 {
            return 0.0;
        }
        self.completed_ops as f64 * 1e6 / self.duration_us as f64
    }

    pub fn mean_latency_us(&self) -> f64 {
        if self.latencies_us.is_empty() {
            return 0.0;
        }
        self.latencies_us.iter().sum::<u64>() as f64 / self.latencies_us.len() as f64
    }

    /// Nearest-rank 99th percentile.
    pub fn p99_latency_us(&self) -> u64 {
        if self.latencies_us.is_empty() {
            return 0;
        }
        let mut v = self.latencies_us.clone();
        v.sort_unstable();
        let rank = (v.len() * 99).div_ceil(100);
        v[rank.max(1) - 1]
    }

    pub fn max_round(&self) -> u64 {
        self.rounds_per_instance
            .keys()
            .next_back()
            .copied()
            .unwrap_or(0)
    }

    pub fn decided_instances(&self) -> u64 {
        self.rounds_per_instance.values().sum()
    }
}
