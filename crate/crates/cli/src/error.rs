use mptc_simnet::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("unknown builtin scenario {0:?} (known: no-attack, attack-leader-reconfig, attack-leader-static)")]
    UnknownBuiltin(String),
    #[error("cannot parse scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("safety monitor tripped in {scenario} (clients {clients}, seed {seed}) at {at_us}us: {detail}")]
    Monitor {
        scenario: String,
        clients: usize,
        seed: u64,
        at_us: u64,
        detail: String,
    },
    #[error("{scenario} (clients {clients}, seed {seed}): {source}")]
    Sim {
        scenario: String,
        clients: usize,
        seed: u64,
        source: SimError,
    },
    #[error("plot data: {0}")]
    Plot(String),
}
