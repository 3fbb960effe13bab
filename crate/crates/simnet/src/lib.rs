//! Deterministic discrete-event simulation of the replicated service and of
//! bare consensus instances.
//!
//! Everything is driven by one seeded event queue ordered by (time, sequence
//! number), so a scenario and a seed always produce the same run. Safety
//! monitors watch every decision and execution and abort the run with the
//! recent message trace on the first violation.

mod adversary;
mod coinvis;
mod consensus_sim;
mod error;
mod fuzz;
mod latency;
mod metrics;
mod monitor;
mod smr_sim;
pub mod trace;

pub use adversary::{AdversarySpec, CrashAt, DosModel, DosWindow};
pub use coinvis::{coin_visibility, AdversaryProbe};
pub use consensus_sim::{
    run_consensus, ByzantineBehaviour, ConsensusCoin, ConsensusReport, ConsensusScenario, Decision,
};
pub use error::SimError;
pub use fuzz::{fault_scenario, FuzzSetup};
pub use latency::LatencyModel;
pub use metrics::Metrics;
pub use monitor::Monitors;
pub use smr_sim::{run_smr, CoinSetup, RunReport, SmrScenario};
