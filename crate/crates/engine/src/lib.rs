//! Per-instance consensus engine.
//!
//! An [`Instance`] runs one consensus instance at one process: Phase 1 runs
//! the round protocol named by the round's configuration, Phase 2 exchanges
//! outcomes and coin shares to learn the next configuration, and Phase 3
//! hands the outcome to the next participant set. Everything is sans-IO: the
//! host feeds messages and timer expiries through [`Instance::handle`] and
//! [`Instance::on_timer`] and routes the returned [`Action`]s.
//!
//! With [`Handoff::External`] the instance stops after Phase 2 and reports
//! [`Action::RoundDone`]; the replication layer then performs the handoff
//! for all of its instances at once.

mod ctx;
mod error;
mod instance;
mod msg;
pub mod rules;

pub use ctx::{Auth, CoinBackend, EngineStats, Handoff, ProcessCtx, ThresholdCoin};
pub use error::EngineError;
pub use instance::{Instance, Stage};
pub use msg::{Action, Body, EngineMsg, ShareToken};

/// Default Phase-1 timeout before backoff, in simulated microseconds.
pub const DEFAULT_TIMEOUT_BASE_US: u64 = 50_000;
/// Rounds an instance may enter before it is reported as stuck.
pub const DEFAULT_ROUND_BUDGET: u64 = 64;
