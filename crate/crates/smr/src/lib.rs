//! State machine replication on top of the consensus engine.
//!
//! Three node kinds: closed-loop [`Client`]s, [`Participant`]s that order
//! requests by running one consensus instance per slot and hand their
//! in-flight instances to the next participant set when a round fails, and
//! [`Replica`]s that execute decided slots in order. All are sans-IO state
//! machines returning [`SmrAction`]s.

mod client;
mod error;
mod msg;
mod participant;
mod replica;

pub use client::Client;
pub use error::SmrError;
pub use msg::{noop, Carried, NodeId, Reconfig, Request, RequestKey, SmrAction, SmrEvent, SmrMsg};
pub use participant::{Participant, ParticipantOptions, ParticipantStats, DEFAULT_WINDOW};
pub use replica::Replica;

/// Default command payload size in bytes.
pub const DEFAULT_REQUEST_SIZE: usize = 100;
