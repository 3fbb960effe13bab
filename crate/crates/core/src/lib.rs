//! Domain types shared by every layer of the moving-participants consensus
//! stack: process and round identifiers, values and round outcomes,
//! participant sets with their combinatorial ranking, configurations and the
//! configuration space, plus the modeled message authentication used in
//! Byzantine mode.

pub mod auth;
pub mod combin;
pub mod config;
mod error;
pub mod ids;
pub mod params;
pub mod value;

pub use auth::{KeyRing, Signature, Signer};
pub use combin::{binomial, rank_participant_set, unrank_participant_set};
pub use config::{
    config_index_from_bits, leader_of, BitSource, ConfigSpace, Configuration, IndexDraw,
    ParticipantSet, ProtocolId, ProtocolSpec, MAX_INDEX_RETRIES,
};
pub use error::CoreError;
pub use ids::{ConfigId, InstanceId, ProcessId, Round, SetIndex};
pub use params::{FaultMode, SystemParams};
pub use value::{Outcome, OutcomeTag, Value};
