//! Phase-1 round protocols.
//!
//! [`PaxosRound`] is single-decree Paxos with a predetermined leader: the
//! leader skips the prepare phase and goes straight to accept. It is the
//! crash-model protocol. [`QcRound`] is the signed two-step quorum round used
//! when participants may be Byzantine.
//!
//! Both are sans-IO: callers feed messages and timeouts in and route the
//! returned outputs.

mod paxos;
mod quorum_cert;

pub use paxos::{timeout_us, PaxosMsg, PaxosMsgKind, PaxosOut, PaxosRound, Role};
pub use quorum_cert::{statement, Cert, CertKind, QcMsg, QcOut, QcRound};
