use mptc_core::{CoreError, ProcessId, Round, SetIndex};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoinError {
    #[error("group order {q} too small for a set of {p_f}")]
    GroupTooSmall { q: String, p_f: u32 },
    #[error("invalid group parameters: {0}")]
    InvalidGroup(String),
    #[error("duplicate share from {0}")]
    DuplicateShare(ProcessId),
    #[error("share for {found} where {expected} was expected")]
    ShareRoundMismatch { expected: Round, found: Round },
    #[error("share for set {found:?} where {expected:?} was expected")]
    ShareSetMismatch { expected: SetIndex, found: SetIndex },
    #[error("share from {0} who holds no key for this set")]
    UnknownShareOrigin(ProcessId),
    #[error("expected {expected} shares, got {found}")]
    WrongShareCount { expected: usize, found: usize },
    #[error("{0} holds no secret share for set {1:?}")]
    ConfigShareMissing(ProcessId, SetIndex),
    #[error(transparent)]
    Core(#[from] CoreError),
}
