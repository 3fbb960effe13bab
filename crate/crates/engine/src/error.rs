use mptc_coin::CoinError;
use mptc_core::{ProcessId, SetIndex};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("{0} holds no secret share for set {1:?}")]
    ConfigShareMissing(ProcessId, SetIndex),
    #[error("byzantine mode requires signing keys at {0}")]
    MissingAuth(ProcessId),
    #[error(transparent)]
    Coin(#[from] CoinError),
}
