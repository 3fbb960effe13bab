use crate::trace::TraceRecord;
use mptc_coin::CoinError;
use mptc_core::CoreError;
use mptc_engine::EngineError;
use mptc_smr::SmrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("adversary schedule rejected: {0}")]
    Adversary(String),
    #[error("scenario rejected: {0}")]
    Scenario(String),
    #[error("safety monitor tripped at {at_us}us: {detail}")]
    Monitor {
        at_us: u64,
        detail: String,
        /// Most recent deliveries, oldest first.
        trace: Box<Vec<TraceRecord>>,
    },
    #[error(transparent)]
    Smr(#[from] SmrError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Coin(#[from] CoinError),
    #[error(transparent)]
    Core(#[from] CoreError),
}
