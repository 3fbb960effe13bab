use mptc_engine::EngineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SmrError {
    #[error("client {cid} already has request {rsn} outstanding")]
    RequestOutstanding { cid: u64, rsn: u64 },
    #[error(transparent)]
    Engine(#[from] EngineError),
}
