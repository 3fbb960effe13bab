use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoreError {
    #[error("invalid participant set: {0}")]
    InvalidParticipantSet(String),
    #[error("set index {index} out of range for C({n}, {k})")]
    SetIndexOutOfRange { index: u64, n: u32, k: u32 },
    #[error("C({n}, {k}) does not fit in 64 bits")]
    RankOverflow { n: u32, k: u32 },
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration space: {0}")]
    InvalidConfigSpace(String),
    #[error("bits {bits} do not fit in width {width}")]
    BitsOutOfRange { bits: u64, width: u32 },
}
