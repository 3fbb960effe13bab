use serde::{Deserialize, Serialize};
use std::fmt;

/// Opaque proposal payload. Equality is byte-wise; the uninitialized marker
/// is `Option::None` wherever a value may be missing.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Value(pub Vec<u8>);

impl Value {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Self {
        Value(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Value(")?;
        for b in self.0.iter().take(16) {
            write!(f, "{b:02x}")?;
        }
        if self.0.len() > 16 {
            write!(f, "..")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeTag {
    /// Decided.
    D,
    /// If anything was decided it was this value.
    M,
    /// Nothing decided yet.
    U,
    /// Round exited without learning anything (acceptor timeout).
    Unknown,
}

/// Result of one round at one process.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Decided(Value),
    Maybe(Value),
    Undecided(Value),
    Unknown,
}

impl Outcome {
    pub fn tag(&self) -> OutcomeTag {
        match self {
            Outcome::Decided(_) => OutcomeTag::D,
            Outcome::Maybe(_) => OutcomeTag::M,
            Outcome::Undecided(_) => OutcomeTag::U,
            Outcome::Unknown => OutcomeTag::Unknown,
        }
    }

    pub fn value(&self) -> Option<&Value> {
        match self {
            Outcome::Decided(v) | Outcome::Maybe(v) | Outcome::Undecided(v) => Some(v),
            Outcome::Unknown => None,
        }
    }

    pub fn is_decided(&self) -> bool {
        matches!(self, Outcome::Decided(_))
    }
}
