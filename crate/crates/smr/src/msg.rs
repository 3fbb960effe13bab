use mptc_core::{ConfigId, InstanceId, Outcome, ProcessId, Round, Value};
use mptc_engine::EngineMsg;
use serde::{Deserialize, Serialize};

/// Addressable node in a replicated deployment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeId {
    Participant(ProcessId),
    Replica(u32),
    Client(u64),
}

/// `(client id, request number)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestKey {
    pub cid: u64,
    pub rsn: u64,
}

impl RequestKey {
    pub fn new(cid: u64, rsn: u64) -> Self {
        RequestKey { cid, rsn }
    }

    /// `None` for the no-op value or anything not produced by
    /// [`Request::to_value`].
    pub fn from_value(v: &Value) -> Option<Self> {
        let b = v.as_bytes();
        if b.len() < 16 {
            return None;
        }
        let cid = u64::from_le_bytes(b[..8].try_into().ok()?);
        let rsn = u64::from_le_bytes(b[8..16].try_into().ok()?);
        Some(RequestKey { cid, rsn })
    }
}

/// Filler proposal for instance ids that carry no request.
pub fn noop() -> Value {
    Value(vec![0])
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Request {
    pub key: RequestKey,
    pub cmd: Vec<u8>,
}

impl Request {
    /// Consensus payload: cid and rsn as u64 LE, then the command bytes.
    pub fn to_value(&self) -> Value {
        let mut b = Vec::with_capacity(16 + self.cmd.len());
        b.extend_from_slice(&self.key.cid.to_le_bytes());
        b.extend_from_slice(&self.key.rsn.to_le_bytes());
        b.extend_from_slice(&self.cmd);
        Value(b)
    }

    pub fn from_value(v: &Value) -> Option<Self> {
        let key = RequestKey::from_value(v)?;
        Some(Request {
            key,
            cmd: v.as_bytes()[16..].to_vec(),
        })
    }
}

/// An instance handed over at reconfiguration, with its last round outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Carried {
    pub instance: InstanceId,
    pub outcome: Outcome,
    pub failed_rounds: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Reconfig {
    /// Round the new configuration runs.
    pub round: Round,
    pub config: ConfigId,
    pub instances: Vec<Carried>,
    pub requests: Vec<Request>,
    pub next_instance: InstanceId,
    /// Instance ids the sender knows to be decided at or above its
    /// contiguous watermark, so receivers never reopen them.
    pub decided_from: InstanceId,
    pub decided: Vec<InstanceId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SmrMsg {
    Request(Request),
    Response {
        key: RequestKey,
        result: Vec<u8>,
    },
    Decision {
        instance: InstanceId,
        value: Value,
        config: ConfigId,
    },
    Reconfiguration(Box<Reconfig>),
    Mptc(EngineMsg),
}

impl SmrMsg {
    /// Wire type tag.
    pub fn tag(&self) -> u8 {
        match self {
            SmrMsg::Request(_) => 1,
            SmrMsg::Response { .. } => 2,
            SmrMsg::Decision { .. } => 3,
            SmrMsg::Reconfiguration(_) => 4,
            SmrMsg::Mptc(_) => 5,
        }
    }
}

/// Observable events for monitors and metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmrEvent {
    Decided {
        instance: InstanceId,
        value: Value,
        round: Round,
        learned: bool,
    },
    /// A round ended without a decision somewhere in the window.
    RoundFailed {
        instance: InstanceId,
        round: Round,
    },
    Reconfigured {
        round: Round,
        config: ConfigId,
    },
    BudgetExceeded {
        instance: InstanceId,
        round: Round,
    },
    Violation(String),
    Executed {
        slot: u64,
        key: Option<RequestKey>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmrAction {
    Send {
        to: NodeId,
        msg: SmrMsg,
    },
    Timer {
        instance: InstanceId,
        round: Round,
        after_us: u64,
    },
    Event(SmrEvent),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_value_round_trips() {
        let req = Request {
            key: RequestKey::new(7, 42),
            cmd: vec![1, 2, 3],
        };
        let v = req.to_value();
        assert_eq!(v.as_bytes().len(), 19);
        assert_eq!(RequestKey::from_value(&v), Some(req.key));
        assert_eq!(Request::from_value(&v), Some(req));
        assert_eq!(RequestKey::from_value(&noop()), None);
    }
}
