use mptc_coin::FunctionShare;
use mptc_core::{ConfigId, InstanceId, Outcome, ProcessId, Round, Value};
use mptc_paxos::{Cert, PaxosMsg, QcMsg};
use serde::{Deserialize, Serialize};

/// Coin material carried in a Phase-2 message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShareToken {
    Threshold(FunctionShare),
    /// The emulated coin needs no share; the slot is kept so quorum logic is
    /// identical.
    Emulated,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Body {
    Paxos(PaxosMsg),
    Quorum(QcMsg),
    Phase2 {
        outcome: Outcome,
        share: ShareToken,
        cert: Option<Cert>,
    },
    Phase3 {
        outcome: Outcome,
        next: ConfigId,
        cert: Option<Cert>,
    },
    /// Sent to every process by a process that decided through the protocol.
    Decision {
        value: Value,
        cert: Option<Cert>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EngineMsg {
    pub instance: InstanceId,
    pub round: Round,
    pub body: Body,
}

impl EngineMsg {
    pub fn kind(&self) -> &'static str {
        match &self.body {
            Body::Paxos(_) => "paxos",
            Body::Quorum(_) => "quorum",
            Body::Phase2 { .. } => "phase2",
            Body::Phase3 { .. } => "phase3",
            Body::Decision { .. } => "decision",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Send {
        to: ProcessId,
        msg: EngineMsg,
    },
    Timer {
        instance: InstanceId,
        round: Round,
        after_us: u64,
    },
    Decided {
        instance: InstanceId,
        value: Value,
        round: Round,
        /// Learned from others rather than computed by this process.
        learned: bool,
    },
    /// Phase 2 finished under external handoff.
    RoundDone {
        instance: InstanceId,
        round: Round,
        outcome: Outcome,
        next: ConfigId,
        failed_rounds: u32,
    },
    BudgetExceeded {
        instance: InstanceId,
        round: Round,
    },
    /// A local safety tripwire fired.
    Violation {
        instance: InstanceId,
        detail: String,
    },
}
