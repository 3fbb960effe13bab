use mptc_core::{Configuration, Outcome, ProcessId, Round, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Cap on the backoff exponent; beyond this the timeout stops growing.
const MAX_BACKOFF_SHIFT: u32 = 20;

/// `base · 2^failed`.
pub fn timeout_us(base_us: u64, failed_rounds: u32) -> u64 {
    base_us.saturating_mul(1u64 << failed_rounds.min(MAX_BACKOFF_SHIFT))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PaxosMsgKind {
    Propose,
    Accepted,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PaxosMsg {
    pub kind: PaxosMsgKind,
    pub round: Round,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PaxosOut {
    Send { to: ProcessId, msg: PaxosMsg },
    Complete(Outcome),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Acceptor,
}

/// One process's view of one Paxos round.
#[derive(Debug, Clone)]
pub struct PaxosRound {
    me: ProcessId,
    round: Round,
    leader: ProcessId,
    participants: Vec<ProcessId>,
    quorum: usize,
    proposal: Value,
    accepted: Option<Value>,
    accept_acks: BTreeSet<ProcessId>,
    outcome: Option<Outcome>,
}

impl PaxosRound {
    pub fn new(me: ProcessId, config: &Configuration, round: Round, proposal: Value) -> Self {
        let participants = config.participants.members().to_vec();
        let quorum = participants.len() / 2 + 1;
        PaxosRound {
            me,
            round,
            leader: config.leader(round),
            participants,
            quorum,
            proposal,
            accepted: None,
            accept_acks: BTreeSet::new(),
            outcome: None,
        }
    }

    pub fn role(&self) -> Role {
        if self.me == self.leader {
            Role::Leader
        } else {
            Role::Acceptor
        }
    }

    pub fn leader(&self) -> ProcessId {
        self.leader
    }

    pub fn round(&self) -> Round {
        self.round
    }

    pub fn accepted(&self) -> Option<&Value> {
        self.accepted.as_ref()
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    /// Leader broadcasts its proposal (itself included); acceptors wait.
    pub fn start(&mut self) -> Vec<PaxosOut> {
        if self.role() == Role::Acceptor {
            return Vec::new();
        }
        let msg = PaxosMsg {
            kind: PaxosMsgKind::Propose,
            round: self.round,
            value: self.proposal.clone(),
        };
        self.participants
            .iter()
            .map(|&to| PaxosOut::Send {
                to,
                msg: msg.clone(),
            })
            .collect()
    }

    pub fn handle(&mut self, from: ProcessId, msg: PaxosMsg) -> Vec<PaxosOut> {
        if msg.round != self.round || self.outcome.is_some() {
            return Vec::new();
        }
        match msg.kind {
            PaxosMsgKind::Propose => self.on_propose(from, msg.value),
            PaxosMsgKind::Accepted => self.on_accepted(from, msg.value).into_iter().collect(),
        }
    }

    fn on_propose(&mut self, from: ProcessId, value: Value) -> Vec<PaxosOut> {
        if from != self.leader || self.accepted.is_some() {
            return Vec::new();
        }
        self.accepted = Some(value.clone());
        vec![PaxosOut::Send {
            to: self.leader,
            msg: PaxosMsg {
                kind: PaxosMsgKind::Accepted,
                round: self.round,
                value,
            },
        }]
    }

    fn on_accepted(&mut self, from: ProcessId, value: Value) -> Option<PaxosOut> {
        if self.role() != Role::Leader || value != self.proposal {
            return None;
        }
        if !self.participants.contains(&from) {
            return None;
        }
        self.accept_acks.insert(from);
        if self.accept_acks.len() >= self.quorum {
            let out = Outcome::Decided(self.proposal.clone());
            self.outcome = Some(out.clone());
            return Some(PaxosOut::Complete(out));
        }
        None
    }

    /// Round deadline passed before completion.
    pub fn on_timeout(&mut self) -> Option<Outcome> {
        if self.outcome.is_some() {
            return None;
        }
        let out = match (self.role(), &self.accepted) {
            (Role::Leader, _) => Outcome::Maybe(self.proposal.clone()),
            (Role::Acceptor, Some(v)) => Outcome::Maybe(v.clone()),
            (Role::Acceptor, None) => Outcome::Unknown,
        };
        self.outcome = Some(out.clone());
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mptc_core::{ParticipantSet, ProtocolSpec};

    fn cfg() -> Configuration {
        Configuration::new(
            ProtocolSpec::paxos(),
            ParticipantSet::from_ids(&[0, 1, 2], 3).unwrap(),
        )
    }

    fn v(b: u8) -> Value {
        Value::new(vec![b])
    }

    fn propose(value: Value, round: u64) -> PaxosMsg {
        PaxosMsg {
            kind: PaxosMsgKind::Propose,
            round: Round(round),
            value,
        }
    }

    fn accepted(value: Value) -> PaxosMsg {
        PaxosMsg {
            kind: PaxosMsgKind::Accepted,
            round: Round(0),
            value,
        }
    }

    #[test]
    fn leader_broadcasts_including_self() {
        let mut r = PaxosRound::new(ProcessId(0), &cfg(), Round(0), v(1));
        let out = r.start();
        let tos: Vec<u32> = out
            .iter()
            .map(|o| match o {
                PaxosOut::Send { to, .. } => to.0,
                _ => panic!(),
            })
            .collect();
        assert_eq!(tos, vec![0, 1, 2]);
    }

    #[test]
    fn acceptor_start_is_silent() {
        let mut r = PaxosRound::new(ProcessId(1), &cfg(), Round(0), v(1));
        assert_eq!(r.role(), Role::Acceptor);
        assert!(r.start().is_empty());
    }

    #[test]
    fn backoff_doubles() {
        assert_eq!(timeout_us(10_000, 2), 40_000);
        assert_eq!(timeout_us(10_000, 0), 10_000);
        assert_eq!(timeout_us(1, 200), 1 << MAX_BACKOFF_SHIFT);
    }

    #[test]
    fn acceptor_accepts_once() {
        let mut r = PaxosRound::new(ProcessId(1), &cfg(), Round(0), v(9));
        let out = r.handle(ProcessId(0), propose(v(1), 0));
        assert_eq!(out.len(), 1);
        assert_eq!(r.accepted(), Some(&v(1)));
        assert!(r.handle(ProcessId(0), propose(v(1), 0)).is_empty());
        assert!(r.handle(ProcessId(0), propose(v(2), 0)).is_empty());
        assert_eq!(r.accepted(), Some(&v(1)));
    }

    #[test]
    fn stale_and_foreign_proposals_ignored() {
        let mut r = PaxosRound::new(ProcessId(1), &cfg(), Round(3), v(9));
        assert!(r.handle(ProcessId(0), propose(v(1), 2)).is_empty());
        // Leader of round 3 over three members is p0; p2 is not.
        assert!(r.handle(ProcessId(2), propose(v(1), 3)).is_empty());
        assert!(r.accepted().is_none());
    }

    #[test]
    fn leader_decides_on_majority() {
        let mut r = PaxosRound::new(ProcessId(0), &cfg(), Round(0), v(1));
        assert!(r.handle(ProcessId(0), accepted(v(1))).is_empty());
        let out = r.handle(ProcessId(1), accepted(v(1)));
        assert_eq!(out, vec![PaxosOut::Complete(Outcome::Decided(v(1)))]);
        assert!(r.handle(ProcessId(2), accepted(v(1))).is_empty());
        assert!(r.on_timeout().is_none());
    }

    #[test]
    fn timeout_outcomes() {
        let mut leader = PaxosRound::new(ProcessId(0), &cfg(), Round(0), v(1));
        assert_eq!(leader.on_timeout(), Some(Outcome::Maybe(v(1))));
        let mut acc = PaxosRound::new(ProcessId(1), &cfg(), Round(0), v(7));
        acc.handle(ProcessId(0), propose(v(1), 0));
        assert_eq!(acc.on_timeout(), Some(Outcome::Maybe(v(1))));
        let mut idle = PaxosRound::new(ProcessId(2), &cfg(), Round(0), v(7));
        assert_eq!(idle.on_timeout(), Some(Outcome::Unknown));
    }

    #[test]
    fn pinned_leader_overrides_rotation() {
        let c = Configuration::new(
            ProtocolSpec::paxos_pinned(0),
            ParticipantSet::from_ids(&[3, 4, 5], 6).unwrap(),
        );
        for r in 0..5 {
            assert_eq!(
                PaxosRound::new(ProcessId(4), &c, Round(r), v(0)).leader(),
                ProcessId(3)
            );
        }
    }
}
