use mptc_core::{
    ConfigId, InstanceId, KeyRing, Outcome, ParticipantSet, ProcessId, Round, Signature, Signer,
    Value,
};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CertKind {
    Prepare,
    Commit,
}

/// Bytes a process signs to vouch for `value` in `(instance, round)` run
/// under `config`.
pub fn statement(
    kind: CertKind,
    instance: InstanceId,
    round: Round,
    config: ConfigId,
    value: &Value,
) -> Vec<u8> {
    let tag: &[u8] = match kind {
        CertKind::Prepare => b"MPTC-PREPARE",
        CertKind::Commit => b"MPTC-COMMIT",
    };
    let mut out = Vec::with_capacity(tag.len() + 16 + value.as_bytes().len());
    out.extend_from_slice(tag);
    out.extend_from_slice(&instance.0.to_le_bytes());
    out.extend_from_slice(&round.0.to_le_bytes());
    out.extend_from_slice(&config.0.to_le_bytes());
    out.extend_from_slice(value.as_bytes());
    out
}

/// A quorum of signatures on one statement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cert {
    pub kind: CertKind,
    pub instance: InstanceId,
    pub round: Round,
    pub config: ConfigId,
    pub value: Value,
    pub sigs: Vec<(ProcessId, Signature)>,
}

impl Cert {
    /// At least `threshold` distinct members of `members` (the participant
    /// set of `self.config`) signed.
    pub fn verify(&self, keys: &KeyRing, members: &ParticipantSet, threshold: usize) -> bool {
        let msg = statement(
            self.kind,
            self.instance,
            self.round,
            self.config,
            &self.value,
        );
        let mut signers = BTreeSet::new();
        for (p, sig) in &self.sigs {
            if members.contains(*p) && keys.verify(*p, &msg, sig) {
                signers.insert(*p);
            }
        }
        signers.len() >= threshold
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QcMsg {
    Prepare { value: Value, sig: Signature },
    Commit { value: Value, sig: Signature },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QcOut {
    /// Send to every member, the sender included.
    Broadcast(QcMsg),
    Complete {
        outcome: Outcome,
        cert: Option<Cert>,
    },
}

/// Signed prepare/commit round: every member prepares its own proposal;
/// `2f+1` matching prepares form a prepare certificate and trigger a commit;
/// `2f+1` matching commits decide.
#[derive(Debug, Clone)]
pub struct QcRound {
    instance: InstanceId,
    round: Round,
    config: ConfigId,
    members: ParticipantSet,
    threshold: usize,
    proposal: Value,
    signer: Signer,
    keys: Arc<KeyRing>,
    prepares: BTreeMap<ProcessId, (Value, Signature)>,
    commits: BTreeMap<ProcessId, (Value, Signature)>,
    prepare_cert: Option<Cert>,
    outcome: Option<Outcome>,
}

impl QcRound {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        instance: InstanceId,
        round: Round,
        config: ConfigId,
        members: ParticipantSet,
        f: u32,
        proposal: Value,
        signer: Signer,
        keys: Arc<KeyRing>,
    ) -> Self {
        QcRound {
            instance,
            round,
            config,
            members,
            threshold: 2 * f as usize + 1,
            proposal,
            signer,
            keys,
            prepares: BTreeMap::new(),
            commits: BTreeMap::new(),
            prepare_cert: None,
            outcome: None,
        }
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    pub fn prepare_cert(&self) -> Option<&Cert> {
        self.prepare_cert.as_ref()
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }

    pub fn start(&mut self) -> Vec<QcOut> {
        let sig = self.sign(CertKind::Prepare, &self.proposal.clone());
        vec![QcOut::Broadcast(QcMsg::Prepare {
            value: self.proposal.clone(),
            sig,
        })]
    }

    fn sign(&self, kind: CertKind, value: &Value) -> Signature {
        self.signer.sign(&statement(
            kind,
            self.instance,
            self.round,
            self.config,
            value,
        ))
    }

    fn valid(&self, kind: CertKind, from: ProcessId, value: &Value, sig: &Signature) -> bool {
        self.members.contains(from)
            && self.keys.verify(
                from,
                &statement(kind, self.instance, self.round, self.config, value),
                sig,
            )
    }

    fn cert_for(
        &self,
        kind: CertKind,
        votes: &BTreeMap<ProcessId, (Value, Signature)>,
        value: &Value,
    ) -> Option<Cert> {
        let sigs: Vec<_> = votes
            .iter()
            .filter(|(_, (v, _))| v == value)
            .map(|(p, (_, s))| (*p, *s))
            .collect();
        (sigs.len() >= self.threshold).then(|| Cert {
            kind,
            instance: self.instance,
            round: self.round,
            config: self.config,
            value: value.clone(),
            sigs,
        })
    }

    /// First vote per sender counts; later equivocations are dropped.
    pub fn handle(&mut self, from: ProcessId, msg: QcMsg) -> Vec<QcOut> {
        if self.outcome.is_some() {
            return Vec::new();
        }
        match msg {
            QcMsg::Prepare { value, sig } => {
                if !self.valid(CertKind::Prepare, from, &value, &sig)
                    || self.prepares.contains_key(&from)
                {
                    return Vec::new();
                }
                self.prepares.insert(from, (value.clone(), sig));
                if self.prepare_cert.is_some() {
                    return Vec::new();
                }
                match self.cert_for(CertKind::Prepare, &self.prepares, &value) {
                    Some(cert) => {
                        self.prepare_cert = Some(cert);
                        let sig = self.sign(CertKind::Commit, &value);
                        vec![QcOut::Broadcast(QcMsg::Commit { value, sig })]
                    }
                    None => Vec::new(),
                }
            }
            QcMsg::Commit { value, sig } => {
                if !self.valid(CertKind::Commit, from, &value, &sig)
                    || self.commits.contains_key(&from)
                {
                    return Vec::new();
                }
                self.commits.insert(from, (value.clone(), sig));
                match self.cert_for(CertKind::Commit, &self.commits, &value) {
                    Some(cert) => {
                        let outcome = Outcome::Decided(value);
                        self.outcome = Some(outcome.clone());
                        vec![QcOut::Complete {
                            outcome,
                            cert: Some(cert),
                        }]
                    }
                    None => Vec::new(),
                }
            }
        }
    }

    /// `(M, v)` backed by the prepare certificate if one formed, else Unknown.
    pub fn on_timeout(&mut self) -> Option<(Outcome, Option<Cert>)> {
        if self.outcome.is_some() {
            return None;
        }
        let res = match &self.prepare_cert {
            Some(c) => (Outcome::Maybe(c.value.clone()), Some(c.clone())),
            None => (Outcome::Unknown, None),
        };
        self.outcome = Some(res.0.clone());
        Some(res)
    }
}
