use crate::ctx::{Handoff, ProcessCtx};
use crate::error::EngineError;
use crate::msg::{Action, Body, EngineMsg, ShareToken};
use crate::rules::{self, CertifiedOutcome, Phase3Result};
use mptc_core::{
    ConfigId, ConfigSpace, FaultMode, InstanceId, Outcome, ParticipantSet, ProcessId, ProtocolId,
    Round, Value,
};
use mptc_paxos::{timeout_us, Cert, CertKind, PaxosOut, PaxosRound, QcOut, QcRound};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Not running a round; waiting for a Phase-3 quorum.
    Idle,
    Phase1,
    Phase2,
    /// Phase 2 done under external handoff; the host owns what comes next.
    AwaitHandoff,
    Halted,
}

#[derive(Debug, Clone)]
enum Phase1 {
    None,
    Paxos(Box<PaxosRound>),
    Quorum(Box<QcRound>),
}

#[derive(Debug, Clone)]
struct P2Entry {
    outcome: Outcome,
    share: ShareToken,
    cert: Option<Cert>,
}

#[derive(Debug, Clone)]
struct P3Entry {
    outcome: Outcome,
    next: ConfigId,
    cert: Option<Cert>,
}

/// One consensus instance at one process.
#[derive(Debug, Clone)]
pub struct Instance {
    id: InstanceId,
    input: Value,
    round: Round,
    config: ConfigId,
    proposal: Value,
    outcome: Option<Outcome>,
    out_cert: Option<Cert>,
    lock: Option<Cert>,
    decided: Option<(Value, Round)>,
    failed_rounds: u32,
    stage: Stage,
    phase1: Phase1,
    p2: BTreeMap<ProcessId, P2Entry>,
    d_claims: BTreeMap<Value, BTreeSet<ProcessId>>,
    p3: BTreeMap<Round, BTreeMap<ProcessId, P3Entry>>,
    future: BTreeMap<Round, Vec<(ProcessId, Body)>>,
    violation_reported: bool,
}

type Out = Vec<Action>;

impl Instance {
    /// Creates the instance and enters `round` under `config`. Non-members
    /// idle until a Phase-3 quorum names them.
    pub fn new(
        ctx: &mut ProcessCtx,
        id: InstanceId,
        round: Round,
        config: ConfigId,
        input: Value,
        failed_rounds: u32,
    ) -> Result<(Self, Out), EngineError> {
        let mut inst = Instance {
            id,
            input: input.clone(),
            round,
            config,
            proposal: input,
            outcome: None,
            out_cert: None,
            lock: None,
            decided: None,
            failed_rounds,
            stage: Stage::Idle,
            phase1: Phase1::None,
            p2: BTreeMap::new(),
            d_claims: BTreeMap::new(),
            p3: BTreeMap::new(),
            future: BTreeMap::new(),
            violation_reported: false,
        };
        let mut out = Vec::new();
        inst.enter_round(ctx, round, config, &mut out)?;
        Ok((inst, out))
    }

    pub fn id(&self) -> InstanceId {
        self.id
    }
    pub fn input(&self) -> &Value {
        &self.input
    }
    pub fn round(&self) -> Round {
        self.round
    }
    pub fn config(&self) -> ConfigId {
        self.config
    }
    pub fn proposal(&self) -> &Value {
        &self.proposal
    }
    pub fn outcome(&self) -> Option<&Outcome> {
        self.outcome.as_ref()
    }
    pub fn decided(&self) -> Option<&Value> {
        self.decided.as_ref().map(|(v, _)| v)
    }
    pub fn decided_round(&self) -> Option<Round> {
        self.decided.as_ref().map(|(_, r)| *r)
    }
    pub fn failed_rounds(&self) -> u32 {
        self.failed_rounds
    }
    pub fn stage(&self) -> Stage {
        self.stage
    }
    pub fn lock(&self) -> Option<&Cert> {
        self.lock.as_ref()
    }

    /// Stops the instance without a decision; later input is ignored.
    pub fn abandon(&mut self) {
        self.stage = Stage::Halted;
        self.phase1 = Phase1::None;
        self.future.clear();
        self.p3.clear();
    }

    fn members(space: &ConfigSpace, config: ConfigId) -> &ParticipantSet {
        &space.get(config).participants
    }

    fn msg(&self, round: Round, body: Body) -> EngineMsg {
        EngineMsg {
            instance: self.id,
            round,
            body,
        }
    }

    fn broadcast(&self, to: &ParticipantSet, round: Round, body: Body, out: &mut Out) {
        for &p in to.members() {
            out.push(Action::Send {
                to: p,
                msg: self.msg(round, body.clone()),
            });
        }
    }

    fn violation(&mut self, detail: String, out: &mut Out) {
        if !self.violation_reported {
            self.violation_reported = true;
            out.push(Action::Violation {
                instance: self.id,
                detail,
            });
        }
    }

    fn enter_round(
        &mut self,
        ctx: &mut ProcessCtx,
        round: Round,
        config: ConfigId,
        out: &mut Out,
    ) -> Result<(), EngineError> {
        self.round = round;
        self.config = config;
        self.outcome = None;
        self.out_cert = None;
        self.phase1 = Phase1::None;
        self.p2.clear();
        self.d_claims.clear();
        self.p3 = self.p3.split_off(&round);
        if round.0 >= ctx.round_budget {
            self.stage = Stage::Halted;
            out.push(Action::BudgetExceeded {
                instance: self.id,
                round,
            });
            return Ok(());
        }
        let space = ctx.space.clone();
        let cfg = space.get(config);
        if !cfg.contains(ctx.me) {
            self.stage = Stage::Idle;
            self.future = self.future.split_off(&round.next());
            return self.check_phase3(ctx, out);
        }
        self.stage = Stage::Phase1;
        match cfg.protocol.protocol {
            ProtocolId::PaxosVariant => {
                let mut px = PaxosRound::new(ctx.me, cfg, round, self.proposal.clone());
                let outs = px.start();
                self.phase1 = Phase1::Paxos(Box::new(px));
                self.absorb_paxos(ctx, outs, out)?;
            }
            ProtocolId::QuorumCert => {
                let auth = ctx.auth()?.clone();
                let mut qc = QcRound::new(
                    self.id,
                    round,
                    config,
                    cfg.participants.clone(),
                    ctx.f(),
                    self.proposal.clone(),
                    auth.signer,
                    auth.keys,
                );
                let outs = qc.start();
                self.phase1 = Phase1::Quorum(Box::new(qc));
                self.absorb_quorum(ctx, outs, out)?;
            }
        }
        out.push(Action::Timer {
            instance: self.id,
            round,
            after_us: timeout_us(ctx.timeout_base_us, self.failed_rounds),
        });
        // Replay anything that arrived early for this round.
        let mut later = self.future.split_off(&round);
        let now = later.remove(&round).unwrap_or_default();
        self.future = later;
        for (from, body) in now {
            if self.stage == Stage::Halted || self.round != round {
                break;
            }
            self.on_current(ctx, from, body, out)?;
        }
        Ok(())
    }

    pub fn handle(
        &mut self,
        ctx: &mut ProcessCtx,
        from: ProcessId,
        msg: EngineMsg,
    ) -> Result<Out, EngineError> {
        let mut out = Vec::new();
        if msg.instance != self.id {
            return Ok(out);
        }
        match msg.body {
            Body::Decision { value, cert } => self.on_note(ctx, msg.round, value, cert, &mut out),
            _ if matches!(self.stage, Stage::Halted | Stage::AwaitHandoff) => {
                ctx.stats.stale_dropped += 1;
            }
            Body::Phase3 {
                outcome,
                next,
                cert,
            } => self.on_phase3(ctx, from, msg.round, outcome, next, cert, &mut out)?,
            body => {
                if msg.round < self.round {
                    ctx.stats.stale_dropped += 1;
                } else if msg.round > self.round {
                    ctx.stats.buffered += 1;
                    self.future.entry(msg.round).or_default().push((from, body));
                } else {
                    self.on_current(ctx, from, body, &mut out)?;
                }
            }
        }
        Ok(out)
    }

    pub fn on_timer(&mut self, ctx: &mut ProcessCtx, round: Round) -> Result<Out, EngineError> {
        let mut out = Vec::new();
        if self.stage != Stage::Phase1 || round != self.round {
            return Ok(out);
        }
        let done = match &mut self.phase1 {
            Phase1::Paxos(px) => px.on_timeout().map(|o| (o, None)),
            Phase1::Quorum(qc) => qc.on_timeout(),
            Phase1::None => None,
        };
        if let Some((o, c)) = done {
            self.finish_phase1(ctx, o, c, false, &mut out)?;
        }
        Ok(out)
    }

    fn on_current(
        &mut self,
        ctx: &mut ProcessCtx,
        from: ProcessId,
        body: Body,
        out: &mut Out,
    ) -> Result<(), EngineError> {
        match body {
            Body::Paxos(m) => {
                if self.stage != Stage::Phase1 {
                    return Ok(());
                }
                if let Phase1::Paxos(px) = &mut self.phase1 {
                    let outs = px.handle(from, m);
                    self.absorb_paxos(ctx, outs, out)?;
                }
            }
            Body::Quorum(m) => {
                if self.stage != Stage::Phase1 {
                    return Ok(());
                }
                if let Phase1::Quorum(qc) = &mut self.phase1 {
                    let outs = qc.handle(from, m);
                    self.absorb_quorum(ctx, outs, out)?;
                }
            }
            Body::Phase2 {
                outcome,
                share,
                cert,
            } => {
                if matches!(self.stage, Stage::Phase1 | Stage::Phase2) {
                    self.on_phase2(ctx, from, outcome, share, cert, out)?;
                }
            }
            Body::Phase3 { .. } | Body::Decision { .. } => unreachable!("routed in handle"),
        }
        Ok(())
    }

    fn absorb_paxos(
        &mut self,
        ctx: &mut ProcessCtx,
        outs: Vec<PaxosOut>,
        out: &mut Out,
    ) -> Result<(), EngineError> {
        for o in outs {
            match o {
                PaxosOut::Send { to, msg } => out.push(Action::Send {
                    to,
                    msg: self.msg(self.round, Body::Paxos(msg)),
                }),
                PaxosOut::Complete(outcome) => {
                    self.finish_phase1(ctx, outcome, None, false, out)?
                }
            }
        }
        Ok(())
    }

    fn absorb_quorum(
        &mut self,
        ctx: &mut ProcessCtx,
        outs: Vec<QcOut>,
        out: &mut Out,
    ) -> Result<(), EngineError> {
        let space = ctx.space.clone();
        for o in outs {
            match o {
                QcOut::Broadcast(m) => {
                    let to = Self::members(&space, self.config);
                    self.broadcast(to, self.round, Body::Quorum(m), out);
                }
                QcOut::Complete { outcome, cert } => {
                    self.finish_phase1(ctx, outcome, cert, false, out)?
                }
            }
        }
        Ok(())
    }

    fn note_decision(
        &mut self,
        ctx: &ProcessCtx,
        round: Round,
        value: &Value,
        cert: Option<Cert>,
        out: &mut Out,
    ) {
        for p in 0..ctx.space.n() {
            let to = ProcessId(p);
            if to == ctx.me {
                continue;
            }
            out.push(Action::Send {
                to,
                msg: self.msg(
                    round,
                    Body::Decision {
                        value: value.clone(),
                        cert: cert.clone(),
                    },
                ),
            });
        }
    }

    fn decide(
        &mut self,
        ctx: &ProcessCtx,
        round: Round,
        value: Value,
        cert: Option<Cert>,
        learned: bool,
        out: &mut Out,
    ) {
        if let Some((d, _)) = &self.decided {
            if d != &value {
                let detail = format!("decided {d:?} then {value:?}");
                self.violation(detail, out);
            }
            return;
        }
        self.decided = Some((value.clone(), round));
        self.proposal = value.clone();
        self.outcome = Some(Outcome::Decided(value.clone()));
        if cert.is_some() {
            self.out_cert = cert.clone();
        }
        out.push(Action::Decided {
            instance: self.id,
            value: value.clone(),
            round,
            learned,
        });
        if !learned {
            self.note_decision(ctx, round, &value, cert, out);
        }
    }

    fn raise_lock(&mut self, cert: &Cert) {
        if self.lock.as_ref().is_none_or(|l| cert.round > l.round) {
            self.lock = Some(cert.clone());
        }
    }

    fn finish_phase1(
        &mut self,
        ctx: &mut ProcessCtx,
        outcome: Outcome,
        cert: Option<Cert>,
        learned: bool,
        out: &mut Out,
    ) -> Result<(), EngineError> {
        self.phase1 = Phase1::None;
        if let Some(c) = &cert {
            self.raise_lock(c);
        }
        if let Outcome::Decided(v) = &outcome {
            self.decide(ctx, self.round, v.clone(), cert, learned, out);
        } else {
            if let Outcome::Maybe(v) = &outcome {
                self.proposal = v.clone();
            }
            self.outcome = Some(outcome);
            self.out_cert = cert;
        }
        self.stage = Stage::Phase2;
        let space = ctx.space.clone();
        let members = Self::members(&space, self.config);
        let share = ctx.share_token(members.index(), self.round)?;
        let body = Body::Phase2 {
            outcome: self.outcome.clone().expect("set above"),
            share,
            cert: self.out_cert.clone().or_else(|| self.lock.clone()),
        };
        self.broadcast(members, self.round, body, out);
        self.try_phase2(ctx, out)
    }

    /// Certificate check for a claim about `value`; `None` if absent or bad.
    fn validate_cert(
        &self,
        ctx: &mut ProcessCtx,
        value: Option<&Value>,
        cert: Option<Cert>,
    ) -> Option<Cert> {
        let c = cert?;
        let ok = ctx.mode() == FaultMode::Byzantine
            && c.instance == self.id
            && value.is_none_or(|v| v == &c.value)
            && match (ctx.space.try_get(c.config), &ctx.auth) {
                (Some(cfg), Some(auth)) => {
                    c.verify(&auth.keys, &cfg.participants, 2 * ctx.f() as usize + 1)
                }
                _ => false,
            };
        if ok {
            Some(c)
        } else {
            ctx.stats.certs_rejected += 1;
            None
        }
    }

    fn on_phase2(
        &mut self,
        ctx: &mut ProcessCtx,
        from: ProcessId,
        outcome: Outcome,
        share: ShareToken,
        cert: Option<Cert>,
        out: &mut Out,
    ) -> Result<(), EngineError> {
        let space = ctx.space.clone();
        let members = Self::members(&space, self.config);
        if !members.contains(from) || self.p2.contains_key(&from) {
            return Ok(());
        }
        if !ctx.check_share(members.index(), self.round, &share) {
            return Ok(());
        }
        let byz = ctx.mode() == FaultMode::Byzantine;
        let cert = if byz {
            // A U/Unknown sender's certificate is its lock, not a claim.
            let claim = match &outcome {
                Outcome::Decided(v) | Outcome::Maybe(v) => Some(v),
                _ => None,
            };
            self.validate_cert(ctx, claim, cert)
        } else {
            None
        };
        if let Some(c) = &cert {
            self.raise_lock(c);
        }
        self.p2.insert(
            from,
            P2Entry {
                outcome: outcome.clone(),
                share,
                cert: cert.clone(),
            },
        );
        if self.decided.is_none() {
            if let Outcome::Decided(v) = &outcome {
                let learned = if byz {
                    let commit_ok = cert.as_ref().is_some_and(|c| {
                        c.kind == CertKind::Commit && c.round == self.round && &c.value == v
                    });
                    if commit_ok {
                        let who = self.d_claims.entry(v.clone()).or_default();
                        who.insert(from);
                        who.len() > ctx.f() as usize
                    } else {
                        false
                    }
                } else {
                    true
                };
                if learned {
                    if self.stage == Stage::Phase1 {
                        return self.finish_phase1(
                            ctx,
                            Outcome::Decided(v.clone()),
                            cert,
                            true,
                            out,
                        );
                    }
                    self.decide(ctx, self.round, v.clone(), cert, true, out);
                }
            }
        }
        self.try_phase2(ctx, out)
    }

    fn try_phase2(&mut self, ctx: &mut ProcessCtx, out: &mut Out) -> Result<(), EngineError> {
        if self.stage != Stage::Phase2 || self.p2.len() < ctx.quorum() {
            return Ok(());
        }
        let space = ctx.space.clone();
        let members = Self::members(&space, self.config);
        let tokens: Vec<&ShareToken> = self.p2.values().map(|e| &e.share).collect();
        let next = ctx.next_config(members.index(), self.round, &tokens)?;
        if self.decided.is_none() {
            let own = self.outcome.clone().unwrap_or(Outcome::Unknown);
            match ctx.mode() {
                FaultMode::Crash => {
                    let received: Vec<_> = self
                        .p2
                        .iter()
                        .filter(|(p, _)| **p != ctx.me)
                        .map(|(p, e)| (*p, e.outcome.clone()))
                        .collect();
                    self.outcome = Some(rules::phase2_crash(&own, &self.proposal, &received));
                }
                FaultMode::Byzantine => {
                    let received: Vec<_> = self
                        .p2
                        .iter()
                        .filter(|(p, _)| **p != ctx.me)
                        .map(|(p, e)| CertifiedOutcome {
                            from: *p,
                            outcome: e.outcome.clone(),
                            cert: e.cert.clone(),
                        })
                        .collect();
                    let (o, c) = rules::phase2_byzantine(
                        &own,
                        self.out_cert.as_ref(),
                        &self.proposal,
                        self.lock.as_ref(),
                        &received,
                    );
                    self.outcome = Some(o);
                    self.out_cert = c;
                }
            }
            self.failed_rounds += 1;
        }
        let outcome = self.outcome.clone().expect("phase 1 done");
        match ctx.handoff {
            Handoff::External => {
                self.stage = if self.decided.is_some() {
                    Stage::Halted
                } else {
                    Stage::AwaitHandoff
                };
                out.push(Action::RoundDone {
                    instance: self.id,
                    round: self.round,
                    outcome,
                    next,
                    failed_rounds: self.failed_rounds,
                });
            }
            Handoff::Phase3 => {
                let body = Body::Phase3 {
                    outcome,
                    next,
                    cert: self.out_cert.clone().or_else(|| self.lock.clone()),
                };
                self.broadcast(Self::members(&space, next), self.round, body, out);
                if self.decided.is_some() {
                    self.stage = Stage::Halted;
                } else {
                    self.stage = Stage::Idle;
                    self.check_phase3(ctx, out)?;
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn on_phase3(
        &mut self,
        ctx: &mut ProcessCtx,
        from: ProcessId,
        round: Round,
        outcome: Outcome,
        next: ConfigId,
        cert: Option<Cert>,
        out: &mut Out,
    ) -> Result<(), EngineError> {
        if round < self.round {
            ctx.stats.stale_dropped += 1;
            return Ok(());
        }
        match ctx.space.try_get(next) {
            Some(c) if c.contains(ctx.me) => {}
            _ => return Ok(()),
        }
        let cert = if ctx.mode() == FaultMode::Byzantine {
            let claim = match &outcome {
                Outcome::Decided(v) | Outcome::Maybe(v) => Some(v),
                _ => None,
            };
            self.validate_cert(ctx, claim, cert)
        } else {
            None
        };
        self.p3
            .entry(round)
            .or_default()
            .entry(from)
            .or_insert(P3Entry {
                outcome,
                next,
                cert,
            });
        self.check_phase3(ctx, out)
    }

    fn check_phase3(&mut self, ctx: &mut ProcessCtx, out: &mut Out) -> Result<(), EngineError> {
        if self.decided.is_some() || matches!(self.stage, Stage::Halted | Stage::AwaitHandoff) {
            return Ok(());
        }
        let quorum = ctx.quorum();
        let mut found: Option<(Round, ConfigId)> = None;
        let mut conflict = false;
        for (&s, entries) in self.p3.iter().rev() {
            if s < self.round {
                break;
            }
            let mut tally: BTreeMap<ConfigId, usize> = BTreeMap::new();
            for e in entries.values() {
                *tally.entry(e.next).or_default() += 1;
            }
            if tally.len() > 1 && ctx.mode() == FaultMode::Crash {
                conflict = true;
            }
            if let Some((&next, _)) = tally.iter().find(|(_, &n)| n >= quorum) {
                found = Some((s, next));
                break;
            }
        }
        if conflict {
            self.violation(
                "phase-3 quorum disagrees on the next configuration".into(),
                out,
            );
        }
        let Some((s, next)) = found else {
            return Ok(());
        };
        let entries = self.p3.remove(&s).unwrap_or_default();
        let chosen = entries.into_iter().filter(|(_, e)| e.next == next);
        let result = match ctx.mode() {
            FaultMode::Crash => {
                let received: Vec<_> = chosen.map(|(p, e)| (p, e.outcome)).collect();
                (rules::phase3_crash(&received, &self.proposal), None)
            }
            FaultMode::Byzantine => {
                let received: Vec<_> = chosen
                    .map(|(p, e)| CertifiedOutcome {
                        from: p,
                        outcome: e.outcome,
                        cert: e.cert,
                    })
                    .collect();
                for c in received.iter().filter_map(|r| r.cert.as_ref()) {
                    self.raise_lock(c);
                }
                rules::phase3_byzantine(ctx.f(), s, &received, self.lock.as_ref(), &self.proposal)
            }
        };
        // Abandon whatever round was in progress.
        self.phase1 = Phase1::None;
        self.round = s;
        match result {
            (Phase3Result::Decide(v), cert) => {
                self.round = s.next();
                self.config = next;
                self.decide(ctx, s, v, cert, false, out);
                self.stage = Stage::Halted;
                Ok(())
            }
            (Phase3Result::Propose(v), _) => {
                self.proposal = v;
                self.enter_round(ctx, s.next(), next, out)
            }
        }
    }

    fn on_note(
        &mut self,
        ctx: &mut ProcessCtx,
        round: Round,
        value: Value,
        cert: Option<Cert>,
        out: &mut Out,
    ) {
        if self.decided.is_none() && self.stage == Stage::Halted {
            return;
        }
        // Uncertified notes are noise in the Byzantine model, even after we
        // decided; only a certified conflict is a safety violation.
        let cert = if ctx.mode() == FaultMode::Byzantine {
            match self.validate_cert(ctx, Some(&value), cert) {
                Some(c) if c.kind == CertKind::Commit => Some(c),
                _ => {
                    ctx.stats.notes_rejected += 1;
                    return;
                }
            }
        } else {
            None
        };
        if let Some((d, _)) = &self.decided {
            if d != &value {
                let detail = format!("note for {value:?} after deciding {d:?}");
                self.violation(detail, out);
            }
            return;
        }
        self.decide(ctx, round, value, cert, true, out);
        self.stage = Stage::Halted;
        self.phase1 = Phase1::None;
    }
}
