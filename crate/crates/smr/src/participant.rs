use crate::error::SmrError;
use crate::msg::{
    noop, Carried, NodeId, Reconfig, Request, RequestKey, SmrAction, SmrEvent, SmrMsg,
};
use mptc_core::{ConfigId, InstanceId, Outcome, ProcessId, Round, Value};
use mptc_engine::rules::{phase3_crash, Phase3Result};
use mptc_engine::{Action, Body, EngineMsg, EngineStats, Handoff, Instance, ProcessCtx, Stage};
use mptc_paxos::{PaxosMsg, PaxosMsgKind};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

pub const DEFAULT_WINDOW: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParticipantOptions {
    /// Maximum concurrent undecided instances spawned locally.
    pub window: usize,
    /// Replicas are addressed as `NodeId::Replica(0..replicas)`.
    pub replicas: u32,
}

impl Default for ParticipantOptions {
    fn default() -> Self {
        ParticipantOptions {
            window: DEFAULT_WINDOW,
            replicas: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParticipantStats {
    pub relayed: u64,
    pub spawned: u64,
    pub fillers: u64,
    pub respawned: u64,
    pub unmatched_responses: u64,
    /// Unknown outcomes sent for instances first seen after a handoff.
    pub late_answers: u64,
    pub reconfigurations: u64,
    /// Largest window occupancy right after a local spawn.
    pub peak_spawn_window: usize,
}

#[derive(Debug, Clone)]
struct Slot {
    proposal: Value,
    /// Set when the current round ended without a decision.
    done: Option<(Outcome, ConfigId, u32)>,
}

/// Instance ids known to be decided: everything below `below`, plus `above`.
#[derive(Debug, Clone, Default)]
struct DecidedIds {
    below: u64,
    above: BTreeSet<u64>,
}

impl DecidedIds {
    fn contains(&self, id: InstanceId) -> bool {
        id.0 < self.below || self.above.contains(&id.0)
    }

    fn insert(&mut self, id: InstanceId) {
        if id.0 < self.below {
            return;
        }
        self.above.insert(id.0);
        while self.above.remove(&self.below) {
            self.below += 1;
        }
    }

    fn raise(&mut self, below: u64) {
        if below > self.below {
            self.below = below;
            self.above = self.above.split_off(&below);
            while self.above.remove(&self.below) {
                self.below += 1;
            }
        }
    }
}

/// A participant: orders client requests through consensus instances and
/// moves them between participant sets.
pub struct Participant {
    ctx: ProcessCtx,
    opts: ParticipantOptions,
    next_instance: InstanceId,
    view: ConfigId,
    view_round: Round,
    installed_round: Round,
    rstate: bool,
    /// Sent our handoff; waiting for f+1 of them before running anything.
    awaiting: bool,
    requests: BTreeMap<RequestKey, Request>,
    /// Never-assigned requests in arrival order; may hold stale keys.
    queue: VecDeque<RequestKey>,
    assigned: BTreeMap<RequestKey, u32>,
    /// Seen as a leader's proposal; the leader's instance will carry it.
    proposed: BTreeSet<RequestKey>,
    gossiped: BTreeSet<RequestKey>,
    instances: BTreeMap<InstanceId, Slot>,
    engines: BTreeMap<InstanceId, Instance>,
    responses: BTreeMap<RequestKey, BTreeSet<NodeId>>,
    /// Requests from our own clients, kept across handoffs for relaying.
    own: BTreeMap<RequestKey, Request>,
    decided_max: BTreeMap<u64, u64>,
    decided: DecidedIds,
    inbox: BTreeMap<Round, BTreeMap<ProcessId, Reconfig>>,
    buffered: BTreeMap<InstanceId, Vec<(ProcessId, EngineMsg)>>,
    /// Rounds we handed off: their configuration and our `next_instance`.
    handed: BTreeMap<Round, (ConfigId, InstanceId)>,
    answered: BTreeSet<(InstanceId, Round)>,
    stats: ParticipantStats,
}

type Out = Vec<SmrAction>;

impl Participant {
    pub fn new(mut ctx: ProcessCtx, initial: ConfigId, opts: ParticipantOptions) -> Self {
        ctx.handoff = Handoff::External;
        Participant {
            ctx,
            opts,
            next_instance: InstanceId(0),
            view: initial,
            view_round: Round(0),
            installed_round: Round(0),
            rstate: false,
            awaiting: false,
            requests: BTreeMap::new(),
            queue: VecDeque::new(),
            assigned: BTreeMap::new(),
            proposed: BTreeSet::new(),
            gossiped: BTreeSet::new(),
            instances: BTreeMap::new(),
            engines: BTreeMap::new(),
            responses: BTreeMap::new(),
            own: BTreeMap::new(),
            decided_max: BTreeMap::new(),
            decided: DecidedIds::default(),
            inbox: BTreeMap::new(),
            buffered: BTreeMap::new(),
            handed: BTreeMap::new(),
            answered: BTreeSet::new(),
            stats: ParticipantStats::default(),
        }
    }

    pub fn id(&self) -> ProcessId {
        self.ctx.me
    }
    pub fn view(&self) -> ConfigId {
        self.view
    }
    pub fn view_round(&self) -> Round {
        self.view_round
    }
    pub fn next_instance(&self) -> InstanceId {
        self.next_instance
    }
    pub fn undecided(&self) -> usize {
        self.instances.len()
    }
    pub fn window(&self) -> usize {
        self.opts.window
    }
    pub fn is_reconfiguring(&self) -> bool {
        self.rstate || self.awaiting
    }
    pub fn pending_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn stats(&self) -> ParticipantStats {
        self.stats
    }
    pub fn engine_stats(&self) -> EngineStats {
        self.ctx.stats
    }

    fn members(&self) -> Vec<ProcessId> {
        self.ctx
            .space
            .get(self.view)
            .participants
            .members()
            .to_vec()
    }

    fn is_member(&self) -> bool {
        self.ctx.space.get(self.view).contains(self.ctx.me)
    }

    fn can_spawn(&self) -> bool {
        self.is_member() && !self.rstate && !self.awaiting
    }

    fn is_done(&self, key: RequestKey) -> bool {
        self.decided_max
            .get(&key.cid)
            .is_some_and(|&m| key.rsn <= m)
    }

    pub fn handle(&mut self, from: NodeId, msg: SmrMsg) -> Result<Out, SmrError> {
        let mut out = Vec::new();
        match msg {
            SmrMsg::Request(req) => self.on_request(from, req, &mut out),
            SmrMsg::Response { key, result } => self.on_response(from, key, result, &mut out),
            SmrMsg::Reconfiguration(rc) => {
                if let NodeId::Participant(p) = from {
                    if rc.round > self.installed_round {
                        self.inbox.entry(rc.round).or_default().insert(p, *rc);
                    }
                }
            }
            SmrMsg::Mptc(m) => {
                if let NodeId::Participant(p) = from {
                    self.on_mptc(p, m, &mut out)?;
                }
            }
            SmrMsg::Decision { .. } => {}
        }
        self.settle(&mut out)?;
        Ok(out)
    }

    pub fn on_timer(&mut self, instance: InstanceId, round: Round) -> Result<Out, SmrError> {
        let mut out = Vec::new();
        if let Some(eng) = self.engines.get_mut(&instance) {
            let acts = eng.on_timer(&mut self.ctx, round)?;
            self.absorb(instance, acts, &mut out);
            self.reap(instance);
        }
        self.settle(&mut out)?;
        Ok(out)
    }

    fn send(&self, to: NodeId, msg: SmrMsg, out: &mut Out) {
        out.push(SmrAction::Send { to, msg });
    }

    fn on_request(&mut self, origin: NodeId, req: Request, out: &mut Out) {
        let key = req.key;
        if self.is_done(key) {
            return;
        }
        if matches!(origin, NodeId::Client(_)) {
            self.own.insert(key, req.clone());
        }
        if !self.is_member() {
            // T1
            if self.responses.entry(key).or_default().insert(origin) {
                self.stats.relayed += 1;
                for p in self.members() {
                    self.send(NodeId::Participant(p), SmrMsg::Request(req.clone()), out);
                }
            }
            return;
        }
        self.responses.entry(key).or_default().insert(origin);
        if self.requests.contains_key(&key) {
            // T3
            return;
        }
        self.requests.insert(key, req.clone());
        if self.rstate || self.awaiting {
            // T4
            return;
        }
        // T2: gossip first so every active member holds it even when the
        // window is full.
        self.gossip(&req, out);
        if !self.proposed.contains(&key) {
            self.queue.push_back(key);
        }
    }

    fn gossip(&mut self, req: &Request, out: &mut Out) {
        if !self.gossiped.insert(req.key) {
            return;
        }
        let me = self.ctx.me;
        for p in self.members() {
            if p != me {
                self.send(NodeId::Participant(p), SmrMsg::Request(req.clone()), out);
            }
        }
    }

    fn on_response(&mut self, from: NodeId, key: RequestKey, result: Vec<u8>, out: &mut Out) {
        self.mark_done(key);
        match self.responses.remove(&key) {
            Some(origins) => {
                for o in origins {
                    if o != from {
                        let msg = SmrMsg::Response {
                            key,
                            result: result.clone(),
                        };
                        self.send(o, msg, out);
                    }
                }
            }
            None => self.stats.unmatched_responses += 1,
        }
    }

    fn mark_done(&mut self, key: RequestKey) {
        let m = self.decided_max.entry(key.cid).or_insert(key.rsn);
        *m = (*m).max(key.rsn);
        self.requests.remove(&key);
        self.own.remove(&key);
        self.proposed.remove(&key);
        self.gossiped.remove(&key);
    }

    fn on_mptc(&mut self, from: ProcessId, msg: EngineMsg, out: &mut Out) -> Result<(), SmrError> {
        let id = msg.instance;
        if let (
            Body::Paxos(PaxosMsg {
                kind: PaxosMsgKind::Propose,
                value,
                ..
            }),
            // A late proposal from an abandoned round must not stop us
            // from respawning its request.
            true,
        ) = (&msg.body, msg.round == self.view_round && !self.awaiting)
        {
            if let Some(k) = RequestKey::from_value(value) {
                if !self.is_done(k) {
                    self.proposed.insert(k);
                }
            }
        }
        if let Some(eng) = self.engines.get_mut(&id) {
            let acts = eng.handle(&mut self.ctx, from, msg)?;
            self.absorb(id, acts, out);
            self.reap(id);
            return Ok(());
        }
        if let Body::Decision { value, .. } = &msg.body {
            self.decided.insert(id);
            if let Some(k) = RequestKey::from_value(value) {
                self.mark_done(k);
            }
            return Ok(());
        }
        if self.decided.contains(id) {
            return Ok(());
        }
        if msg.round < self.view_round && self.answer_late(id, msg.round, out)? {
            return Ok(());
        }
        if self.awaiting || msg.round > self.view_round {
            self.buffered.entry(id).or_default().push((from, msg));
            return Ok(());
        }
        if id < self.next_instance || !self.is_member() || msg.round < self.view_round {
            self.ctx.stats.stale_dropped += 1;
            return Ok(());
        }
        // Peers started an id we have not reached; create it (and any gap
        // below it) when the window allows.
        self.buffered.entry(id).or_default().push((from, msg));
        Ok(())
    }

    /// A peer still runs `round` for an instance we never saw before handing
    /// that round off. We accepted nothing for it, so report Unknown; the
    /// peer could otherwise never gather a Phase-2 quorum.
    fn answer_late(
        &mut self,
        id: InstanceId,
        round: Round,
        out: &mut Out,
    ) -> Result<bool, SmrError> {
        let Some(&(config, next)) = self.handed.get(&round) else {
            return Ok(false);
        };
        if id < next {
            return Ok(false);
        }
        let members = self.ctx.space.get(config).participants.clone();
        if !members.contains(self.ctx.me) || !self.answered.insert((id, round)) {
            return Ok(true);
        }
        let share = self.ctx.share_token(members.index(), round)?;
        let body = Body::Phase2 {
            outcome: Outcome::Unknown,
            share,
            cert: None,
        };
        for &p in members.members() {
            if p == self.ctx.me {
                continue;
            }
            let msg = EngineMsg {
                instance: id,
                round,
                body: body.clone(),
            };
            self.send(NodeId::Participant(p), SmrMsg::Mptc(msg), out);
        }
        self.stats.late_answers += 1;
        Ok(true)
    }

    fn reap(&mut self, id: InstanceId) {
        // A decided instance has nothing left to contribute; peers learn
        // the value from the decision note.
        if self.decided.contains(id)
            || self
                .engines
                .get(&id)
                .is_some_and(|e| e.stage() == Stage::Halted)
        {
            self.engines.remove(&id);
        }
    }

    fn absorb(&mut self, id: InstanceId, acts: Vec<Action>, out: &mut Out) {
        for a in acts {
            match a {
                Action::Send { to, msg } => {
                    self.send(NodeId::Participant(to), SmrMsg::Mptc(msg), out)
                }
                Action::Timer {
                    instance,
                    round,
                    after_us,
                } => out.push(SmrAction::Timer {
                    instance,
                    round,
                    after_us,
                }),
                Action::Decided {
                    instance,
                    value,
                    round,
                    learned,
                } => {
                    let config = self
                        .engines
                        .get(&instance)
                        .map_or(self.view, |e| e.config());
                    self.on_decided(instance, value.clone(), config, out);
                    out.push(SmrAction::Event(SmrEvent::Decided {
                        instance,
                        value,
                        round,
                        learned,
                    }));
                }
                Action::RoundDone {
                    instance,
                    round,
                    outcome,
                    next,
                    failed_rounds,
                } => {
                    if !outcome.is_decided() {
                        if let Some(slot) = self.instances.get_mut(&instance) {
                            slot.done = Some((outcome, next, failed_rounds));
                        }
                        out.push(SmrAction::Event(SmrEvent::RoundFailed { instance, round }));
                    }
                }
                Action::BudgetExceeded { instance, round } => {
                    if let Some(slot) = self.instances.remove(&instance) {
                        self.unassign(&slot.proposal);
                    }
                    out.push(SmrAction::Event(SmrEvent::BudgetExceeded {
                        instance,
                        round,
                    }));
                }
                Action::Violation { instance, detail } => {
                    out.push(SmrAction::Event(SmrEvent::Violation(format!(
                        "p{} instance {}: {detail}",
                        self.ctx.me.0, instance.0
                    ))));
                }
            }
        }
        self.reap(id);
    }

    fn unassign(&mut self, proposal: &Value) {
        if let Some(k) = RequestKey::from_value(proposal) {
            if let Some(c) = self.assigned.get_mut(&k) {
                *c -= 1;
                if *c == 0 {
                    self.assigned.remove(&k);
                }
            }
        }
    }

    /// T6.
    fn on_decided(&mut self, id: InstanceId, value: Value, config: ConfigId, out: &mut Out) {
        if let Some(slot) = self.instances.remove(&id) {
            self.unassign(&slot.proposal);
        }
        self.decided.insert(id);
        if let Some(key) = RequestKey::from_value(&value) {
            self.mark_done(key);
        }
        self.send_decision(id, value, config, out);
    }

    fn send_decision(&self, instance: InstanceId, value: Value, config: ConfigId, out: &mut Out) {
        for r in 0..self.opts.replicas {
            let msg = SmrMsg::Decision {
                instance,
                value: value.clone(),
                config,
            };
            self.send(NodeId::Replica(r), msg, out);
        }
    }

    fn alloc_id(&mut self) -> InstanceId {
        while self.decided.contains(self.next_instance)
            || self.engines.contains_key(&self.next_instance)
        {
            self.next_instance = self.next_instance.next();
        }
        let id = self.next_instance;
        self.next_instance = id.next();
        id
    }

    fn create(
        &mut self,
        id: InstanceId,
        proposal: Value,
        failed: u32,
        out: &mut Out,
    ) -> Result<(), SmrError> {
        if let Some(k) = RequestKey::from_value(&proposal) {
            *self.assigned.entry(k).or_insert(0) += 1;
            if let Some(req) = self.requests.get(&k).cloned() {
                self.gossip(&req, out);
            }
        }
        if id >= self.next_instance {
            self.next_instance = id.next();
        }
        let (eng, acts) = Instance::new(
            &mut self.ctx,
            id,
            self.view_round,
            self.view,
            proposal.clone(),
            failed,
        )?;
        self.engines.insert(id, eng);
        self.instances.insert(
            id,
            Slot {
                proposal,
                done: None,
            },
        );
        self.absorb(id, acts, out);
        if let Some(msgs) = self.buffered.remove(&id) {
            for (from, m) in msgs {
                self.on_mptc(from, m, out)?;
            }
        }
        Ok(())
    }

    fn pop_queued(&mut self) -> Option<RequestKey> {
        while let Some(k) = self.queue.pop_front() {
            if self.requests.contains_key(&k)
                && !self.assigned.contains_key(&k)
                && !self.proposed.contains(&k)
            {
                return Some(k);
            }
        }
        None
    }

    /// Drops buffered traffic that can no longer matter and returns the
    /// lowest id peers are running in our round that we have not created.
    fn lowest_started(&mut self) -> Option<InstanceId> {
        let next = self.next_instance;
        let round = self.view_round;
        let decided = &self.decided;
        let engines = &self.engines;
        self.buffered.retain(|id, msgs| {
            msgs.retain(|(_, m)| m.round >= round);
            !msgs.is_empty() && !decided.contains(*id) && (*id >= next || engines.contains_key(id))
        });
        self.buffered
            .iter()
            .find(|(id, msgs)| **id >= next && msgs.iter().any(|(_, m)| m.round == round))
            .map(|(id, _)| *id)
    }

    /// Runs the handoff and spawning rules until nothing changes.
    fn settle(&mut self, out: &mut Out) -> Result<(), SmrError> {
        loop {
            if self.try_install(out)? {
                continue;
            }
            if self.check_round_end(out)? {
                continue;
            }
            if !self.can_spawn() {
                return Ok(());
            }
            // Deliver anything buffered for instances that now exist.
            let ready: Vec<InstanceId> = self
                .buffered
                .keys()
                .filter(|id| self.engines.contains_key(id))
                .copied()
                .collect();
            if !ready.is_empty() {
                for id in ready {
                    if let Some(msgs) = self.buffered.remove(&id) {
                        for (from, m) in msgs {
                            self.on_mptc(from, m, out)?;
                        }
                    }
                }
                continue;
            }
            if self.instances.len() >= self.opts.window {
                return Ok(());
            }
            if let Some(target) = self.lowest_started() {
                let id = self.alloc_id();
                self.stats.fillers += u64::from(id != target);
                self.create(id, noop(), 0, out)?;
                self.note_spawn();
                continue;
            }
            if let Some(k) = self.pop_queued() {
                let id = self.alloc_id();
                self.stats.spawned += 1;
                let value = self.requests[&k].to_value();
                self.create(id, value, 0, out)?;
                self.note_spawn();
                continue;
            }
            // T7
            if self.instances.is_empty() {
                let pick = self
                    .requests
                    .keys()
                    .find(|k| !self.proposed.contains(k))
                    .copied();
                if let Some(k) = pick {
                    let id = self.alloc_id();
                    self.stats.respawned += 1;
                    let value = self.requests[&k].to_value();
                    self.create(id, value, 0, out)?;
                    self.note_spawn();
                    continue;
                }
            }
            return Ok(());
        }
    }

    fn note_spawn(&mut self) {
        self.stats.peak_spawn_window = self.stats.peak_spawn_window.max(self.instances.len());
    }

    /// T8/T9. Returns true when the handoff was sent.
    fn check_round_end(&mut self, out: &mut Out) -> Result<bool, SmrError> {
        if self.awaiting {
            return Ok(false);
        }
        if self.instances.is_empty() {
            self.rstate = false;
            return Ok(false);
        }
        if !self.instances.values().any(|s| s.done.is_some()) {
            return Ok(false);
        }
        if !self.instances.values().all(|s| s.done.is_some()) {
            self.rstate = true;
            return Ok(false);
        }
        // T9: every local instance finished the round undecided.
        let nexts: BTreeSet<ConfigId> = self
            .instances
            .values()
            .filter_map(|s| s.done.as_ref().map(|d| d.1))
            .collect();
        if nexts.len() > 1 {
            out.push(SmrAction::Event(SmrEvent::Violation(format!(
                "p{}: instances of round {} disagree on the next configuration",
                self.ctx.me.0, self.view_round.0
            ))));
        }
        let next = *nexts.iter().next().expect("nonempty");
        let carried: Vec<Carried> = self
            .instances
            .iter()
            .map(|(&id, s)| {
                let (outcome, _, failed) = s.done.clone().expect("all done");
                Carried {
                    instance: id,
                    outcome,
                    failed_rounds: failed,
                }
            })
            .collect();
        for id in self.instances.keys() {
            if let Some(mut e) = self.engines.remove(id) {
                e.abandon();
            }
        }
        let rc = Reconfig {
            round: self.view_round.next(),
            config: next,
            instances: carried,
            requests: self.requests.values().cloned().collect(),
            next_instance: self.next_instance,
            decided_from: InstanceId(self.decided.below),
            decided: self.decided.above.iter().map(|&i| InstanceId(i)).collect(),
        };
        let mut to: BTreeSet<ProcessId> = self.members().into_iter().collect();
        to.extend(
            self.ctx
                .space
                .get(next)
                .participants
                .members()
                .iter()
                .copied(),
        );
        let me = self.ctx.me;
        for p in to {
            if p == me {
                self.inbox
                    .entry(rc.round)
                    .or_default()
                    .insert(me, rc.clone());
            } else {
                let msg = SmrMsg::Reconfiguration(Box::new(rc.clone()));
                self.send(NodeId::Participant(p), msg, out);
            }
        }
        self.handed
            .insert(self.view_round, (self.view, self.next_instance));
        if self.handed.len() > 8 {
            self.handed.pop_first();
            let handed = &self.handed;
            self.answered.retain(|(_, r)| handed.contains_key(r));
        }
        self.view = next;
        self.view_round = rc.round;
        self.rstate = false;
        self.awaiting = true;
        self.instances.clear();
        self.assigned.clear();
        self.queue.clear();
        self.requests.clear();
        self.proposed.clear();
        self.gossiped.clear();
        // Peers may be waiting on us for ids we had buffered but never ran.
        let mut late = Vec::new();
        for (id, msgs) in self.buffered.iter_mut() {
            msgs.retain(|(_, m)| {
                let old = m.round < self.view_round;
                if old {
                    late.push((*id, m.round));
                }
                !old
            });
        }
        self.buffered.retain(|_, m| !m.is_empty());
        for (id, round) in late {
            self.answer_late(id, round, out)?;
        }
        Ok(true)
    }

    /// T10 for the highest round with f+1 handoffs. Returns true if one ran.
    fn try_install(&mut self, out: &mut Out) -> Result<bool, SmrError> {
        let need = self.ctx.f() as usize + 1;
        let Some(round) = self
            .inbox
            .iter()
            .rev()
            .find(|(r, m)| **r > self.installed_round && m.len() >= need)
            .map(|(r, _)| *r)
        else {
            return Ok(false);
        };
        let msgs = self.inbox.remove(&round).unwrap_or_default();
        self.inbox = self.inbox.split_off(&round.next());
        self.install(round, msgs, out)?;
        Ok(true)
    }

    fn install(
        &mut self,
        round: Round,
        msgs: BTreeMap<ProcessId, Reconfig>,
        out: &mut Out,
    ) -> Result<(), SmrError> {
        let configs: BTreeSet<ConfigId> = msgs.values().map(|m| m.config).collect();
        if configs.len() > 1 {
            out.push(SmrAction::Event(SmrEvent::Violation(format!(
                "p{}: handoffs for round {} name different configurations",
                self.ctx.me.0, round.0
            ))));
        }
        let config = *configs.iter().next().expect("f+1 messages");
        for (_, mut e) in std::mem::take(&mut self.engines) {
            e.abandon();
        }
        self.instances.clear();
        self.assigned.clear();
        self.queue.clear();
        self.proposed.clear();
        self.gossiped.clear();
        self.view = config;
        self.view_round = round;
        self.installed_round = round;
        self.rstate = false;
        self.awaiting = false;
        self.stats.reconfigurations += 1;
        self.next_instance = msgs
            .values()
            .map(|m| m.next_instance)
            .max()
            .unwrap_or(self.next_instance);

        let me = self.ctx.me;
        let mut carried: BTreeMap<InstanceId, Vec<(ProcessId, Outcome, u32)>> = BTreeMap::new();
        for (&p, m) in &msgs {
            self.decided.raise(m.decided_from.0);
            for &d in &m.decided {
                self.decided.insert(d);
            }
            for req in &m.requests {
                if self.is_done(req.key) {
                    continue;
                }
                if p != me {
                    self.responses
                        .entry(req.key)
                        .or_default()
                        .insert(NodeId::Participant(p));
                }
                self.requests.entry(req.key).or_insert_with(|| req.clone());
            }
            for c in &m.instances {
                carried.entry(c.instance).or_default().push((
                    p,
                    c.outcome.clone(),
                    c.failed_rounds,
                ));
            }
        }
        let member = self.is_member();
        for (k, req) in std::mem::take(&mut self.own) {
            if self.is_done(k) {
                continue;
            }
            if member {
                self.requests.entry(k).or_insert_with(|| req.clone());
            } else {
                for p in self.members() {
                    self.send(NodeId::Participant(p), SmrMsg::Request(req.clone()), out);
                }
            }
            self.own.insert(k, req);
        }
        if !member {
            self.requests.clear();
        }

        for (id, entries) in carried {
            if self.decided.contains(id) {
                continue;
            }
            let failed = entries.iter().map(|e| e.2).max().unwrap_or(0);
            let outcomes: Vec<(ProcessId, Outcome)> =
                entries.into_iter().map(|(p, o, _)| (p, o)).collect();
            match phase3_crash(&outcomes, &noop()) {
                Phase3Result::Decide(v) => {
                    let prev = Round(round.0.saturating_sub(1));
                    if member {
                        self.broadcast_note(id, prev, &v, out);
                    }
                    self.on_decided(id, v.clone(), config, out);
                    out.push(SmrAction::Event(SmrEvent::Decided {
                        instance: id,
                        value: v,
                        round: prev,
                        learned: false,
                    }));
                }
                Phase3Result::Propose(v) => {
                    if member {
                        self.create(id, v, failed, out)?;
                    }
                }
            }
        }
        if member {
            let fresh: Vec<RequestKey> = self
                .requests
                .keys()
                .filter(|k| !self.assigned.contains_key(k))
                .copied()
                .collect();
            self.queue.extend(fresh);
        }
        out.push(SmrAction::Event(SmrEvent::Reconfigured { round, config }));
        let replay: Vec<(InstanceId, Vec<(ProcessId, EngineMsg)>)> =
            std::mem::take(&mut self.buffered).into_iter().collect();
        for (_, msgs) in replay {
            for (from, m) in msgs {
                if m.round >= round || matches!(m.body, Body::Decision { .. }) {
                    self.on_mptc(from, m, out)?;
                }
            }
        }
        Ok(())
    }

    fn broadcast_note(&self, id: InstanceId, round: Round, value: &Value, out: &mut Out) {
        let me = self.ctx.me;
        for p in 0..self.ctx.space.n() {
            if p == me.0 {
                continue;
            }
            let msg = EngineMsg {
                instance: id,
                round,
                body: Body::Decision {
                    value: value.clone(),
                    cert: None,
                },
            };
            self.send(NodeId::Participant(ProcessId(p)), SmrMsg::Mptc(msg), out);
        }
    }
}
