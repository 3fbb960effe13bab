//! Multi-instance consensus runs without the replication layer, with an
//! optional Byzantine process and causal message-depth tracking.

use crate::adversary::CrashAt;
use crate::error::SimError;
use crate::latency::LatencyModel;
use mptc_coin::{dealer_init, emu_next_config, DealerOutput, EmuCoin, FunctionShare, GroupParams};
use mptc_core::{
    ConfigId, ConfigSpace, FaultMode, InstanceId, KeyRing, Outcome, ProcessId, Round, SystemParams,
    Value,
};
use mptc_engine::{
    Action, Auth, Body, CoinBackend, EngineMsg, Instance, ProcessCtx, ShareToken, ThresholdCoin,
};
use mptc_paxos::{statement, CertKind, QcMsg};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum ConsensusCoin {
    Emulated(EmuCoin),
    Threshold {
        group: Arc<GroupParams>,
        dealer_seed: u64,
    },
}

/// What the faulty process does to its honest engine's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByzantineBehaviour {
    /// Replace every coin share with a wrong group element.
    pub corrupt_shares: bool,
    /// Claim a different outcome to each receiver.
    pub conflicting_outcomes: bool,
    /// Sign a different value to each receiver.
    pub equivocate: bool,
    /// Announce decisions that never happened.
    pub forge_notes: bool,
}

impl ByzantineBehaviour {
    pub fn all() -> Self {
        ByzantineBehaviour {
            corrupt_shares: true,
            conflicting_outcomes: true,
            equivocate: true,
            forge_notes: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConsensusScenario {
    pub params: SystemParams,
    pub space: Arc<ConfigSpace>,
    pub coin: ConsensusCoin,
    /// `inputs[instance][process]`.
    pub inputs: Vec<Vec<Value>>,
    pub latency: LatencyModel,
    pub timeout_base_us: u64,
    pub round_budget: u64,
    pub crashes: Vec<CrashAt>,
    pub byzantine: Option<(ProcessId, ByzantineBehaviour)>,
    pub seed: u64,
    pub max_time_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub value: Value,
    pub round: Round,
    pub at_us: u64,
    /// Message delays on the causal chain that led to the decision.
    pub depth: u32,
    pub learned: bool,
}

#[derive(Debug, Clone)]
pub struct ConsensusReport {
    pub decisions: BTreeMap<(InstanceId, ProcessId), Decision>,
    /// Processes that neither crashed nor misbehaved.
    pub correct: Vec<ProcessId>,
    pub forged_shares: Vec<FunctionShare>,
    /// Forged shares that reached a correct process and went through its
    /// share check, and how many of those passed.
    pub forged_delivered: u64,
    pub forged_accepted: u64,
    pub dealt: Option<DealerOutput>,
    pub shares_rejected: u64,
    pub certs_rejected: u64,
    pub violations: Vec<String>,
    pub budget_exceeded: u64,
    pub end_us: u64,
    pub initial: ConfigId,
}

impl ConsensusReport {
    /// First disagreement among correct processes, if any.
    pub fn agreement_violation(&self) -> Option<String> {
        let mut first: BTreeMap<InstanceId, &Value> = BTreeMap::new();
        for ((i, p), d) in &self.decisions {
            if !self.correct.contains(p) {
                continue;
            }
            match first.get(i) {
                Some(v) if *v != &d.value => {
                    return Some(format!(
                        "instance {}: {:?} vs {:?} at p{}",
                        i.0, v, d.value, p.0
                    ))
                }
                Some(_) => {}
                None => {
                    first.insert(*i, &d.value);
                }
            }
        }
        None
    }

    pub fn all_correct_decided(&self, instances: usize) -> bool {
        (0..instances as u64).all(|i| {
            self.correct
                .iter()
                .all(|p| self.decisions.contains_key(&(InstanceId(i), *p)))
        })
    }
}

#[allow(clippy::large_enum_variant)]
enum Ev {
    Deliver {
        from: ProcessId,
        to: ProcessId,
        msg: EngineMsg,
        depth: u32,
    },
    Timer {
        pid: ProcessId,
        instance: InstanceId,
        round: Round,
    },
}

struct Net<'a> {
    sc: &'a ConsensusScenario,
    now: u64,
    seq: u64,
    heap: BinaryHeap<Reverse<(u64, u64)>>,
    events: BTreeMap<u64, Ev>,
    ctxs: Vec<ProcessCtx>,
    insts: Vec<BTreeMap<InstanceId, Instance>>,
    depth_seen: Vec<u32>,
    crash_at: BTreeMap<ProcessId, u64>,
    rng: ChaCha8Rng,
    byz_rng: ChaCha8Rng,
    report: ConsensusReport,
    group: Option<Arc<GroupParams>>,
    keys: Arc<KeyRing>,
}

pub fn run_consensus(sc: &ConsensusScenario) -> Result<ConsensusReport, SimError> {
    sc.params.validate()?;
    let n = sc.params.n;
    if sc.inputs.iter().any(|v| v.len() != n as usize) {
        return Err(SimError::Scenario(
            "one input per process per instance".into(),
        ));
    }
    let keys = Arc::new(KeyRing::generate(n, sc.seed));
    let (c0, dealt, group) = match &sc.coin {
        ConsensusCoin::Emulated(coin) => (emu_next_config(coin, Round(0), &sc.space), None, None),
        ConsensusCoin::Threshold { group, dealer_seed } => {
            let d = dealer_init(&sc.params, &sc.space, group, *dealer_seed)?;
            (d.c0, Some(d), Some(group.clone()))
        }
    };
    let mut correct = Vec::new();
    let crash_at: BTreeMap<ProcessId, u64> = sc
        .crashes
        .iter()
        .map(|c| (ProcessId(c.pid), c.at_us))
        .collect();
    let mut ctxs = Vec::new();
    for p in 0..n {
        let me = ProcessId(p);
        if !crash_at.contains_key(&me) && sc.byzantine.is_none_or(|(b, _)| b != me) {
            correct.push(me);
        }
        let backend = match (&sc.coin, &dealt) {
            (ConsensusCoin::Threshold { group, .. }, Some(d)) => {
                CoinBackend::Threshold(Box::new(ThresholdCoin::from_dealer(me, d, group.clone())))
            }
            (ConsensusCoin::Emulated(coin), _) => CoinBackend::Emulated(*coin),
            _ => unreachable!("dealer runs for the threshold coin"),
        };
        let auth = (sc.params.mode == FaultMode::Byzantine).then(|| Auth {
            signer: keys.signer(me),
            keys: keys.clone(),
        });
        let mut ctx = ProcessCtx::new(me, sc.params, sc.space.clone(), backend, auth);
        ctx.timeout_base_us = sc.timeout_base_us;
        ctx.round_budget = sc.round_budget;
        ctxs.push(ctx);
    }
    let mut net = Net {
        sc,
        now: 0,
        seq: 0,
        heap: BinaryHeap::new(),
        events: BTreeMap::new(),
        ctxs,
        insts: vec![BTreeMap::new(); n as usize],
        depth_seen: vec![0; n as usize],
        crash_at,
        rng: ChaCha8Rng::seed_from_u64(sc.seed),
        byz_rng: ChaCha8Rng::seed_from_u64(sc.seed ^ 0xbad),
        report: ConsensusReport {
            decisions: BTreeMap::new(),
            correct,
            forged_shares: Vec::new(),
            forged_delivered: 0,
            forged_accepted: 0,
            dealt,
            shares_rejected: 0,
            certs_rejected: 0,
            violations: Vec::new(),
            budget_exceeded: 0,
            end_us: 0,
            initial: c0,
        },
        group,
        keys,
    };
    let mut start = Vec::new();
    for (i, inputs) in sc.inputs.iter().enumerate() {
        let id = InstanceId(i as u64);
        for p in 0..n {
            let me = ProcessId(p);
            let ctx = &mut net.ctxs[p as usize];
            let (inst, acts) = Instance::new(ctx, id, Round(0), c0, inputs[p as usize].clone(), 0)?;
            net.insts[p as usize].insert(id, inst);
            start.push((me, id, acts));
        }
    }
    for (me, id, acts) in start {
        net.apply(me, id, acts, 0);
    }
    net.run(sc.inputs.len())?;
    let mut report = net.report;
    for (p, ctx) in net.ctxs.iter().enumerate() {
        if report.correct.contains(&ProcessId(p as u32)) {
            report.shares_rejected += ctx.stats.shares_rejected;
            report.certs_rejected += ctx.stats.certs_rejected + ctx.stats.notes_rejected;
        }
    }
    report.end_us = net.now;
    Ok(report)
}

impl<'a> Net<'a> {
    fn push(&mut self, at: u64, ev: Ev) {
        self.seq += 1;
        self.events.insert(self.seq, ev);
        self.heap.push(Reverse((at, self.seq)));
    }

    fn down(&self, p: ProcessId) -> bool {
        self.crash_at.get(&p).is_some_and(|&t| t <= self.now)
    }

    fn run(&mut self, instances: usize) -> Result<(), SimError> {
        while let Some(Reverse((at, seq))) = self.heap.pop() {
            if at > self.sc.max_time_us {
                break;
            }
            self.now = at;
            let ev = self.events.remove(&seq).expect("queued event");
            match ev {
                Ev::Deliver {
                    from,
                    to,
                    msg,
                    depth,
                } => {
                    if self.down(to) {
                        continue;
                    }
                    let id = msg.instance;
                    self.audit_forgery(from, to, &msg);
                    self.depth_seen[to.0 as usize] = self.depth_seen[to.0 as usize].max(depth);
                    let ctx = &mut self.ctxs[to.0 as usize];
                    let Some(inst) = self.insts[to.0 as usize].get_mut(&id) else {
                        continue;
                    };
                    let acts = inst.handle(ctx, from, msg)?;
                    self.apply(to, id, acts, depth);
                }
                Ev::Timer {
                    pid,
                    instance,
                    round,
                } => {
                    if self.down(pid) {
                        continue;
                    }
                    let depth = self.depth_seen[pid.0 as usize];
                    let ctx = &mut self.ctxs[pid.0 as usize];
                    let Some(inst) = self.insts[pid.0 as usize].get_mut(&instance) else {
                        continue;
                    };
                    let acts = inst.on_timer(ctx, round)?;
                    self.apply(pid, instance, acts, depth);
                }
            }
            if self.report.all_correct_decided(instances) && self.all_halted() {
                break;
            }
        }
        Ok(())
    }

    fn audit_forgery(&mut self, from: ProcessId, to: ProcessId, msg: &EngineMsg) {
        let from_byz = self
            .sc
            .byzantine
            .is_some_and(|(b, how)| b == from && how.corrupt_shares);
        if !from_byz || !self.report.correct.contains(&to) {
            return;
        }
        if let Body::Phase2 {
            share: token @ ShareToken::Threshold(fs),
            ..
        } = &msg.body
        {
            self.report.forged_delivered += 1;
            if self.ctxs[to.0 as usize].check_share(fs.set_index, msg.round, token) {
                self.report.forged_accepted += 1;
            }
        }
    }

    fn all_halted(&self) -> bool {
        self.report.correct.iter().all(|p| {
            self.insts[p.0 as usize]
                .values()
                .all(|i| i.stage() == mptc_engine::Stage::Halted)
        })
    }

    fn apply(&mut self, me: ProcessId, id: InstanceId, acts: Vec<Action>, depth: u32) {
        let byz = self
            .sc
            .byzantine
            .filter(|(b, _)| *b == me)
            .map(|(_, how)| how);
        for a in acts {
            match a {
                Action::Send { to, msg } => {
                    let msg = match byz {
                        Some(how) => self.corrupt(me, id, to, msg, how),
                        None => msg,
                    };
                    let lat = if to == me {
                        0
                    } else {
                        self.sc.latency.sample(&mut self.rng)
                    };
                    self.push(
                        self.now + lat,
                        Ev::Deliver {
                            from: me,
                            to,
                            msg,
                            depth: depth + 1,
                        },
                    );
                }
                Action::Timer {
                    instance,
                    round,
                    after_us,
                } => self.push(
                    self.now + after_us,
                    Ev::Timer {
                        pid: me,
                        instance,
                        round,
                    },
                ),
                Action::Decided {
                    instance,
                    value,
                    round,
                    learned,
                } => {
                    self.report
                        .decisions
                        .entry((instance, me))
                        .or_insert(Decision {
                            value,
                            round,
                            at_us: self.now,
                            depth,
                            learned,
                        });
                }
                Action::BudgetExceeded { .. } => self.report.budget_exceeded += 1,
                Action::Violation { instance, detail } => {
                    if self.report.correct.contains(&me) {
                        self.report
                            .violations
                            .push(format!("p{} instance {}: {detail}", me.0, instance.0));
                    }
                }
                Action::RoundDone { .. } => {}
            }
        }
    }

    fn junk(&mut self) -> Value {
        Value(vec![0xee, self.byz_rng.gen_range(0..4)])
    }

    fn conflicting(&mut self, to: ProcessId) -> Outcome {
        let v = self.junk();
        match to.0 % 3 {
            0 => Outcome::Decided(v),
            1 => Outcome::Maybe(v),
            _ => Outcome::Undecided(v),
        }
    }

    fn corrupt(
        &mut self,
        me: ProcessId,
        id: InstanceId,
        to: ProcessId,
        mut msg: EngineMsg,
        how: ByzantineBehaviour,
    ) -> EngineMsg {
        let config = self.insts[me.0 as usize]
            .get(&id)
            .map_or(ConfigId(0), |i| i.config());
        let round = msg.round;
        match &mut msg.body {
            Body::Phase2 { outcome, share, .. } => {
                if how.corrupt_shares {
                    if let (ShareToken::Threshold(fs), Some(g)) = (share, &self.group) {
                        let k = self.report.forged_shares.len() as u64 + 2;
                        let bump = g.g.modpow(&k.into(), &g.p);
                        fs.sigma = &fs.sigma * bump % &g.p;
                        self.report.forged_shares.push(fs.clone());
                    }
                }
                if how.conflicting_outcomes {
                    *outcome = self.conflicting(to);
                }
            }
            Body::Phase3 { outcome, next, .. } => {
                if how.conflicting_outcomes {
                    *outcome = self.conflicting(to);
                    *next = ConfigId(self.byz_rng.gen_range(0..self.sc.space.len() as u32));
                }
            }
            Body::Quorum(qc) => {
                if how.equivocate {
                    let v = self.junk();
                    let signer = self.keys.signer(me);
                    *qc = match qc {
                        QcMsg::Prepare { .. } => QcMsg::Prepare {
                            sig: signer.sign(&statement(CertKind::Prepare, id, round, config, &v)),
                            value: v,
                        },
                        QcMsg::Commit { .. } => QcMsg::Commit {
                            sig: signer.sign(&statement(CertKind::Commit, id, round, config, &v)),
                            value: v,
                        },
                    };
                }
            }
            Body::Decision { value, cert } => {
                if how.forge_notes {
                    let v = self.junk();
                    if let Some(c) = cert {
                        c.value = v.clone();
                    }
                    *value = v;
                }
            }
            Body::Paxos(_) => {}
        }
        msg
    }
}
