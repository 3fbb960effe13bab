use crate::adversary::{AdversarySpec, DosModel};
use crate::error::SimError;
use crate::latency::LatencyModel;
use crate::metrics::Metrics;
use crate::monitor::Monitors;
use crate::trace::TraceRecord;
use mptc_coin::{dealer_init, emu_next_config, EmuCoin, GroupParams};
use mptc_core::{ConfigId, ConfigSpace, InstanceId, ProcessId, Round, SystemParams};
use mptc_engine::{CoinBackend, ProcessCtx, ThresholdCoin};
use mptc_smr::{
    noop, Client, NodeId, Participant, ParticipantOptions, ParticipantStats, Replica, SmrAction,
    SmrEvent, SmrMsg,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum CoinSetup {
    Emulated(EmuCoin),
    Threshold {
        group: Arc<GroupParams>,
        dealer_seed: u64,
    },
}

/// Everything one replicated run needs.
#[derive(Debug, Clone)]
pub struct SmrScenario {
    pub params: SystemParams,
    pub space: Arc<ConfigSpace>,
    pub coin: CoinSetup,
    pub clients: usize,
    pub request_size: usize,
    /// Clients issue requests until this time; throughput is measured over it.
    pub duration_us: u64,
    /// Extra time after `duration_us` for outstanding requests to finish.
    pub drain_us: u64,
    pub window: usize,
    pub replicas: u32,
    pub timeout_base_us: u64,
    pub round_budget: u64,
    pub latency: LatencyModel,
    /// Per-message handling time at participants and replicas.
    pub service_us: u64,
    pub adversary: AdversarySpec,
    pub seed: u64,
    /// Deliveries kept for a monitor counterexample.
    pub trace_ring: usize,
    pub full_trace: bool,
}

impl SmrScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        if self.space.n() != self.params.n || self.space.p_f() != self.params.p_f {
            return Err(SimError::Scenario(format!(
                "configuration space is over n={} with sets of {}, parameters say n={} p_f={}",
                self.space.n(),
                self.space.p_f(),
                self.params.n,
                self.params.p_f
            )));
        }
        if self.clients == 0 || self.window == 0 || self.replicas == 0 {
            return Err(SimError::Scenario(
                "clients, window and replicas must be positive".into(),
            ));
        }
        if (self.params.f() + 1) > self.params.n {
            return Err(SimError::Scenario(
                "clients attach to f+1 participants".into(),
            ));
        }
        self.adversary.validate(&self.params)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub metrics: Metrics,
    pub participants: Vec<ParticipantStats>,
    /// `(execution slot, app state)` per replica.
    pub replicas: Vec<(u64, [u8; 32])>,
    pub shares_rejected: u64,
    /// Full delivery trace in the wire format, if requested.
    pub trace: Option<Vec<u8>>,
}

#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
enum Ev {
    Deliver {
        from: NodeId,
        to: NodeId,
        msg: SmrMsg,
    },
    Timer {
        pid: ProcessId,
        instance: InstanceId,
        round: Round,
    },
    Crash(ProcessId),
    ClientStart(u64),
}

#[derive(Debug)]
struct Queued {
    at: u64,
    seq: u64,
    ev: Ev,
}

impl PartialEq for Queued {
    fn eq(&self, o: &Self) -> bool {
        (self.at, self.seq) == (o.at, o.seq)
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Queued {
    // Min-heap on (time, sequence).
    fn cmp(&self, o: &Self) -> Ordering {
        (o.at, o.seq).cmp(&(self.at, self.seq))
    }
}

struct Sim<'a> {
    sc: &'a SmrScenario,
    now: u64,
    seq: u64,
    heap: BinaryHeap<Queued>,
    participants: Vec<Participant>,
    replicas: Vec<Replica>,
    clients: Vec<Client>,
    crashed: Vec<bool>,
    busy: Vec<u64>,
    link_free: Vec<u64>,
    rng: ChaCha8Rng,
    metrics: Metrics,
    monitors: Monitors,
    ring: VecDeque<TraceRecord>,
    full: Option<Vec<u8>>,
    reconfig_rounds: BTreeSet<Round>,
}

/// Runs one replicated scenario to completion.
pub fn run_smr(sc: &SmrScenario) -> Result<RunReport, SimError> {
    sc.validate()?;
    let mut sim = Sim::new(sc)?;
    sim.run()?;
    Ok(sim.report())
}

fn initial_config(sc: &SmrScenario) -> Result<(ConfigId, Vec<CoinBackend>), SimError> {
    let n = sc.params.n;
    match &sc.coin {
        CoinSetup::Emulated(coin) => Ok((
            emu_next_config(coin, Round(0), &sc.space),
            (0..n).map(|_| CoinBackend::Emulated(*coin)).collect(),
        )),
        CoinSetup::Threshold { group, dealer_seed } => {
            let dealt = dealer_init(&sc.params, &sc.space, group, *dealer_seed)?;
            let backends = (0..n)
                .map(|p| {
                    CoinBackend::Threshold(Box::new(ThresholdCoin::from_dealer(
                        ProcessId(p),
                        &dealt,
                        group.clone(),
                    )))
                })
                .collect();
            Ok((dealt.c0, backends))
        }
    }
}

impl<'a> Sim<'a> {
    fn new(sc: &'a SmrScenario) -> Result<Self, SimError> {
        let n = sc.params.n;
        let (c0, backends) = initial_config(sc)?;
        let opts = ParticipantOptions {
            window: sc.window,
            replicas: sc.replicas,
        };
        let participants = backends
            .into_iter()
            .enumerate()
            .map(|(p, coin)| {
                let mut ctx =
                    ProcessCtx::new(ProcessId(p as u32), sc.params, sc.space.clone(), coin, None);
                ctx.timeout_base_us = sc.timeout_base_us;
                ctx.round_budget = sc.round_budget;
                Participant::new(ctx, c0, opts)
            })
            .collect();
        let replicas = (0..sc.replicas)
            .map(|r| Replica::new(r, sc.space.clone()))
            .collect();
        let mut setup = ChaCha8Rng::seed_from_u64(sc.seed ^ 0x5eed_c11e);
        let attach = sc.params.f() as usize + 1;
        let clients = (0..sc.clients as u64)
            .map(|c| {
                let mut chosen: Vec<ProcessId> = sample(&mut setup, n as usize, attach)
                    .into_iter()
                    .map(|i| ProcessId(i as u32))
                    .collect();
                chosen.sort();
                Client::new(c, chosen, sc.request_size)
            })
            .collect();
        let nodes = n as usize + sc.replicas as usize + sc.clients;
        let mut sim = Sim {
            sc,
            now: 0,
            seq: 0,
            heap: BinaryHeap::new(),
            participants,
            replicas,
            clients,
            crashed: vec![false; n as usize],
            busy: vec![0; nodes],
            link_free: vec![0; n as usize],
            rng: ChaCha8Rng::seed_from_u64(sc.seed),
            metrics: Metrics {
                duration_us: sc.duration_us,
                ..Default::default()
            },
            monitors: Monitors::new(),
            ring: VecDeque::new(),
            full: sc.full_trace.then(Vec::new),
            reconfig_rounds: BTreeSet::new(),
        };
        for c in &sc.adversary.crashes {
            sim.push(c.at_us, Ev::Crash(ProcessId(c.pid)));
        }
        for c in 0..sc.clients as u64 {
            let at = setup.gen_range(0..=1000);
            sim.push(at, Ev::ClientStart(c));
        }
        Ok(sim)
    }

    fn push(&mut self, at: u64, ev: Ev) {
        self.seq += 1;
        self.heap.push(Queued {
            at,
            seq: self.seq,
            ev,
        });
    }

    fn slot(&self, node: NodeId) -> usize {
        let n = self.sc.params.n as usize;
        match node {
            NodeId::Participant(p) => p.0 as usize,
            NodeId::Replica(r) => n + r as usize,
            NodeId::Client(c) => n + self.sc.replicas as usize + c as usize,
        }
    }

    fn trip(&self, detail: String) -> SimError {
        SimError::Monitor {
            at_us: self.now,
            detail,
            trace: Box::new(self.ring.iter().cloned().collect()),
        }
    }

    fn run(&mut self) -> Result<(), SimError> {
        let stop = self.sc.duration_us.saturating_add(self.sc.drain_us);
        while let Some(q) = self.heap.pop() {
            if q.at > stop {
                break;
            }
            self.now = q.at;
            if self.now >= self.sc.duration_us && self.clients.iter().all(|c| c.is_idle()) {
                break;
            }
            match q.ev {
                Ev::Crash(p) => self.crashed[p.0 as usize] = true,
                Ev::ClientStart(c) => self.issue(c)?,
                Ev::Timer {
                    pid,
                    instance,
                    round,
                } => {
                    if self.crashed[pid.0 as usize] {
                        continue;
                    }
                    let done = self.occupy(NodeId::Participant(pid));
                    let acts = self.participants[pid.0 as usize].on_timer(instance, round)?;
                    self.apply(NodeId::Participant(pid), done, acts)?;
                }
                Ev::Deliver { from, to, msg } => self.deliver(from, to, msg)?,
            }
        }
        self.metrics.end_us = self.now;
        Ok(())
    }

    /// Reserves the node's handler; returns when its outputs leave.
    fn occupy(&mut self, node: NodeId) -> u64 {
        let cost = match node {
            NodeId::Client(_) => 0,
            _ => self.sc.service_us,
        };
        let i = self.slot(node);
        let done = self.busy[i].max(self.now) + cost;
        self.busy[i] = done;
        done
    }

    fn deliver(&mut self, from: NodeId, to: NodeId, msg: SmrMsg) -> Result<(), SimError> {
        if let NodeId::Participant(p) = to {
            if self.crashed[p.0 as usize] {
                self.metrics.dropped_to_crashed += 1;
                return Ok(());
            }
        }
        if self.sc.trace_ring > 0 || self.full.is_some() {
            let rec = TraceRecord {
                at_us: self.now,
                from,
                to,
                msg: msg.clone(),
            };
            if let Some(buf) = &mut self.full {
                buf.extend(rec.encode());
            }
            if self.sc.trace_ring > 0 {
                if self.ring.len() == self.sc.trace_ring {
                    self.ring.pop_front();
                }
                self.ring.push_back(rec);
            }
        }
        let done = self.occupy(to);
        match to {
            NodeId::Participant(p) => {
                let acts = self.participants[p.0 as usize].handle(from, msg)?;
                self.apply(to, done, acts)?;
                let part = &self.participants[p.0 as usize];
                if part.stats().peak_spawn_window > part.window() {
                    return Err(self.trip(format!(
                        "window: p{} holds {} undecided instances, W = {}",
                        p.0,
                        part.stats().peak_spawn_window,
                        part.window()
                    )));
                }
            }
            NodeId::Replica(r) => {
                if let SmrMsg::Decision {
                    instance,
                    value,
                    config,
                } = msg
                {
                    let acts = self.replicas[r as usize].on_decision(instance, value, config);
                    self.apply(to, done, acts)?;
                }
            }
            NodeId::Client(c) => {
                if let SmrMsg::Response { key, .. } = msg {
                    let client = &mut self.clients[c as usize];
                    if let Some(lat) = client.on_response(key, self.now) {
                        if self.now <= self.sc.duration_us {
                            self.metrics.completed_ops += 1;
                            self.metrics.latencies_us.push(lat);
                        } else {
                            self.metrics.late_completions += 1;
                        }
                        if self.now < self.sc.duration_us {
                            self.issue(c)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn issue(&mut self, c: u64) -> Result<(), SimError> {
        let sends = self.clients[c as usize].issue(self.now)?;
        self.metrics.issued += 1;
        for (to, msg) in sends {
            self.send(NodeId::Client(c), to, msg, self.now);
        }
        Ok(())
    }

    fn apply(&mut self, node: NodeId, at: u64, acts: Vec<SmrAction>) -> Result<(), SimError> {
        for a in acts {
            match a {
                SmrAction::Send { to, msg } => self.send(node, to, msg, at),
                SmrAction::Timer {
                    instance,
                    round,
                    after_us,
                } => {
                    if let NodeId::Participant(pid) = node {
                        self.push(
                            at + after_us,
                            Ev::Timer {
                                pid,
                                instance,
                                round,
                            },
                        );
                    }
                }
                SmrAction::Event(e) => self.observe(node, e)?,
            }
        }
        Ok(())
    }

    fn observe(&mut self, node: NodeId, e: SmrEvent) -> Result<(), SimError> {
        match e {
            SmrEvent::Decided {
                instance,
                value,
                round,
                ..
            } => {
                let clients = &self.clients;
                let issued = |k: mptc_smr::RequestKey| {
                    clients
                        .get(k.cid as usize)
                        .is_some_and(|c| k.rsn < c.next_rsn())
                };
                let first = self
                    .monitors
                    .on_decided(instance, &value, issued, value == noop())
                    .map_err(|d| self.trip(d))?;
                if first {
                    *self.metrics.rounds_per_instance.entry(round.0).or_insert(0) += 1;
                }
            }
            SmrEvent::Executed { slot, key } => {
                if let NodeId::Replica(r) = node {
                    self.monitors
                        .on_executed(r, slot, key)
                        .map_err(|d| self.trip(d))?;
                }
            }
            SmrEvent::Reconfigured { round, .. } => {
                if self.reconfig_rounds.insert(round) {
                    self.metrics.reconfigurations += 1;
                }
            }
            SmrEvent::BudgetExceeded { .. } => self.metrics.budget_exceeded += 1,
            SmrEvent::Violation(d) => return Err(self.trip(d)),
            SmrEvent::RoundFailed { .. } => {}
        }
        Ok(())
    }

    fn send(&mut self, from: NodeId, to: NodeId, msg: SmrMsg, at: u64) {
        self.metrics.messages_sent += 1;
        if from == to {
            self.push(at, Ev::Deliver { from, to, msg });
            return;
        }
        let lat = self.sc.latency.sample(&mut self.rng);
        let ends: Vec<ProcessId> = [from, to]
            .iter()
            .filter_map(|n| match n {
                NodeId::Participant(p) => Some(*p),
                _ => None,
            })
            .filter(|p| self.sc.adversary.is_target(*p, at))
            .collect();
        let deliver_at = if ends.is_empty() {
            at + lat
        } else {
            match self.sc.adversary.dos_model {
                DosModel::Defer => match self.sc.adversary.clear_after(&ends, at) {
                    Some(t) => t + lat,
                    None => {
                        self.metrics.held_by_dos += 1;
                        return;
                    }
                },
                DosModel::Throttle { link_us } => {
                    let mut t = at;
                    for p in &ends {
                        let free = &mut self.link_free[p.0 as usize];
                        *free = (*free).max(t) + link_us;
                        t = *free;
                    }
                    t + lat
                }
            }
        };
        self.push(deliver_at, Ev::Deliver { from, to, msg });
    }

    fn report(self) -> RunReport {
        let mut metrics = self.metrics;
        metrics.outstanding = self.clients.iter().filter(|c| !c.is_idle()).count() as u64;
        let shares_rejected = self
            .participants
            .iter()
            .map(|p| p.engine_stats().shares_rejected)
            .sum();
        RunReport {
            metrics,
            participants: self.participants.iter().map(|p| p.stats()).collect(),
            replicas: self
                .replicas
                .iter()
                .map(|r| (r.execution_slot(), r.app_state()))
                .collect(),
            shares_rejected,
            trace: self.full,
        }
    }
}
