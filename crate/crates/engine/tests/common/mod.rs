#![allow(dead_code)]

use mptc_coin::{dealer_init, EmuCoin, GroupParams, Schedule};
use mptc_core::{
    ConfigId, ConfigSpace, Configuration, FaultMode, InstanceId, KeyRing, ParticipantSet,
    ProcessId, ProtocolSpec, Round, SystemParams, Value,
};
use mptc_engine::{Action, Auth, CoinBackend, EngineMsg, Instance, ProcessCtx, ThresholdCoin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::sync::Arc;

#[allow(clippy::large_enum_variant)]
pub enum Ev {
    Deliver {
        from: ProcessId,
        to: ProcessId,
        msg: EngineMsg,
        depth: u32,
    },
    Timer {
        pid: ProcessId,
        round: Round,
    },
}

/// Single-instance network with random latency and optional crash times.
pub struct Net {
    pub ctxs: Vec<ProcessCtx>,
    pub insts: Vec<Instance>,
    queue: BinaryHeap<Reverse<(u64, u64)>>,
    events: BTreeMap<u64, Ev>,
    seq: u64,
    pub now: u64,
    rng: ChaCha8Rng,
    pub latency: (u64, u64),
    pub crash_at: BTreeMap<ProcessId, u64>,
    pub silent: BTreeSet<ProcessId>,
    pub decisions: BTreeMap<ProcessId, (Value, Round, u64, u32)>,
    pub violations: Vec<String>,
    pub budget_exceeded: bool,
    pub inputs: Vec<Value>,
    start: Vec<(ProcessId, Vec<Action>)>,
}

pub fn space(n: u32, sets: &[&[u32]], protocol: ProtocolSpec) -> Arc<ConfigSpace> {
    let configs = sets
        .iter()
        .map(|m| Configuration::new(protocol.clone(), ParticipantSet::from_ids(m, n).unwrap()))
        .collect();
    Arc::new(ConfigSpace::new(n, configs).unwrap())
}

pub enum Coin {
    Emulated(Schedule),
    Threshold,
}

impl Net {
    pub fn new(
        params: SystemParams,
        space: Arc<ConfigSpace>,
        coin: Coin,
        inputs: Vec<Value>,
        seed: u64,
        timeout_base_us: u64,
    ) -> Self {
        let keys = Arc::new(KeyRing::generate(params.n, seed));
        let group = Arc::new(GroupParams::default_256());
        let dealt = dealer_init(&params, &space, &group, seed).unwrap();
        let c0 = match coin {
            Coin::Threshold => dealt.c0,
            Coin::Emulated(_) => ConfigId(0),
        };
        let mut ctxs = Vec::new();
        let mut insts = Vec::new();
        let mut net = Net {
            ctxs: Vec::new(),
            insts: Vec::new(),
            queue: BinaryHeap::new(),
            events: BTreeMap::new(),
            seq: 0,
            now: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            latency: (100, 1000),
            crash_at: BTreeMap::new(),
            silent: BTreeSet::new(),
            decisions: BTreeMap::new(),
            violations: Vec::new(),
            budget_exceeded: false,
            inputs: inputs.clone(),
            start: Vec::new(),
        };
        let mut pending = Vec::new();
        for p in 0..params.n {
            let me = ProcessId(p);
            let backend =
                match coin {
                    Coin::Threshold => CoinBackend::Threshold(Box::new(
                        ThresholdCoin::from_dealer(me, &dealt, group.clone()),
                    )),
                    Coin::Emulated(s) => CoinBackend::Emulated(EmuCoin::new(seed, s)),
                };
            let auth = (params.mode == FaultMode::Byzantine).then(|| Auth {
                signer: keys.signer(me),
                keys: keys.clone(),
            });
            let mut ctx = ProcessCtx::new(me, params, space.clone(), backend, auth);
            ctx.timeout_base_us = timeout_base_us;
            let (inst, acts) = Instance::new(
                &mut ctx,
                InstanceId(0),
                Round(0),
                c0,
                inputs[p as usize].clone(),
                0,
            )
            .unwrap();
            ctxs.push(ctx);
            insts.push(inst);
            pending.push((me, acts));
        }
        net.ctxs = ctxs;
        net.insts = insts;
        net.start = pending;
        net
    }

    fn push(&mut self, at: u64, ev: Ev) {
        self.seq += 1;
        self.events.insert(self.seq, ev);
        self.queue.push(Reverse((at, self.seq)));
    }

    fn down(&self, p: ProcessId) -> bool {
        self.silent.contains(&p) || self.crash_at.get(&p).is_some_and(|&t| t <= self.now)
    }

    fn apply(&mut self, me: ProcessId, acts: Vec<Action>, depth: u32) {
        for a in acts {
            match a {
                Action::Send { to, msg } => {
                    let lat = if to == me {
                        0
                    } else {
                        self.rng.gen_range(self.latency.0..=self.latency.1)
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
                    round, after_us, ..
                } => self.push(self.now + after_us, Ev::Timer { pid: me, round }),
                Action::Decided { value, round, .. } => {
                    self.decisions.insert(me, (value, round, self.now, depth));
                }
                Action::BudgetExceeded { .. } => self.budget_exceeded = true,
                Action::Violation { detail, .. } => self.violations.push(detail),
                Action::RoundDone { .. } => {}
            }
        }
    }

    /// Runs until quiescent or `max_events` handled.
    pub fn run(&mut self, max_events: usize) {
        for (me, acts) in std::mem::take(&mut self.start) {
            if !self.down(me) {
                self.apply(me, acts, 0);
            }
        }
        for _ in 0..max_events {
            let Some(Reverse((t, seq))) = self.queue.pop() else {
                return;
            };
            self.now = t;
            let ev = self.events.remove(&seq).unwrap();
            match ev {
                Ev::Deliver {
                    from,
                    to,
                    msg,
                    depth,
                } => {
                    if self.down(to)
                        || self.down(from) && from != to && self.crash_before_send(from, t)
                    {
                        continue;
                    }
                    let i = to.0 as usize;
                    let acts = self.insts[i].handle(&mut self.ctxs[i], from, msg).unwrap();
                    self.apply(to, acts, depth);
                }
                Ev::Timer { pid, round } => {
                    if self.down(pid) {
                        continue;
                    }
                    let i = pid.0 as usize;
                    let acts = self.insts[i].on_timer(&mut self.ctxs[i], round).unwrap();
                    self.apply(pid, acts, 0);
                }
            }
        }
    }

    // Messages already in flight from a crashed sender still arrive.
    fn crash_before_send(&self, _from: ProcessId, _t: u64) -> bool {
        false
    }

    pub fn correct(&self) -> Vec<ProcessId> {
        (0..self.insts.len() as u32)
            .map(ProcessId)
            .filter(|p| !self.crash_at.contains_key(p) && !self.silent.contains(p))
            .collect()
    }

    pub fn decided_values(&self) -> BTreeSet<Value> {
        self.decisions.values().map(|(v, ..)| v.clone()).collect()
    }
}
