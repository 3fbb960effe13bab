//! Random single-fault scenarios for safety fuzzing.

use crate::adversary::{AdversarySpec, CrashAt, DosModel, DosWindow};
use crate::latency::LatencyModel;
use crate::smr_sim::{CoinSetup, SmrScenario};
use mptc_coin::{emu_next_config, EmuCoin, GroupParams, Schedule};
use mptc_core::{ConfigSpace, CoreError, FaultMode, ProtocolSpec, Round, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Shared inputs for a fuzz campaign; building the space and group once
/// keeps per-run setup cheap.
#[derive(Debug, Clone)]
pub struct FuzzSetup {
    pub space: Arc<ConfigSpace>,
    pub group: Arc<GroupParams>,
}

impl FuzzSetup {
    /// Six processes, every three-member set.
    pub fn six() -> Result<Self, CoreError> {
        Ok(FuzzSetup {
            space: Arc::new(ConfigSpace::every_set(6, 3, ProtocolSpec::paxos())?),
            group: Arc::new(GroupParams::default_256()),
        })
    }
}

/// One crashed process or one saturated process at a time, chosen by `seed`.
pub fn fault_scenario(setup: &FuzzSetup, seed: u64) -> SmrScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf022);
    let duration_us = 300_000;
    let n = setup.space.n();
    let crash = rng.gen_bool(0.4);
    let (f_c, f_a) = if crash { (1, 0) } else { (0, 1) };
    let params =
        SystemParams::new(n, f_c, f_a, setup.space.p_f(), FaultMode::Crash).expect("n=6, f=1");
    let coin = if rng.gen_ratio(1, 4) {
        CoinSetup::Threshold {
            group: setup.group.clone(),
            dealer_seed: seed,
        }
    } else {
        CoinSetup::Emulated(EmuCoin::new(seed, Schedule::Seeded))
    };
    // Half of the faults hit the first leader so that handoffs happen often.
    let leader = match &coin {
        CoinSetup::Emulated(c) => {
            let c0 = emu_next_config(c, Round(0), &setup.space);
            Some(setup.space.get(c0).leader(Round(0)).0)
        }
        CoinSetup::Threshold { .. } => None,
    };
    let victim = |rng: &mut ChaCha8Rng| match leader {
        Some(l) if rng.gen_bool(0.5) => l,
        _ => rng.gen_range(0..n),
    };
    let mut adversary = AdversarySpec::none();
    if crash {
        adversary.crashes.push(CrashAt {
            at_us: rng.gen_range(0..duration_us),
            pid: victim(&mut rng),
        });
    } else {
        let mut t = rng.gen_range(0..duration_us / 2);
        for _ in 0..rng.gen_range(1..=3) {
            let len = rng.gen_range(10_000..200_000);
            let open = rng.gen_bool(0.15);
            adversary.dos.push(DosWindow {
                from_us: t,
                to_us: (!open).then_some(t + len),
                targets: vec![victim(&mut rng)],
            });
            if open {
                break;
            }
            t += len + rng.gen_range(0..50_000);
        }
        if rng.gen_bool(0.5) {
            adversary.dos_model = DosModel::Throttle {
                link_us: rng.gen_range(100..400),
            };
        }
    }
    SmrScenario {
        params,
        space: setup.space.clone(),
        coin,
        clients: rng.gen_range(1..=6),
        request_size: 100,
        duration_us,
        drain_us: 1_500_000,
        window: if rng.gen_bool(0.3) { 4 } else { 32 },
        replicas: 2,
        timeout_base_us: 20_000,
        round_budget: 64,
        latency: LatencyModel::default(),
        service_us: 20,
        adversary,
        seed,
        trace_ring: 256,
        full_trace: false,
    }
}
