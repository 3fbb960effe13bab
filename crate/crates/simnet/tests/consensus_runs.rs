use mptc_coin::{verify, EmuCoin, GroupParams, Schedule};
use mptc_core::{ConfigSpace, FaultMode, ProcessId, ProtocolSpec, Round, SystemParams, Value};
use mptc_simnet::{
    run_consensus, ByzantineBehaviour, ConsensusCoin, ConsensusScenario, CrashAt, LatencyModel,
};
use std::sync::Arc;

fn crash_scenario(seed: u64, instances: usize) -> ConsensusScenario {
    let space = Arc::new(ConfigSpace::every_set(6, 3, ProtocolSpec::paxos()).unwrap());
    ConsensusScenario {
        params: SystemParams::new(6, 1, 0, 3, FaultMode::Crash).unwrap(),
        space,
        coin: ConsensusCoin::Emulated(EmuCoin::new(seed, Schedule::Seeded)),
        inputs: (0..instances)
            .map(|i| (0..6u8).map(|p| Value(vec![i as u8, p])).collect())
            .collect(),
        latency: LatencyModel::default(),
        timeout_base_us: 20_000,
        round_budget: 64,
        crashes: vec![],
        byzantine: None,
        seed,
        max_time_us: 10_000_000,
    }
}

fn byzantine_scenario(
    seed: u64,
    group: &Arc<GroupParams>,
    unanimous: bool,
    instances: usize,
) -> ConsensusScenario {
    let space = Arc::new(ConfigSpace::every_set(9, 4, ProtocolSpec::quorum_cert()).unwrap());
    let byz = ProcessId((seed % 9) as u32);
    ConsensusScenario {
        params: SystemParams::new(9, 0, 1, 4, FaultMode::Byzantine).unwrap(),
        space,
        coin: ConsensusCoin::Threshold {
            group: group.clone(),
            dealer_seed: seed,
        },
        inputs: (0..instances)
            .map(|i| {
                (0..9u8)
                    .map(|p| Value(vec![i as u8, if unanimous { 7 } else { p }]))
                    .collect()
            })
            .collect(),
        latency: LatencyModel::default(),
        timeout_base_us: 20_000,
        round_budget: 64,
        crashes: vec![],
        byzantine: Some((byz, ByzantineBehaviour::all())),
        seed,
        max_time_us: 20_000_000,
    }
}

#[test]
fn failure_free_instances_decide_in_round_zero() {
    let sc = crash_scenario(3, 5);
    let r = run_consensus(&sc).unwrap();
    assert!(r.all_correct_decided(5));
    assert_eq!(r.agreement_violation(), None);
    let space = &sc.space;
    let leader = space.get(r.initial).leader(Round(0));
    for ((i, p), d) in &r.decisions {
        assert_eq!(d.round, Round(0), "instance {} at p{}", i.0, p.0);
        assert_eq!(d.value, sc.inputs[i.0 as usize][leader.0 as usize]);
        if *p == leader {
            assert_eq!(d.depth, 2);
            assert!(!d.learned);
        }
    }
}

#[test]
fn crashed_leader_is_replaced() {
    let mut sc = crash_scenario(5, 3);
    let first = mptc_coin::emu_next_config(
        match &sc.coin {
            ConsensusCoin::Emulated(c) => c,
            _ => unreachable!(),
        },
        Round(0),
        &sc.space,
    );
    let leader = sc.space.get(first).leader(Round(0));
    sc.crashes = vec![CrashAt {
        at_us: 0,
        pid: leader.0,
    }];
    let r = run_consensus(&sc).unwrap();
    assert!(r.all_correct_decided(3));
    assert_eq!(r.agreement_violation(), None);
    assert!(r.decisions.values().all(|d| d.round > Round(0)));
}

#[test]
fn byzantine_process_cannot_split_or_forge() {
    let group = Arc::new(GroupParams::default_256());
    let mut forged = 0;
    for seed in 0..6 {
        for unanimous in [false, true] {
            let sc = byzantine_scenario(seed, &group, unanimous, 4);
            let r = run_consensus(&sc).unwrap();
            assert!(r.all_correct_decided(4), "seed {seed}");
            assert_eq!(r.agreement_violation(), None, "seed {seed}");
            assert!(r.violations.is_empty(), "{:?}", r.violations);
            if unanimous {
                for ((i, p), d) in &r.decisions {
                    if r.correct.contains(p) {
                        assert_eq!(d.value, Value(vec![i.0 as u8, 7]));
                    }
                }
            }
            let dealt = r.dealt.as_ref().unwrap();
            for fs in &r.forged_shares {
                let keys = &dealt.per_set_keys[&fs.set_index];
                assert!(!verify(fs.round, fs, keys, &group, FaultMode::Byzantine).unwrap());
            }
            forged += r.forged_shares.len();
        }
    }
    assert!(forged > 0);
}
