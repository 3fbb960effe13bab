use mptc_coin::{EmuCoin, Schedule};
use mptc_core::{
    ConfigSpace, Configuration, FaultMode, ParticipantSet, ProtocolSpec, SystemParams,
};
use mptc_simnet::{
    run_smr, AdversarySpec, CoinSetup, DosModel, DosWindow, LatencyModel, SmrScenario,
};
use std::sync::Arc;
use std::time::Instant;

fn two_sets(protocol: ProtocolSpec) -> Arc<ConfigSpace> {
    let a = ParticipantSet::from_ids(&[0, 1, 2], 6).unwrap();
    let b = ParticipantSet::from_ids(&[3, 4, 5], 6).unwrap();
    Arc::new(
        ConfigSpace::new(
            6,
            vec![
                Configuration::new(protocol.clone(), a),
                Configuration::new(protocol, b),
            ],
        )
        .unwrap(),
    )
}

fn scenario(clients: usize, seed: u64) -> SmrScenario {
    SmrScenario {
        params: SystemParams::new(6, 0, 1, 3, FaultMode::Crash).unwrap(),
        space: two_sets(ProtocolSpec::paxos()),
        coin: CoinSetup::Emulated(EmuCoin::new(seed, Schedule::RoundRobin)),
        clients,
        request_size: 100,
        duration_us: 2_000_000,
        drain_us: 2_000_000,
        window: 32,
        replicas: 2,
        timeout_base_us: 50_000,
        round_budget: 64,
        latency: LatencyModel::default(),
        service_us: 20,
        adversary: AdversarySpec::none(),
        seed,
        trace_ring: 256,
        full_trace: false,
    }
}

#[test]
fn failure_free_run_never_reconfigures() {
    let t = Instant::now();
    let r = run_smr(&scenario(8, 1)).unwrap();
    eprintln!("{} ops in {:?}", r.metrics.completed_ops, t.elapsed());
    assert!(r.metrics.completed_ops > 100);
    assert_eq!(r.metrics.reconfigurations, 0);
    assert_eq!(r.metrics.outstanding, 0);
    assert_eq!(r.replicas[0], r.replicas[1]);
}

#[test]
fn throttled_leader_is_moved_away() {
    let base = run_smr(&scenario(64, 3)).unwrap();
    let mut sc = scenario(64, 3);
    sc.adversary.dos = vec![DosWindow {
        from_us: 0,
        to_us: None,
        targets: vec![0],
    }];
    sc.adversary.dos_model = DosModel::Throttle { link_us: 200 };
    let r = run_smr(&sc).unwrap();
    assert!(r.metrics.reconfigurations >= 1);
    assert_eq!(r.metrics.outstanding, 0);
    assert!(r.metrics.completed_ops * 10 >= base.metrics.completed_ops * 7);
    assert_eq!(r.replicas[0], r.replicas[1]);
}

#[test]
fn fault_fuzz_is_safe() {
    let setup = mptc_simnet::FuzzSetup::six().unwrap();
    let t = Instant::now();
    let mut reconf = 0;
    for seed in 0..60 {
        let sc = mptc_simnet::fault_scenario(&setup, seed);
        match run_smr(&sc) {
            Ok(r) => {
                reconf += r.metrics.reconfigurations;
                assert_eq!(r.replicas[0], r.replicas[1], "seed {seed}");
            }
            Err(e) => panic!("seed {seed}: {e}\n{:?}", sc.adversary),
        }
    }
    eprintln!("60 runs, {reconf} reconfigurations, {:?}", t.elapsed());
}
