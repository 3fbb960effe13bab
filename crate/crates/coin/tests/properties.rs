use mptc_coin::{
    base_for, combine, combine_element, config_from_element, dealer_init, gfs, split_polynomial,
    verify, GroupParams,
};
use mptc_core::{
    ConfigSpace, Configuration, FaultMode, ParticipantSet, ProcessId, ProtocolSpec, Round,
    SystemParams,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

fn four_configs() -> ConfigSpace {
    let sets: [&[u32]; 4] = [&[0, 1, 2, 3], &[4, 5, 6, 7], &[0, 2, 4, 6], &[1, 3, 5, 7]];
    let configs = sets
        .iter()
        .map(|m| {
            Configuration::new(
                ProtocolSpec::paxos(),
                ParticipantSet::from_ids(m, 8).unwrap(),
            )
        })
        .collect();
    ConfigSpace::new(8, configs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Every f+1 subset agrees with g_hat^x computed straight from the secret.
    #[test]
    fn combine_matches_direct_oracle(
        x in any::<u64>(),
        a1 in any::<u64>(),
        round in 0u64..1_000_000,
    ) {
        let group = GroupParams::default_256();
        let space = four_configs();
        let set = space.get(mptc_core::ConfigId(2)).participants.clone();
        let coeffs = [BigUint::from(x), BigUint::from(a1)];
        let (shares, _) = split_polynomial(&group, &set, &coeffs).unwrap();
        let r = Round(round);
        let oracle_el = base_for(&group, set.index(), r).modpow(&BigUint::from(x), &group.p);
        let oracle = config_from_element(&oracle_el, &space, &group).unwrap();
        let fs: Vec<_> = shares.iter().map(|s| gfs(s, r, &group, FaultMode::Crash)).collect();
        for sub in subsets(fs.len(), 2) {
            let picked: Vec<_> = sub.iter().map(|&i| fs[i].clone()).collect();
            prop_assert_eq!(combine_element(&picked, r, &set, &group).unwrap(), oracle_el.clone());
            prop_assert_eq!(combine(&picked, r, 1, &space, &group).unwrap(), oracle);
        }
    }

    #[test]
    fn tampered_shares_fail_verification(delta in 1u64..1_000_000, round in 0u64..1000) {
        let group = GroupParams::default_256();
        let params = SystemParams::new(8, 0, 1, 4, FaultMode::Byzantine).unwrap();
        let space = four_configs();
        let dealt = dealer_init(&params, &space, &group, 3).unwrap();
        let share = dealt.share_for(ProcessId(5), space.get(mptc_core::ConfigId(3)).participants.index()).unwrap();
        let keys = &dealt.per_set_keys[&share.set_index];
        let mut fs = gfs(share, Round(round), &group, FaultMode::Byzantine);
        prop_assert!(verify(Round(round), &fs, keys, &group, FaultMode::Byzantine).unwrap());
        fs.sigma = fs.sigma * group.g.modpow(&BigUint::from(delta), &group.p) % &group.p;
        prop_assert!(!verify(Round(round), &fs, keys, &group, FaultMode::Byzantine).unwrap());
    }
}

#[test]
fn dealer_is_deterministic() {
    let group = GroupParams::default_256();
    let params = SystemParams::new(8, 0, 1, 4, FaultMode::Crash).unwrap();
    let space = four_configs();
    assert_eq!(
        dealer_init(&params, &space, &group, 42).unwrap(),
        dealer_init(&params, &space, &group, 42).unwrap()
    );
    assert_ne!(
        dealer_init(&params, &space, &group, 42)
            .unwrap()
            .per_set_keys,
        dealer_init(&params, &space, &group, 43)
            .unwrap()
            .per_set_keys
    );
}

#[test]
fn disjoint_sets_give_one_share_each() {
    let group = GroupParams::default_256();
    let params = SystemParams::new(6, 0, 1, 3, FaultMode::Crash).unwrap();
    let configs = [[0u32, 1, 2], [3, 4, 5]]
        .iter()
        .map(|m| {
            Configuration::new(
                ProtocolSpec::paxos(),
                ParticipantSet::from_ids(m, 6).unwrap(),
            )
        })
        .collect();
    let space = ConfigSpace::new(6, configs).unwrap();
    let out = dealer_init(&params, &space, &group, 1).unwrap();
    assert_eq!(out.per_process.len(), 6);
    assert!(out.per_process.values().all(|v| v.len() == 1));
}

#[test]
fn dealt_shares_interpolate_to_set_key() {
    let group = GroupParams::default_256();
    let params = SystemParams::new(8, 0, 1, 4, FaultMode::Byzantine).unwrap();
    let space = four_configs();
    let out = dealer_init(&params, &space, &group, 9).unwrap();
    for set in space.participant_sets() {
        let keys = &out.per_set_keys[&set.index()];
        // With g_hat = g every share is g^{x_i}; interpolation must land on g^x.
        let pinned = GroupParams::default_256();
        let fs: Vec<_> = set
            .members()
            .iter()
            .take(2)
            .map(|&p| {
                let s = out.share_for(p, set.index()).unwrap();
                mptc_coin::FunctionShare {
                    owner: p,
                    set_index: set.index(),
                    round: Round(0),
                    sigma: pinned.g.modpow(&s.x_i, &pinned.p),
                    proof: None,
                }
            })
            .collect();
        assert_eq!(
            combine_element(&fs, Round(0), set, &group).unwrap(),
            keys.vk_set
        );
    }
}
