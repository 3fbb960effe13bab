use mptc_core::{
    config_index_from_bits, leader_of, rank_participant_set, unrank_participant_set, ConfigSpace,
    Configuration, ParticipantSet, ProcessId, ProtocolSpec, Round, SetIndex,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space_of(len: u32) -> ConfigSpace {
    let configs = (0..len)
        .map(|i| {
            let set = ParticipantSet::from_ids(&[i, i + 1, i + 2], len + 3).unwrap();
            Configuration::new(ProtocolSpec::paxos(), set)
        })
        .collect();
    ConfigSpace::new(len + 3, configs).unwrap()
}

proptest! {
    #[test]
    fn rank_unrank_round_trip(n in 1u32..=8, k_seed in 0u32..8, pick in any::<u64>()) {
        let k = 1 + k_seed % n;
        let total = mptc_core::binomial(n, k).unwrap();
        let idx = SetIndex(pick % total);
        let members = unrank_participant_set(idx, n, k).unwrap();
        prop_assert_eq!(members.len() as u32, k);
        prop_assert!(members.windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(rank_participant_set(&members, n, k).unwrap(), idx);
    }

    #[test]
    fn index_always_in_range(len in 1u32..40, bits in any::<u64>(), seed in any::<u64>()) {
        let space = space_of(len);
        let width = space.bits();
        let b = if width == 0 { 0 } else { bits & ((1u64 << width) - 1) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut src = move |w: u32| Some(rng.gen::<u64>() & ((1u64 << w) - 1));
        let d = config_index_from_bits(b, &space, &mut src).unwrap();
        prop_assert!((d.id.0 as usize) < space.len());
    }

    #[test]
    fn leader_is_pure(ids in proptest::collection::btree_set(0u32..50, 1..8), r in any::<u64>()) {
        let ids: Vec<u32> = ids.into_iter().collect();
        let c = Configuration::new(ProtocolSpec::paxos(), ParticipantSet::from_ids(&ids, 50).unwrap());
        let a = leader_of(&c, Round(r));
        prop_assert_eq!(a, leader_of(&c, Round(r)));
        prop_assert_eq!(a, ProcessId(ids[(r % ids.len() as u64) as usize]));
    }
}

/// Rejection sampling over 10^5 draws keeps every index within 5 sigma of
/// the uniform expectation.
#[test]
fn rejection_sampling_is_uniform() {
    let space = space_of(5);
    let width = space.bits();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let draws = 100_000u32;
    let mut counts = vec![0u32; space.len()];
    for _ in 0..draws {
        let first = rng.gen::<u64>() & ((1 << width) - 1);
        let mut src = |w: u32| Some(rng.gen::<u64>() & ((1u64 << w) - 1));
        let d = config_index_from_bits(first, &space, &mut src).unwrap();
        assert!(d.uniform);
        counts[d.id.0 as usize] += 1;
    }
    let p = 1.0 / space.len() as f64;
    let mean = draws as f64 * p;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!(
            (c as f64 - mean).abs() <= 5.0 * sigma,
            "count {c} vs mean {mean}"
        );
    }
}
