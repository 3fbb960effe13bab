use mptc_coin::{
    combine, combine_element, config_from_element, gfs, CoinError, DealerOutput, FunctionShare,
    GroupParams,
};
use mptc_core::{ConfigId, ConfigSpace, FaultMode, ParticipantSet, ProcessId, Round};
use num_bigint::RandBigInt;
use rand::Rng;
use std::collections::BTreeSet;

/// Whether `requester` may learn `C_{r+1}` from the emulated coin: only
/// members of `S_r` or `S_{r+1}`, and only once the asking instance holds a
/// Phase-2 quorum.
pub fn coin_visibility(
    space: &ConfigSpace,
    requester: ProcessId,
    current: ConfigId,
    next: ConfigId,
    has_quorum: bool,
) -> bool {
    has_quorum && (space.get(current).contains(requester) || space.get(next).contains(requester))
}

/// An adversary trying to predict the next configuration from what the
/// compromised processes hold.
#[derive(Debug, Clone)]
pub struct AdversaryProbe {
    compromised: BTreeSet<ProcessId>,
}

impl AdversaryProbe {
    pub fn new(compromised: impl IntoIterator<Item = ProcessId>) -> Self {
        AdversaryProbe {
            compromised: compromised.into_iter().collect(),
        }
    }

    pub fn compromised_in(&self, set: &ParticipantSet) -> Vec<ProcessId> {
        set.members()
            .iter()
            .copied()
            .filter(|p| self.compromised.contains(p))
            .collect()
    }

    /// Threshold coin: with f+1 compromised shares of `set` the adversary
    /// combines exactly; otherwise it completes its shares with random
    /// group elements and maps the interpolation.
    #[allow(clippy::too_many_arguments)]
    pub fn guess_threshold(
        &self,
        dealt: &DealerOutput,
        set: &ParticipantSet,
        round: Round,
        f: u32,
        space: &ConfigSpace,
        group: &GroupParams,
        rng: &mut impl Rng,
    ) -> Result<ConfigId, CoinError> {
        let held: Vec<FunctionShare> = self
            .compromised_in(set)
            .into_iter()
            .filter_map(|p| dealt.share_for(p, set.index()))
            .map(|s| gfs(s, round, group, FaultMode::Crash))
            .collect();
        let k = f as usize + 1;
        if held.len() >= k {
            return combine(&held[..k], round, f, space, group);
        }
        let mut shares = held;
        for &p in set.members() {
            if shares.len() == k {
                break;
            }
            if shares.iter().any(|s| s.owner == p) {
                continue;
            }
            let exp = rng.gen_biguint_below(&group.q);
            shares.push(FunctionShare {
                owner: p,
                set_index: set.index(),
                round,
                sigma: group.g.modpow(&exp, &group.p),
                proof: None,
            });
        }
        let el = combine_element(&shares, round, set, group)?;
        config_from_element(&el, space, group)
    }

    /// Emulated coin: the true answer leaks only with f+1 compromised
    /// members of the round's set; otherwise a uniform guess.
    pub fn guess_emulated(
        &self,
        truth: ConfigId,
        set: &ParticipantSet,
        f: u32,
        space: &ConfigSpace,
        rng: &mut impl Rng,
    ) -> ConfigId {
        if self.compromised_in(set).len() > f as usize {
            truth
        } else {
            ConfigId(rng.gen_range(0..space.len() as u32))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mptc_core::{Configuration, ProtocolSpec};

    fn space() -> ConfigSpace {
        let configs = [[0, 1, 2], [3, 4, 5]]
            .iter()
            .map(|m| {
                Configuration::new(
                    ProtocolSpec::paxos(),
                    ParticipantSet::from_ids(m, 6).unwrap(),
                )
            })
            .collect();
        ConfigSpace::new(6, configs).unwrap()
    }

    #[test]
    fn only_round_members_after_quorum() {
        let s = space();
        assert!(coin_visibility(
            &s,
            ProcessId(1),
            ConfigId(0),
            ConfigId(1),
            true
        ));
        assert!(coin_visibility(
            &s,
            ProcessId(4),
            ConfigId(0),
            ConfigId(1),
            true
        ));
        assert!(!coin_visibility(
            &s,
            ProcessId(1),
            ConfigId(0),
            ConfigId(1),
            false
        ));
        assert!(!coin_visibility(
            &s,
            ProcessId(4),
            ConfigId(0),
            ConfigId(0),
            true
        ));
    }
}
