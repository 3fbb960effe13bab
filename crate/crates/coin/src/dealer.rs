use crate::error::CoinError;
use crate::group::GroupParams;
use crate::scheme::{SecretShare, VerificationKeys};
use crate::shamir::split;
use mptc_core::{ConfigId, ConfigSpace, ProcessId, SetIndex, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// What survives the dealer: `C_0`, each process's shares and the public keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DealerOutput {
    pub c0: ConfigId,
    pub per_process: BTreeMap<ProcessId, Vec<SecretShare>>,
    pub per_set_keys: BTreeMap<SetIndex, VerificationKeys>,
}

impl DealerOutput {
    pub fn share_for(&self, p: ProcessId, set: SetIndex) -> Option<&SecretShare> {
        self.per_process
            .get(&p)?
            .iter()
            .find(|s| s.set_index == set)
    }
}

pub fn dealer_init(
    params: &SystemParams,
    space: &ConfigSpace,
    group: &GroupParams,
    seed: u64,
) -> Result<DealerOutput, CoinError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut per_process: BTreeMap<ProcessId, Vec<SecretShare>> = BTreeMap::new();
    let mut per_set_keys = BTreeMap::new();
    let mut sets = space.participant_sets();
    sets.sort_by_key(|s| s.index());
    for set in sets {
        let (shares, keys) = split(group, set, params.f(), &mut rng)?;
        for share in shares {
            per_process.entry(share.owner).or_default().push(share);
        }
        per_set_keys.insert(set.index(), keys);
    }
    let c0 = ConfigId(rng.gen_range(0..space.len() as u32));
    Ok(DealerOutput {
        c0,
        per_process,
        per_set_keys,
    })
}
