use crate::dleq::DleqProof;
use crate::error::CoinError;
use crate::group::GroupParams;
use crate::hash::{h1_exponent, h2_bits};
use crate::shamir::lagrange_at_zero;
use mptc_core::{
    config_index_from_bits, ConfigId, ConfigSpace, FaultMode, ParticipantSet, ProcessId, Round,
    SetIndex,
};
use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// `h_S^p`: the owner's evaluation of the set polynomial at its position.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecretShare {
    pub owner: ProcessId,
    /// 1-based position of `owner` in the set.
    pub position: u32,
    pub set_index: SetIndex,
    pub x_i: BigUint,
}

impl std::fmt::Debug for SecretShare {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SecretShare")
            .field("owner", &self.owner)
            .field("position", &self.position)
            .field("set_index", &self.set_index)
            .finish_non_exhaustive()
    }
}

/// `F_S^p(r)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FunctionShare {
    pub owner: ProcessId,
    pub set_index: SetIndex,
    pub round: Round,
    pub sigma: BigUint,
    pub proof: Option<DleqProof>,
}

/// Public keys for one participant set: `g^x` and `g^{x_i}` per member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationKeys {
    pub set_index: SetIndex,
    pub vk_set: BigUint,
    pub vk_member: BTreeMap<ProcessId, BigUint>,
}

/// `g_hat` for a set and round.
pub fn base_for(group: &GroupParams, set: SetIndex, round: Round) -> BigUint {
    let e = h1_exponent(group, set, round);
    group.g.modpow(&e, &group.p)
}

pub fn gfs(
    share: &SecretShare,
    round: Round,
    group: &GroupParams,
    mode: FaultMode,
) -> FunctionShare {
    let base = base_for(group, share.set_index, round);
    let sigma = base.modpow(&share.x_i, &group.p);
    let proof = match mode {
        FaultMode::Crash => None,
        FaultMode::Byzantine => {
            let vk = group.g.modpow(&share.x_i, &group.p);
            Some(DleqProof::prove(group, &base, &vk, &sigma, &share.x_i))
        }
    };
    FunctionShare {
        owner: share.owner,
        set_index: share.set_index,
        round,
        sigma,
        proof,
    }
}

pub fn verify(
    round: Round,
    fshare: &FunctionShare,
    keys: &VerificationKeys,
    group: &GroupParams,
    mode: FaultMode,
) -> Result<bool, CoinError> {
    if mode == FaultMode::Crash {
        return Ok(true);
    }
    let vk = keys
        .vk_member
        .get(&fshare.owner)
        .ok_or(CoinError::UnknownShareOrigin(fshare.owner))?;
    if fshare.round != round || fshare.set_index != keys.set_index {
        return Ok(false);
    }
    let Some(proof) = &fshare.proof else {
        return Ok(false);
    };
    let base = base_for(group, fshare.set_index, round);
    Ok(proof.check(group, &base, vk, &fshare.sigma))
}

/// Interpolates `g_hat^x` from `f + 1` shares of `members`.
pub fn combine_element(
    fshares: &[FunctionShare],
    round: Round,
    members: &ParticipantSet,
    group: &GroupParams,
) -> Result<BigUint, CoinError> {
    let mut seen = BTreeSet::new();
    let mut points = Vec::with_capacity(fshares.len());
    for s in fshares {
        if s.round != round {
            return Err(CoinError::ShareRoundMismatch {
                expected: round,
                found: s.round,
            });
        }
        if s.set_index != members.index() {
            return Err(CoinError::ShareSetMismatch {
                expected: members.index(),
                found: s.set_index,
            });
        }
        if !seen.insert(s.owner) {
            return Err(CoinError::DuplicateShare(s.owner));
        }
        let pos = members
            .position(s.owner)
            .ok_or(CoinError::UnknownShareOrigin(s.owner))?;
        points.push(pos);
    }
    let lambdas = lagrange_at_zero(&group.q, &points);
    let mut acc = BigUint::one();
    for (s, l) in fshares.iter().zip(&lambdas) {
        acc = acc * s.sigma.modpow(l, &group.p) % &group.p;
    }
    Ok(acc)
}

/// Maps a combined element onto `space`.
pub fn config_from_element(
    element: &BigUint,
    space: &ConfigSpace,
    group: &GroupParams,
) -> Result<ConfigId, CoinError> {
    let bits = space.bits();
    let mut draw = 1u32;
    let mut src = |b: u32| {
        let out = h2_bits(group, element, draw, b);
        draw += 1;
        Some(out)
    };
    let first = h2_bits(group, element, 0, bits);
    Ok(config_index_from_bits(first, space, &mut src)?.id)
}

/// `F_S(r)` from exactly `f + 1` shares.
pub fn combine(
    fshares: &[FunctionShare],
    round: Round,
    f: u32,
    space: &ConfigSpace,
    group: &GroupParams,
) -> Result<ConfigId, CoinError> {
    if fshares.len() != f as usize + 1 {
        return Err(CoinError::WrongShareCount {
            expected: f as usize + 1,
            found: fshares.len(),
        });
    }
    let set_index = fshares[0].set_index;
    let members = space
        .participant_sets()
        .into_iter()
        .find(|s| s.index() == set_index)
        .ok_or(CoinError::UnknownShareOrigin(fshares[0].owner))?;
    let element = combine_element(fshares, round, members, group)?;
    config_from_element(&element, space, group)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shamir::split_polynomial;

    fn tiny_pinned() -> GroupParams {
        GroupParams::tiny_23().with_pinned_base()
    }

    fn hand_split(group: &GroupParams) -> (ParticipantSet, Vec<SecretShare>, VerificationKeys) {
        let set = ParticipantSet::from_ids(&[0, 1, 2], 3).unwrap();
        let (shares, keys) =
            split_polynomial(group, &set, &[BigUint::from(7u32), BigUint::from(3u32)]).unwrap();
        (set, shares, keys)
    }

    #[test]
    fn gfs_hand_vector() {
        let g = tiny_pinned();
        let (_, shares, _) = hand_split(&g);
        let fs = gfs(&shares[0], Round(0), &g, FaultMode::Crash);
        assert_eq!(fs.sigma, BigUint::from(6u32));
    }

    #[test]
    fn combine_hand_vector() {
        let g = tiny_pinned();
        let (set, shares, _) = hand_split(&g);
        let fs: Vec<_> = shares[..2]
            .iter()
            .map(|s| gfs(s, Round(0), &g, FaultMode::Crash))
            .collect();
        assert_eq!(fs[1].sigma, BigUint::from(16u32));
        let el = combine_element(&fs, Round(0), &set, &g).unwrap();
        assert_eq!(el, BigUint::from(8u32));
    }

    #[test]
    fn zero_share_gives_identity() {
        let g = GroupParams::tiny_23();
        let share = SecretShare {
            owner: ProcessId(0),
            position: 1,
            set_index: SetIndex(0),
            x_i: BigUint::from(0u32),
        };
        assert!(gfs(&share, Round(4), &g, FaultMode::Crash).sigma.is_one());
    }

    #[test]
    fn gfs_is_deterministic() {
        let g = GroupParams::default_256();
        let (_, shares, _) = hand_split(&g);
        let a = gfs(&shares[1], Round(3), &g, FaultMode::Byzantine);
        let b = gfs(&shares[1], Round(3), &g, FaultMode::Byzantine);
        assert_eq!(a, b);
    }

    #[test]
    fn verify_accepts_honest_and_rejects_tampered() {
        let g = GroupParams::default_256();
        let (_, shares, keys) = hand_split(&g);
        for s in &shares {
            let fs = gfs(s, Round(5), &g, FaultMode::Byzantine);
            assert!(verify(Round(5), &fs, &keys, &g, FaultMode::Byzantine).unwrap());
            assert!(!verify(Round(6), &fs, &keys, &g, FaultMode::Byzantine).unwrap());
            let mut bad = fs.clone();
            bad.sigma = bad.sigma * &g.g % &g.p;
            assert!(!verify(Round(5), &bad, &keys, &g, FaultMode::Byzantine).unwrap());
            // Crash mode skips the check entirely.
            assert!(verify(Round(5), &bad, &keys, &g, FaultMode::Crash).unwrap());
        }
    }

    #[test]
    fn verify_unknown_owner() {
        let g = GroupParams::default_256();
        let (_, shares, keys) = hand_split(&g);
        let mut fs = gfs(&shares[0], Round(0), &g, FaultMode::Byzantine);
        fs.owner = ProcessId(9);
        assert_eq!(
            verify(Round(0), &fs, &keys, &g, FaultMode::Byzantine),
            Err(CoinError::UnknownShareOrigin(ProcessId(9)))
        );
    }

    #[test]
    fn combine_rejects_malformed_sets() {
        let g = GroupParams::tiny_23();
        let (set, shares, _) = hand_split(&g);
        let a = gfs(&shares[0], Round(1), &g, FaultMode::Crash);
        let b = gfs(&shares[1], Round(2), &g, FaultMode::Crash);
        assert!(matches!(
            combine_element(&[a.clone(), a.clone()], Round(1), &set, &g),
            Err(CoinError::DuplicateShare(_))
        ));
        assert!(matches!(
            combine_element(&[a, b], Round(1), &set, &g),
            Err(CoinError::ShareRoundMismatch { .. })
        ));
    }

    #[test]
    fn single_share_when_f_is_zero() {
        let g = GroupParams::tiny_23();
        let set = ParticipantSet::from_ids(&[0, 1, 2], 3).unwrap();
        let (shares, _) = split_polynomial(&g, &set, &[BigUint::from(5u32)]).unwrap();
        let fs = gfs(&shares[2], Round(0), &g, FaultMode::Crash);
        let el = combine_element(std::slice::from_ref(&fs), Round(0), &set, &g).unwrap();
        assert_eq!(el, fs.sigma);
    }
}
