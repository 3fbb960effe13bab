use crate::error::CoinError;
use crate::group::GroupParams;
use crate::scheme::{SecretShare, VerificationKeys};
use mptc_core::ParticipantSet;
use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::RngCore;
use std::collections::BTreeMap;

/// Shares a fresh uniform secret over `members` with threshold `f + 1`.
pub fn split(
    group: &GroupParams,
    members: &ParticipantSet,
    f: u32,
    rng: &mut dyn RngCore,
) -> Result<(Vec<SecretShare>, VerificationKeys), CoinError> {
    let coeffs: Vec<BigUint> = (0..=f).map(|_| rng.gen_biguint_below(&group.q)).collect();
    split_polynomial(group, members, &coeffs)
}

/// Shares `coeffs[0]` using the polynomial `sum coeffs[k] z^k`.
pub fn split_polynomial(
    group: &GroupParams,
    members: &ParticipantSet,
    coeffs: &[BigUint],
) -> Result<(Vec<SecretShare>, VerificationKeys), CoinError> {
    let p_f = members.len() as u32;
    if group.q <= BigUint::from(p_f) {
        return Err(CoinError::GroupTooSmall {
            q: group.q.to_string(),
            p_f,
        });
    }
    if coeffs.is_empty() || coeffs.len() > members.len() {
        return Err(CoinError::WrongShareCount {
            expected: members.len(),
            found: coeffs.len(),
        });
    }
    let mut shares = Vec::with_capacity(members.len());
    let mut vk_member = BTreeMap::new();
    for (pos, &owner) in members.members().iter().enumerate() {
        let z = BigUint::from(pos as u64 + 1);
        let mut acc = BigUint::zero();
        for c in coeffs.iter().rev() {
            acc = (acc * &z + c) % &group.q;
        }
        vk_member.insert(owner, group.g.modpow(&acc, &group.p));
        shares.push(SecretShare {
            owner,
            position: pos as u32 + 1,
            set_index: members.index(),
            x_i: acc,
        });
    }
    let keys = VerificationKeys {
        set_index: members.index(),
        vk_set: group.g.modpow(&(&coeffs[0] % &group.q), &group.p),
        vk_member,
    };
    Ok((shares, keys))
}

/// Lagrange coefficients at zero for the given 1-based evaluation points.
pub fn lagrange_at_zero(q: &BigUint, points: &[u32]) -> Vec<BigUint> {
    let q_minus_2 = q - 2u32;
    points
        .iter()
        .map(|&i| {
            let mut num = BigUint::one();
            let mut den = BigUint::one();
            for &j in points {
                if j == i {
                    continue;
                }
                num = num * BigUint::from(j) % q;
                // j - i mod q
                let diff = (BigUint::from(j) + q - BigUint::from(i) % q) % q;
                den = den * diff % q;
            }
            num * den.modpow(&q_minus_2, q) % q
        })
        .collect()
}
