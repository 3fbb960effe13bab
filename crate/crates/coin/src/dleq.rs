//! Chaum-Pedersen proof that `log_g(vk) = log_base(sigma)`, made
//! non-interactive with the challenge oracle.

use crate::group::GroupParams;
use crate::hash::{challenge, hash_to_exponent};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DleqProof {
    pub challenge: BigUint,
    pub response: BigUint,
}

impl DleqProof {
    /// Nonce is derived from the witness and statement so proving stays a
    /// pure function.
    pub(crate) fn prove(
        group: &GroupParams,
        base: &BigUint,
        vk: &BigUint,
        sigma: &BigUint,
        x: &BigUint,
    ) -> Self {
        let k = hash_to_exponent(
            group,
            b"MPTC-DLEQ-NONCE",
            &[&group.encode(x), &group.encode(base), &group.encode(sigma)],
        );
        let a1 = group.g.modpow(&k, &group.p);
        let a2 = base.modpow(&k, &group.p);
        let c = challenge(group, &[&group.g, vk, base, sigma, &a1, &a2]);
        let z = (k + &c * x) % &group.q;
        DleqProof {
            challenge: c,
            response: z,
        }
    }

    pub(crate) fn check(
        &self,
        group: &GroupParams,
        base: &BigUint,
        vk: &BigUint,
        sigma: &BigUint,
    ) -> bool {
        if self.challenge >= group.q || self.response >= group.q {
            return false;
        }
        if !group.in_subgroup(sigma) || !group.in_subgroup(vk) {
            return false;
        }
        let p = &group.p;
        let neg_c = (&group.q - &self.challenge) % &group.q;
        let a1 = group.g.modpow(&self.response, p) * vk.modpow(&neg_c, p) % p;
        let a2 = base.modpow(&self.response, p) * sigma.modpow(&neg_c, p) % p;
        challenge(group, &[&group.g, vk, base, sigma, &a1, &a2]) == self.challenge
    }
}
