//! Domain-separated SHA-256 oracles.

use crate::group::{BaseMode, GroupParams};
use mptc_core::{Round, SetIndex};
use num_bigint::BigUint;
use num_traits::Zero;
use sha2::{Digest, Sha256};

fn digest(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u32).to_le_bytes());
        h.update(p);
    }
    h.finalize().into()
}

/// Rejection-samples a nonzero element of `Z_q` from `domain ‖ parts ‖ ctr`.
pub(crate) fn hash_to_exponent(group: &GroupParams, domain: &[u8], parts: &[&[u8]]) -> BigUint {
    let bits = group.q.bits();
    let mask_len = bits.div_ceil(8) as usize;
    let mut ctr: u32 = 0;
    loop {
        let mut wide = Vec::with_capacity(mask_len + 32);
        let mut block: u32 = 0;
        while wide.len() < mask_len {
            let ctr_b = ctr.to_le_bytes();
            let blk_b = block.to_le_bytes();
            let mut all: Vec<&[u8]> = vec![domain];
            all.extend_from_slice(parts);
            all.push(&ctr_b);
            all.push(&blk_b);
            wide.extend_from_slice(&digest(&all));
            block += 1;
        }
        wide.truncate(mask_len);
        let mut e = BigUint::from_bytes_be(&wide);
        let excess = (mask_len as u64) * 8 - bits;
        e >>= excess;
        if !e.is_zero() && e < group.q {
            return e;
        }
        ctr += 1;
    }
}

/// `H1(set ‖ round)` as an exponent.
pub(crate) fn h1_exponent(group: &GroupParams, set: SetIndex, round: Round) -> BigUint {
    match group.base_mode {
        BaseMode::PinnedToGenerator => BigUint::from(1u32),
        BaseMode::Hashed => hash_to_exponent(
            group,
            b"MPTC-H1",
            &[&set.0.to_le_bytes(), &round.0.to_le_bytes()],
        ),
    }
}

/// `H2(sigma ‖ draw)` truncated to the low `bits` bits.
pub(crate) fn h2_bits(group: &GroupParams, sigma: &BigUint, draw: u32, bits: u32) -> u64 {
    let d = digest(&[b"MPTC-H2", &group.encode(sigma), &draw.to_le_bytes()]);
    let word = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
    if bits >= 64 {
        word
    } else {
        word & ((1u64 << bits) - 1)
    }
}

pub(crate) fn challenge(group: &GroupParams, elems: &[&BigUint]) -> BigUint {
    let enc: Vec<Vec<u8>> = elems.iter().map(|e| group.encode(e)).collect();
    let refs: Vec<&[u8]> = enc.iter().map(|v| v.as_slice()).collect();
    hash_to_exponent(group, b"MPTC-DLEQ", &refs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_in_range_and_nonzero() {
        let g = GroupParams::tiny_23();
        for r in 0..200u64 {
            let e = h1_exponent(&g, SetIndex(3), Round(r));
            assert!(!e.is_zero() && e < g.q);
        }
    }

    #[test]
    fn pinned_base_uses_generator() {
        let g = GroupParams::tiny_23().with_pinned_base();
        assert_eq!(h1_exponent(&g, SetIndex(0), Round(9)), BigUint::from(1u32));
    }

    #[test]
    fn h1_separates_set_and_round() {
        let g = GroupParams::default_256();
        let a = h1_exponent(&g, SetIndex(1), Round(2));
        let b = h1_exponent(&g, SetIndex(2), Round(1));
        assert_ne!(a, b);
    }
}
