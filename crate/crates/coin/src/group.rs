use crate::error::CoinError;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// How the per-round base `g_hat` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaseMode {
    /// `g_hat = g^{H1(set, round)}`.
    Hashed,
    /// `g_hat = g` for every round. Only for hand-checked vectors.
    PinnedToGenerator,
}

/// Safe-prime group `p = 2q + 1` with `g` generating the order-`q` subgroup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    pub p: BigUint,
    pub q: BigUint,
    pub g: BigUint,
    pub base_mode: BaseMode,
}

const P256: &str = "c1bb77736557d74e0f7402388c98bc06d12bc24e0901bb1d653019ad548f482b";

impl GroupParams {
    /// Validates structure and primality of `p` and `q`.
    pub fn new(p: BigUint, q: BigUint, g: BigUint) -> Result<Self, CoinError> {
        let group = GroupParams {
            p,
            q,
            g,
            base_mode: BaseMode::Hashed,
        };
        group.validate()?;
        Ok(group)
    }

    /// 256-bit safe prime with generator 4.
    pub fn default_256() -> Self {
        let p = BigUint::parse_bytes(P256.as_bytes(), 16).expect("constant parses");
        let q = (&p - 1u32) >> 1;
        GroupParams {
            p,
            q,
            g: BigUint::from(4u32),
            base_mode: BaseMode::Hashed,
        }
    }

    /// `p = 23, q = 11, g = 4`.
    #[cfg(any(test, feature = "insecure-test-params"))]
    pub fn tiny_23() -> Self {
        GroupParams {
            p: BigUint::from(23u32),
            q: BigUint::from(11u32),
            g: BigUint::from(4u32),
            base_mode: BaseMode::Hashed,
        }
    }

    #[cfg(any(test, feature = "insecure-test-params"))]
    pub fn with_pinned_base(mut self) -> Self {
        self.base_mode = BaseMode::PinnedToGenerator;
        self
    }

    pub fn validate(&self) -> Result<(), CoinError> {
        let two_q_plus_one = (&self.q << 1) + 1u32;
        if self.p != two_q_plus_one {
            return Err(CoinError::InvalidGroup("p != 2q + 1".into()));
        }
        if !is_probable_prime(&self.q) || !is_probable_prime(&self.p) {
            return Err(CoinError::InvalidGroup("p or q is not prime".into()));
        }
        if self.g.is_zero() || self.g.is_one() || self.g >= self.p {
            return Err(CoinError::InvalidGroup("generator out of range".into()));
        }
        if !self.g.modpow(&self.q, &self.p).is_one() {
            return Err(CoinError::InvalidGroup(
                "generator not in the order-q subgroup".into(),
            ));
        }
        Ok(())
    }

    /// Byte width used when hashing group and field elements.
    pub fn element_len(&self) -> usize {
        self.p.bits().div_ceil(8) as usize
    }

    pub fn in_subgroup(&self, x: &BigUint) -> bool {
        !x.is_zero() && x < &self.p && x.modpow(&self.q, &self.p).is_one()
    }

    pub(crate) fn encode(&self, x: &BigUint) -> Vec<u8> {
        let raw = x.to_bytes_be();
        let width = self.element_len();
        let mut out = vec![0u8; width.saturating_sub(raw.len())];
        out.extend_from_slice(&raw);
        out
    }
}

/// Miller-Rabin with the first twelve prime bases; deterministic below 2^64
/// and overwhelming beyond.
fn is_probable_prime(n: &BigUint) -> bool {
    const BASES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for b in BASES {
        let b = BigUint::from(b);
        if n == &b {
            return true;
        }
        if (n % &b).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - 1u32;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'witness: for b in BASES {
        let mut x = BigUint::from(b).modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
