use rand::Rng;
use serde::{Deserialize, Serialize};

/// One-way delay: `base_us` plus a uniform draw from `[0, jitter_us]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub base_us: u64,
    pub jitter_us: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel {
            base_us: 500,
            jitter_us: 200,
        }
    }
}

impl LatencyModel {
    pub fn sample(&self, rng: &mut impl Rng) -> u64 {
        if self.jitter_us == 0 {
            self.base_us
        } else {
            self.base_us + rng.gen_range(0..=self.jitter_us)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_jitter_is_exact() {
        let m = LatencyModel {
            base_us: 1000,
            jitter_us: 0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(m.sample(&mut rng), 1000);
    }

    #[test]
    fn same_seed_same_delays() {
        let m = LatencyModel::default();
        let draw = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            (0..32).map(|_| m.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert!(draw(7).iter().all(|&d| (500..=700).contains(&d)));
    }
}
