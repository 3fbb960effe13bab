use mptc_core::{config_index_from_bits, ConfigId, ConfigSpace, Round};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// `schedule[r] = configs[r mod |space|]`.
    RoundRobin,
    /// Independent uniform draw per round.
    Seeded,
}

/// Emulated coin: a fixed, seed-determined configuration per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmuCoin {
    pub seed: u64,
    pub schedule: Schedule,
}

impl EmuCoin {
    pub fn new(seed: u64, schedule: Schedule) -> Self {
        EmuCoin { seed, schedule }
    }
}

/// `schedule[round]`.
pub fn emu_next_config(coin: &EmuCoin, round: Round, space: &ConfigSpace) -> ConfigId {
    match coin.schedule {
        Schedule::RoundRobin => ConfigId((round.0 % space.len() as u64) as u32),
        Schedule::Seeded => {
            let mut rng = ChaCha8Rng::seed_from_u64(coin.seed);
            rng.set_stream(round.0);
            let bits = space.bits();
            let mask = if bits >= 64 {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            };
            let first = rng.next_u64() & mask;
            let mut retry = |_: u32| Some(rng.next_u64() & mask);
            config_index_from_bits(first, space, &mut retry)
                .expect("rng retries never run dry")
                .id
        }
    }
}
