//! Participant sets, configurations and the finite configuration space.

use crate::combin::{checked_binomial, rank_participant_set, unrank_participant_set};
use crate::error::CoreError;
use crate::ids::{ConfigId, ProcessId, Round, SetIndex};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Registered round protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    /// Single-decree Paxos with a predetermined leader (crash faults).
    PaxosVariant,
    /// Signed prepare/commit quorum round (Byzantine faults).
    QuorumCert,
}

/// Round protocol plus its opaque initialization block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub protocol: ProtocolId,
    #[serde(default)]
    pub init_params: Vec<u8>,
}

const PINNED_LEADER_TAG: u8 = 0x01;

impl ProtocolSpec {
    pub fn paxos() -> Self {
        ProtocolSpec {
            protocol: ProtocolId::PaxosVariant,
            init_params: Vec::new(),
        }
    }

    /// Paxos variant whose leader stays at `position` in every round instead
    /// of rotating.
    pub fn paxos_pinned(position: u32) -> Self {
        let mut init_params = vec![PINNED_LEADER_TAG];
        init_params.extend_from_slice(&position.to_le_bytes());
        ProtocolSpec {
            protocol: ProtocolId::PaxosVariant,
            init_params,
        }
    }

    pub fn quorum_cert() -> Self {
        ProtocolSpec {
            protocol: ProtocolId::QuorumCert,
            init_params: Vec::new(),
        }
    }

    pub fn pinned_leader(&self) -> Option<u32> {
        match self.init_params.as_slice() {
            [PINNED_LEADER_TAG, a, b, c, d] => Some(u32::from_le_bytes([*a, *b, *c, *d])),
            _ => None,
        }
    }
}

/// Ordered (ascending id) set of processes that runs one round.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParticipantSet {
    members: Vec<ProcessId>,
    index: SetIndex,
}

impl ParticipantSet {
    /// Builds a set from strictly increasing members drawn from `0..n`.
    pub fn new(members: Vec<ProcessId>, n: u32) -> Result<Self, CoreError> {
        let index = rank_participant_set(&members, n, members.len() as u32)?;
        Ok(ParticipantSet { members, index })
    }

    /// Sorts and deduplicates `ids` first.
    pub fn from_ids(ids: &[u32], n: u32) -> Result<Self, CoreError> {
        let sorted: BTreeSet<u32> = ids.iter().copied().collect();
        if sorted.len() != ids.len() {
            return Err(CoreError::InvalidParticipantSet(format!(
                "duplicate member in {ids:?}"
            )));
        }
        Self::new(sorted.into_iter().map(ProcessId).collect(), n)
    }

    pub fn members(&self) -> &[ProcessId] {
        &self.members
    }

    pub fn index(&self) -> SetIndex {
        self.index
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: ProcessId) -> bool {
        self.members.binary_search(&p).is_ok()
    }

    /// 1-based evaluation point of `p` for secret sharing.
    pub fn position(&self, p: ProcessId) -> Option<u32> {
        self.members.binary_search(&p).ok().map(|i| i as u32 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub protocol: ProtocolSpec,
    pub participants: ParticipantSet,
}

impl Configuration {
    pub fn new(protocol: ProtocolSpec, participants: ParticipantSet) -> Self {
        Configuration {
            protocol,
            participants,
        }
    }

    pub fn contains(&self, p: ProcessId) -> bool {
        self.participants.contains(p)
    }

    /// Leader for `round`, honoring a pinned position when the protocol
    /// block carries one.
    pub fn leader(&self, round: Round) -> ProcessId {
        match self.protocol.pinned_leader() {
            Some(pos) => {
                let m = self.participants.members();
                m[pos as usize % m.len()]
            }
            None => leader_of(self, round),
        }
    }
}

/// `members[round mod p_f]`.
pub fn leader_of(config: &Configuration, round: Round) -> ProcessId {
    let m = config.participants.members();
    m[(round.0 % m.len() as u64) as usize]
}

/// The finite, ordered set of configurations rounds can move between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigSpace {
    n: u32,
    p_f: u32,
    configs: Vec<Configuration>,
    bits: u32,
}

impl ConfigSpace {
    pub fn new(n: u32, configs: Vec<Configuration>) -> Result<Self, CoreError> {
        let first = configs
            .first()
            .ok_or_else(|| CoreError::InvalidConfigSpace("no configurations".into()))?;
        let p_f = first.participants.len() as u32;
        let mut seen = BTreeSet::new();
        for c in &configs {
            if c.participants.len() as u32 != p_f {
                return Err(CoreError::InvalidConfigSpace(format!(
                    "mixed participant set sizes {} and {p_f}",
                    c.participants.len()
                )));
            }
            if c.participants.members().iter().any(|p| p.0 >= n) {
                return Err(CoreError::InvalidConfigSpace(format!(
                    "member outside universe of {n}"
                )));
            }
            if !seen.insert(c) {
                return Err(CoreError::InvalidConfigSpace(
                    "duplicate configuration".into(),
                ));
            }
        }
        if configs.len() > u32::MAX as usize {
            return Err(CoreError::InvalidConfigSpace(
                "too many configurations".into(),
            ));
        }
        let bits = ceil_log2(configs.len() as u64);
        Ok(ConfigSpace {
            n,
            p_f,
            configs,
            bits,
        })
    }

    /// One configuration per `p_f`-subset of the universe, in rank order.
    pub fn every_set(n: u32, p_f: u32, protocol: ProtocolSpec) -> Result<Self, CoreError> {
        let total = checked_binomial(n, p_f)?;
        let configs = (0..total)
            .map(|i| {
                let members = unrank_participant_set(SetIndex(i), n, p_f)?;
                Ok(Configuration::new(
                    protocol.clone(),
                    ParticipantSet::new(members, n)?,
                ))
            })
            .collect::<Result<Vec<_>, CoreError>>()?;
        ConfigSpace::new(n, configs)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p_f(&self) -> u32 {
        self.p_f
    }

    /// Bit width `ceil(log2 |C|)`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn get(&self, id: ConfigId) -> &Configuration {
        &self.configs[id.0 as usize]
    }

    pub fn try_get(&self, id: ConfigId) -> Option<&Configuration> {
        self.configs.get(id.0 as usize)
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn ids(&self) -> impl Iterator<Item = ConfigId> {
        (0..self.configs.len() as u32).map(ConfigId)
    }

    pub fn id_of(&self, config: &Configuration) -> Option<ConfigId> {
        self.configs
            .iter()
            .position(|c| c == config)
            .map(|i| ConfigId(i as u32))
    }

    /// Distinct participant sets referenced by the space, by index.
    pub fn participant_sets(&self) -> Vec<&ParticipantSet> {
        let mut out: Vec<&ParticipantSet> = Vec::new();
        for c in &self.configs {
            if !out.iter().any(|s| s.index() == c.participants.index()) {
                out.push(&c.participants);
            }
        }
        out.sort_by_key(|s| s.index());
        out
    }
}

fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Source of fresh `width`-bit draws for rejection sampling.
pub trait BitSource {
    fn next_bits(&mut self, width: u32) -> Option<u64>;
}

impl<F: FnMut(u32) -> Option<u64>> BitSource for F {
    fn next_bits(&mut self, width: u32) -> Option<u64> {
        self(width)
    }
}

/// Retry bound for rejection sampling.
pub const MAX_INDEX_RETRIES: u32 = 64;

/// Result of mapping a bit string onto the configuration space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexDraw {
    pub id: ConfigId,
    /// False when retries ran out and the modulo fallback was used.
    pub uniform: bool,
}

/// Maps `bits` (`< 2^b`) onto `0..|C|` by rejection sampling, drawing
/// replacements from `retry`.
pub fn config_index_from_bits(
    bits: u64,
    space: &ConfigSpace,
    retry: &mut dyn BitSource,
) -> Result<IndexDraw, CoreError> {
    index_from_bits(bits, space.len() as u64, space.bits(), retry)
}

pub(crate) fn index_from_bits(
    bits: u64,
    len: u64,
    width: u32,
    retry: &mut dyn BitSource,
) -> Result<IndexDraw, CoreError> {
    if width < 64 && bits >> width != 0 {
        return Err(CoreError::BitsOutOfRange { bits, width });
    }
    let mut current = bits;
    for _ in 0..MAX_INDEX_RETRIES {
        if current < len {
            return Ok(IndexDraw {
                id: ConfigId(current as u32),
                uniform: true,
            });
        }
        match retry.next_bits(width) {
            Some(next) => current = mask(next, width),
            None => break,
        }
    }
    if current < len {
        return Ok(IndexDraw {
            id: ConfigId(current as u32),
            uniform: true,
        });
    }
    Ok(IndexDraw {
        id: ConfigId((current % len) as u32),
        uniform: false,
    })
}

fn mask(x: u64, width: u32) -> u64 {
    if width >= 64 {
        x
    } else {
        x & ((1u64 << width) - 1)
    }
}
