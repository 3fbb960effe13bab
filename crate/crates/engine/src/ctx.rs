use crate::error::EngineError;
use crate::msg::ShareToken;
use mptc_coin::{
    combine, emu_next_config, gfs, verify, DealerOutput, EmuCoin, FunctionShare, GroupParams,
    SecretShare, VerificationKeys,
};
use mptc_core::{
    ConfigId, ConfigSpace, FaultMode, KeyRing, ProcessId, Round, SetIndex, Signer, SystemParams,
};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// How a finished round is handed to the next participant set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handoff {
    /// Phase 3 messages per instance.
    Phase3,
    /// The host batches handoff across instances (replication layer).
    External,
}

#[derive(Clone)]
pub struct Auth {
    pub signer: Signer,
    pub keys: Arc<KeyRing>,
}

/// One process's view of the threshold coin, with per-round caches shared by
/// all of its instances.
#[derive(Debug, Clone)]
pub struct ThresholdCoin {
    group: Arc<GroupParams>,
    shares: BTreeMap<SetIndex, SecretShare>,
    keys: Arc<BTreeMap<SetIndex, VerificationKeys>>,
    own: HashMap<(SetIndex, Round), FunctionShare>,
    verified: HashMap<FunctionShare, bool>,
    next: HashMap<(SetIndex, Round), ConfigId>,
}

impl ThresholdCoin {
    pub fn from_dealer(me: ProcessId, dealt: &DealerOutput, group: Arc<GroupParams>) -> Self {
        let shares = dealt
            .per_process
            .get(&me)
            .map(|v| v.iter().map(|s| (s.set_index, s.clone())).collect())
            .unwrap_or_default();
        ThresholdCoin {
            group,
            shares,
            keys: Arc::new(dealt.per_set_keys.clone()),
            own: HashMap::new(),
            verified: HashMap::new(),
            next: HashMap::new(),
        }
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }
}

#[derive(Debug, Clone)]
pub enum CoinBackend {
    Threshold(Box<ThresholdCoin>),
    Emulated(EmuCoin),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub shares_accepted: u64,
    pub shares_rejected: u64,
    pub certs_rejected: u64,
    pub notes_rejected: u64,
    pub stale_dropped: u64,
    pub buffered: u64,
}

/// Everything an instance needs from its hosting process.
#[derive(Clone)]
pub struct ProcessCtx {
    pub me: ProcessId,
    pub params: SystemParams,
    pub space: Arc<ConfigSpace>,
    pub coin: CoinBackend,
    pub auth: Option<Auth>,
    pub timeout_base_us: u64,
    pub handoff: Handoff,
    pub round_budget: u64,
    pub stats: EngineStats,
}

impl ProcessCtx {
    pub fn new(
        me: ProcessId,
        params: SystemParams,
        space: Arc<ConfigSpace>,
        coin: CoinBackend,
        auth: Option<Auth>,
    ) -> Self {
        ProcessCtx {
            me,
            params,
            space,
            coin,
            auth,
            timeout_base_us: crate::DEFAULT_TIMEOUT_BASE_US,
            handoff: Handoff::Phase3,
            round_budget: crate::DEFAULT_ROUND_BUDGET,
            stats: EngineStats::default(),
        }
    }

    pub fn mode(&self) -> FaultMode {
        self.params.mode
    }

    pub fn f(&self) -> u32 {
        self.params.f()
    }

    pub fn quorum(&self) -> usize {
        self.params.quorum()
    }

    pub(crate) fn auth(&self) -> Result<&Auth, EngineError> {
        self.auth.as_ref().ok_or(EngineError::MissingAuth(self.me))
    }

    pub fn share_token(&mut self, set: SetIndex, round: Round) -> Result<ShareToken, EngineError> {
        let mode = self.params.mode;
        match &mut self.coin {
            CoinBackend::Emulated(_) => Ok(ShareToken::Emulated),
            CoinBackend::Threshold(tc) => {
                if let Some(s) = tc.own.get(&(set, round)) {
                    return Ok(ShareToken::Threshold(s.clone()));
                }
                let share = tc
                    .shares
                    .get(&set)
                    .ok_or(EngineError::ConfigShareMissing(self.me, set))?;
                let fs = gfs(share, round, &tc.group, mode);
                tc.own.insert((set, round), fs.clone());
                Ok(ShareToken::Threshold(fs))
            }
        }
    }

    /// Checks a received share for `(set, round)`. Crash mode accepts any
    /// well-formed share.
    pub fn check_share(&mut self, set: SetIndex, round: Round, token: &ShareToken) -> bool {
        let mode = self.params.mode;
        let ok = match (&mut self.coin, token) {
            (CoinBackend::Emulated(_), ShareToken::Emulated) => true,
            (CoinBackend::Threshold(tc), ShareToken::Threshold(fs)) => {
                if fs.set_index != set || fs.round != round {
                    false
                } else if let Some(&v) = tc.verified.get(fs) {
                    v
                } else {
                    let v = match tc.keys.get(&set) {
                        Some(keys) => verify(round, fs, keys, &tc.group, mode).unwrap_or(false),
                        None => false,
                    };
                    if mode == FaultMode::Byzantine {
                        tc.verified.insert(fs.clone(), v);
                    }
                    v
                }
            }
            _ => false,
        };
        if ok {
            self.stats.shares_accepted += 1;
        } else {
            self.stats.shares_rejected += 1;
        }
        ok
    }

    /// `C_{r+1}` from the round-`r` shares of `set`; `tokens` must already
    /// have passed [`ProcessCtx::check_share`].
    pub fn next_config(
        &mut self,
        set: SetIndex,
        round: Round,
        tokens: &[&ShareToken],
    ) -> Result<ConfigId, EngineError> {
        let f = self.params.f();
        match &mut self.coin {
            CoinBackend::Emulated(coin) => Ok(emu_next_config(coin, round.next(), &self.space)),
            CoinBackend::Threshold(tc) => {
                if let Some(&c) = tc.next.get(&(set, round)) {
                    return Ok(c);
                }
                let picked: Vec<FunctionShare> = tokens
                    .iter()
                    .filter_map(|t| match t {
                        ShareToken::Threshold(fs) => Some(fs.clone()),
                        ShareToken::Emulated => None,
                    })
                    .take(f as usize + 1)
                    .collect();
                let c = combine(&picked, round, f, &self.space, &tc.group)?;
                tc.next.insert((set, round), c);
                Ok(c)
            }
        }
    }
}
