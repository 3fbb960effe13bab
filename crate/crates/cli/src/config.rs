//! Scenario files.
//!
//! A scenario is a JSON object; see `scenarios/*.json` for complete
//! examples. Optional fields fall back to the values used by the builtin
//! scenarios.

use crate::error::CliError;
use mptc_coin::{EmuCoin, GroupParams, Schedule};
use mptc_core::{
    ConfigSpace, Configuration, FaultMode, ParticipantSet, ProtocolSpec, SystemParams,
};
use mptc_simnet::{AdversarySpec, CoinSetup, LatencyModel, SmrScenario};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const MAX_CLIENTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: FaultMode,
    pub n: u32,
    pub f_c: u32,
    pub f_a: u32,
    pub p_f: u32,
    pub coin: CoinConfig,
    pub config_space: Vec<ConfigEntry>,
    #[serde(default = "default_clients")]
    pub clients: Vec<usize>,
    #[serde(default = "default_request_size")]
    pub request_size: usize,
    pub duration_s: f64,
    /// Time after `duration_s` for outstanding requests to complete.
    #[serde(default = "default_drain")]
    pub drain_s: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_replicas")]
    pub replicas: u32,
    #[serde(default = "default_timeout")]
    pub timeout_base_us: u64,
    #[serde(default = "default_budget")]
    pub round_budget: u64,
    #[serde(default)]
    pub latency: LatencyModel,
    /// Per-message handling time at participants and replicas.
    #[serde(default = "default_service")]
    pub service_us: u64,
    #[serde(default)]
    pub adversary: AdversarySpec,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoinConfig {
    Emulated {
        seed: u64,
        schedule: Schedule,
    },
    Threshold {
        /// Decimal strings; the built-in 256-bit group when absent.
        #[serde(default)]
        group: Option<GroupConfig>,
        dealer_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub p: String,
    pub q: String,
    pub g: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolChoice {
    Paxos,
    /// Paxos whose leader stays at this member position in every round.
    PaxosPinned(u32),
    QuorumCert,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEntry {
    pub protocol: ProtocolChoice,
    pub members: Vec<u32>,
}

fn default_clients() -> Vec<usize> {
    (0..7).map(|k| 1 << k).collect()
}
fn default_request_size() -> usize {
    mptc_smr::DEFAULT_REQUEST_SIZE
}
fn default_drain() -> f64 {
    5.0
}
fn default_window() -> usize {
    mptc_smr::DEFAULT_WINDOW
}
fn default_replicas() -> u32 {
    2
}
fn default_timeout() -> u64 {
    mptc_engine::DEFAULT_TIMEOUT_BASE_US
}
fn default_budget() -> u64 {
    mptc_engine::DEFAULT_ROUND_BUDGET
}
fn default_service() -> u64 {
    20
}

fn seconds_to_us(s: f64, what: &str) -> Result<u64, CliError> {
    if !s.is_finite() || !(0.0..=1e6).contains(&s) {
        return Err(CliError::Config(format!(
            "{what} must be between 0 and 1e6 seconds"
        )));
    }
    Ok((s * 1e6).round() as u64)
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<SystemParams, CliError> {
        SystemParams::new(self.n, self.f_c, self.f_a, self.p_f, self.mode)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn space(&self) -> Result<ConfigSpace, CliError> {
        let configs = self
            .config_space
            .iter()
            .map(|e| {
                let protocol = match e.protocol {
                    ProtocolChoice::Paxos => ProtocolSpec::paxos(),
                    ProtocolChoice::PaxosPinned(pos) => ProtocolSpec::paxos_pinned(pos),
                    ProtocolChoice::QuorumCert => ProtocolSpec::quorum_cert(),
                };
                let set = ParticipantSet::from_ids(&e.members, self.n)
                    .map_err(|err| CliError::Config(err.to_string()))?;
                Ok(Configuration::new(protocol, set))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        ConfigSpace::new(self.n, configs).map_err(|e| CliError::Config(e.to_string()))
    }

    fn coin_setup(&self) -> Result<CoinSetup, CliError> {
        Ok(match &self.coin {
            CoinConfig::Emulated { seed, schedule } => {
                CoinSetup::Emulated(EmuCoin::new(*seed, *schedule))
            }
            CoinConfig::Threshold { group, dealer_seed } => {
                let group = match group {
                    None => GroupParams::default_256(),
                    Some(g) => {
                        let num = |s: &str, what: &str| {
                            s.parse::<BigUint>().map_err(|_| {
                                CliError::Config(format!("group {what} is not a decimal integer"))
                            })
                        };
                        GroupParams::new(num(&g.p, "p")?, num(&g.q, "q")?, num(&g.g, "g")?)
                            .map_err(|e| CliError::Config(e.to_string()))?
                    }
                };
                CoinSetup::Threshold {
                    group: Arc::new(group),
                    dealer_seed: *dealer_seed,
                }
            }
        })
    }

    /// Checks everything a run needs, naming the first violated rule.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.mode != FaultMode::Crash {
            return Err(CliError::Config(
                "replicated runs support mode \"crash\" only".into(),
            ));
        }
        let params = self.params()?;
        let space = self.space()?;
        if space.p_f() != self.p_f {
            return Err(CliError::Config(format!(
                "participant sets have {} members but p_f = {}",
                space.p_f(),
                self.p_f
            )));
        }
        if self.clients.is_empty() || self.clients.iter().any(|&c| c == 0 || c > MAX_CLIENTS) {
            return Err(CliError::Config(format!(
                "client counts must be in 1..={MAX_CLIENTS}"
            )));
        }
        if seconds_to_us(self.duration_s, "duration_s")? == 0 {
            return Err(CliError::Config("duration_s must be positive".into()));
        }
        seconds_to_us(self.drain_s, "drain_s")?;
        if self.window == 0 || self.replicas == 0 || self.timeout_base_us == 0 {
            return Err(CliError::Config(
                "window, replicas and timeout_base_us must be positive".into(),
            ));
        }
        if let CoinConfig::Threshold { group: Some(_), .. } = &self.coin {
            self.coin_setup()?;
        }
        self.adversary
            .validate(&params)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// The simulator input for one client count and seed.
    pub fn to_smr(&self, clients: usize, seed: u64) -> Result<SmrScenario, CliError> {
        Ok(SmrScenario {
            params: self.params()?,
            space: Arc::new(self.space()?),
            coin: self.coin_setup()?,
            clients,
            request_size: self.request_size,
            duration_us: seconds_to_us(self.duration_s, "duration_s")?,
            drain_us: seconds_to_us(self.drain_s, "drain_s")?,
            window: self.window,
            replicas: self.replicas,
            timeout_base_us: self.timeout_base_us,
            round_budget: self.round_budget,
            latency: self.latency,
            service_us: self.service_us,
            adversary: self.adversary.clone(),
            seed,
            trace_ring: 512,
            full_trace: false,
        })
    }
}

pub const BUILTINS: [&str; 3] = [
    "no-attack",
    "attack-leader-reconfig",
    "attack-leader-static",
];

pub fn builtin(name: &str) -> Result<ScenarioConfig, CliError> {
    let text = match name {
        "no-attack" => include_str!("../scenarios/no-attack.json"),
        "attack-leader-reconfig" => include_str!("../scenarios/attack-leader-reconfig.json"),
        "attack-leader-static" => include_str!("../scenarios/attack-leader-static.json"),
        other => return Err(CliError::UnknownBuiltin(other.to_string())),
    };
    ScenarioConfig::from_json(text)
}
