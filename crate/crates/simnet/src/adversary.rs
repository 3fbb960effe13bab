use crate::error::SimError;
use mptc_core::{ProcessId, SystemParams};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrashAt {
    pub at_us: u64,
    pub pid: u32,
}

/// Targets whose links are saturated during `[from_us, to_us)`; an open end
/// lasts for the whole run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DosWindow {
    pub from_us: u64,
    #[serde(default)]
    pub to_us: Option<u64>,
    pub targets: Vec<u32>,
}

impl DosWindow {
    fn covers(&self, t: u64) -> bool {
        t >= self.from_us && self.to_us.is_none_or(|e| t < e)
    }
}

/// How a saturated link treats legitimate traffic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DosModel {
    /// Nothing gets through until the window closes.
    #[default]
    Defer,
    /// Each message to or from a target waits for `link_us` of link time
    /// behind earlier ones.
    Throttle { link_us: u64 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarySpec {
    #[serde(default)]
    pub crashes: Vec<CrashAt>,
    #[serde(default)]
    pub dos: Vec<DosWindow>,
    #[serde(default)]
    pub dos_model: DosModel,
    /// Processes whose secret state the adversary reads; fixed for the run.
    #[serde(default)]
    pub compromised: Vec<u32>,
}

impl AdversarySpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn validate(&self, params: &SystemParams) -> Result<(), SimError> {
        let n = params.n;
        let check = |p: u32| {
            if p >= n {
                Err(SimError::Adversary(format!(
                    "process {p} does not exist (n = {n})"
                )))
            } else {
                Ok(())
            }
        };
        let crashed: BTreeSet<u32> = self.crashes.iter().map(|c| c.pid).collect();
        for &p in &crashed {
            check(p)?;
        }
        if crashed.len() as u32 > params.f_c {
            return Err(SimError::Adversary(format!(
                "{} crashed processes exceed f_c = {}",
                crashed.len(),
                params.f_c
            )));
        }
        for w in &self.dos {
            for &p in &w.targets {
                check(p)?;
            }
            if w.to_us.is_some_and(|e| e <= w.from_us) {
                return Err(SimError::Adversary(format!(
                    "empty DoS window starting at {}us",
                    w.from_us
                )));
            }
        }
        // The active target set only changes at window starts.
        for w in &self.dos {
            let active = self.targets_at(w.from_us);
            if active.len() as u32 > params.f_a {
                return Err(SimError::Adversary(format!(
                    "{} simultaneous DoS targets at {}us exceed f_a = {}",
                    active.len(),
                    w.from_us,
                    params.f_a
                )));
            }
        }
        let compromised: BTreeSet<u32> = self.compromised.iter().copied().collect();
        for &p in &compromised {
            check(p)?;
        }
        if compromised.len() as u32 > params.f() {
            return Err(SimError::Adversary(format!(
                "{} compromised processes exceed f = {}",
                compromised.len(),
                params.f()
            )));
        }
        Ok(())
    }

    pub fn targets_at(&self, t: u64) -> BTreeSet<ProcessId> {
        self.dos
            .iter()
            .filter(|w| w.covers(t))
            .flat_map(|w| w.targets.iter().map(|&p| ProcessId(p)))
            .collect()
    }

    pub fn is_target(&self, p: ProcessId, t: u64) -> bool {
        self.dos
            .iter()
            .any(|w| w.covers(t) && w.targets.contains(&p.0))
    }

    /// First instant at or after `t` when none of `who` is targeted, or
    /// `None` if some attack on them never ends.
    pub fn clear_after(&self, who: &[ProcessId], t: u64) -> Option<u64> {
        let mut at = t;
        loop {
            let mut end = None;
            for w in &self.dos {
                if w.covers(at) && who.iter().any(|p| w.targets.contains(&p.0)) {
                    let e = w.to_us?;
                    end = Some(end.map_or(e, |x: u64| x.max(e)));
                }
            }
            match end {
                None => return Some(at),
                Some(e) => at = e,
            }
        }
    }

    pub fn attacks_end(&self) -> Option<u64> {
        let dos = self
            .dos
            .iter()
            .map(|w| w.to_us)
            .try_fold(0u64, |m, e| e.map(|e| m.max(e)))?;
        Some(dos)
    }
}
