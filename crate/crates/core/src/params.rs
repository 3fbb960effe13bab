use crate::error::CoreError;
use serde::{Deserialize, Serialize};

/// Failure model the protocol is configured for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaultMode {
    Crash,
    Byzantine,
}

/// Sizing of the process universe and the fault budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: u32,
    pub f_c: u32,
    pub f_a: u32,
    pub p_f: u32,
    pub mode: FaultMode,
}

impl SystemParams {
    pub fn new(n: u32, f_c: u32, f_a: u32, p_f: u32, mode: FaultMode) -> Result<Self, CoreError> {
        let params = SystemParams {
            n,
            f_c,
            f_a,
            p_f,
            mode,
        };
        params.validate()?;
        Ok(params)
    }

    /// Total fault budget: crashed plus saturated processes.
    pub fn f(&self) -> u32 {
        self.f_c + self.f_a
    }

    /// Smallest participant set the failure model admits.
    pub fn min_set_size(&self) -> u32 {
        match self.mode {
            FaultMode::Crash => 2 * self.f() + 1,
            FaultMode::Byzantine => 3 * self.f() + 1,
        }
    }

    /// Messages a process waits for in the outcome-exchange and handoff steps.
    pub fn quorum(&self) -> usize {
        (self.p_f - self.f()) as usize
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        let f = self.f();
        if f >= self.n {
            return Err(CoreError::InvalidParams(format!(
                "f = f_c + f_a = {f} must be below n = {}",
                self.n
            )));
        }
        if self.p_f < self.min_set_size() {
            return Err(CoreError::InvalidParams(format!(
                "p_f = {} below {} required in {:?} mode for f = {f}",
                self.p_f,
                self.min_set_size(),
                self.mode
            )));
        }
        if self.p_f > self.n {
            return Err(CoreError::InvalidParams(format!(
                "p_f = {} exceeds n = {}",
                self.p_f, self.n
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crash_mode_needs_two_f_plus_one() {
        assert!(SystemParams::new(6, 0, 1, 3, FaultMode::Crash).is_ok());
        assert!(SystemParams::new(6, 1, 1, 4, FaultMode::Crash).is_err());
    }

    #[test]
    fn byzantine_mode_needs_three_f_plus_one() {
        assert!(SystemParams::new(9, 1, 0, 4, FaultMode::Byzantine).is_ok());
        assert!(SystemParams::new(9, 1, 0, 3, FaultMode::Byzantine).is_err());
    }

    #[test]
    fn f_must_stay_below_n() {
        assert!(SystemParams::new(2, 1, 1, 2, FaultMode::Crash).is_err());
    }

    #[test]
    fn quorum_is_set_size_minus_f() {
        let p = SystemParams::new(9, 1, 0, 4, FaultMode::Byzantine).unwrap();
        assert_eq!(p.quorum(), 3);
        let p = SystemParams::new(6, 0, 1, 3, FaultMode::Crash).unwrap();
        assert_eq!(p.quorum(), 2);
    }
}
