use mptc_core::{InstanceId, Value};
use mptc_smr::RequestKey;
use std::collections::{HashMap, HashSet};

/// Safety checks fed from every event of a run.
#[derive(Debug, Default)]
pub struct Monitors {
    decided: HashMap<InstanceId, Value>,
    /// slot -> executed request (None for a skipped slot).
    executed: Vec<Option<RequestKey>>,
    executed_keys: HashSet<RequestKey>,
}

impl Monitors {
    pub fn new() -> Self {
        Self::default()
    }

    /// Agreement per instance and validity of the decided value. `issued`
    /// says whether a request was ever sent by a client.
    pub fn on_decided(
        &mut self,
        instance: InstanceId,
        value: &Value,
        issued: impl Fn(RequestKey) -> bool,
        is_noop: bool,
    ) -> Result<bool, String> {
        if !is_noop {
            match RequestKey::from_value(value) {
                Some(k) if issued(k) => {}
                _ => {
                    return Err(format!(
                        "validity: instance {} decided {value:?}, which no client proposed",
                        instance.0
                    ))
                }
            }
        }
        match self.decided.get(&instance) {
            Some(v) if v != value => Err(format!(
                "agreement: instance {} decided {v:?} and {value:?}",
                instance.0
            )),
            Some(_) => Ok(false),
            None => {
                self.decided.insert(instance, value.clone());
                Ok(true)
            }
        }
    }

    /// Replica convergence and exactly-once execution.
    pub fn on_executed(
        &mut self,
        replica: u32,
        slot: u64,
        key: Option<RequestKey>,
    ) -> Result<(), String> {
        let s = slot as usize;
        if s < self.executed.len() {
            if self.executed[s] != key {
                return Err(format!(
                    "divergence: replica {replica} executed {key:?} at slot {slot}, another executed {:?}",
                    self.executed[s]
                ));
            }
            return Ok(());
        }
        if s != self.executed.len() {
            return Err(format!(
                "divergence: replica {replica} executed slot {slot} before slot {}",
                self.executed.len()
            ));
        }
        if let Some(k) = key {
            if !self.executed_keys.insert(k) {
                return Err(format!("exactly-once: request {k:?} executed twice"));
            }
        }
        self.executed.push(key);
        Ok(())
    }

    pub fn executed_slots(&self) -> u64 {
        self.executed.len() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mptc_smr::Request;

    #[test]
    fn conflicting_decisions_trip() {
        let mut m = Monitors::new();
        let a = Request {
            key: RequestKey::new(0, 0),
            cmd: vec![],
        }
        .to_value();
        let b = Request {
            key: RequestKey::new(1, 0),
            cmd: vec![],
        }
        .to_value();
        assert_eq!(m.on_decided(InstanceId(0), &a, |_| true, false), Ok(true));
        assert_eq!(m.on_decided(InstanceId(0), &a, |_| true, false), Ok(false));
        assert!(m
            .on_decided(InstanceId(0), &b, |_| true, false)
            .unwrap_err()
            .starts_with("agreement"));
    }

    #[test]
    fn unproposed_value_trips() {
        let mut m = Monitors::new();
        let v = Request {
            key: RequestKey::new(9, 9),
            cmd: vec![],
        }
        .to_value();
        assert!(m.on_decided(InstanceId(0), &v, |_| false, false).is_err());
        assert!(m
            .on_decided(InstanceId(1), &Value(vec![0]), |_| false, true)
            .is_ok());
    }

    #[test]
    fn replica_divergence_trips() {
        let mut m = Monitors::new();
        let k = RequestKey::new(0, 0);
        m.on_executed(0, 0, Some(k)).unwrap();
        m.on_executed(1, 0, Some(k)).unwrap();
        assert!(m.on_executed(1, 1, None).is_ok());
        assert!(m.on_executed(0, 1, Some(RequestKey::new(2, 0))).is_err());
        assert!(m.on_executed(0, 2, Some(k)).is_err());
    }
}
