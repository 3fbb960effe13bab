use crate::msg::{NodeId, Request, RequestKey, SmrAction, SmrEvent, SmrMsg};
use mptc_core::{ConfigId, ConfigSpace, InstanceId, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone)]
struct Pending {
    value: Value,
    config: ConfigId,
}

/// Executes decided commands one slot at a time. The service is a no-op;
/// its state is a hash chain over the executed log.
#[derive(Debug, Clone)]
pub struct Replica {
    rid: u32,
    space: Arc<ConfigSpace>,
    execution_slot: u64,
    decisions: BTreeMap<u64, Pending>,
    /// Largest executed rsn per client.
    completed: BTreeMap<u64, u64>,
    app_state: [u8; 32],
    executed: u64,
    skipped: u64,
}

impl Replica {
    pub fn new(rid: u32, space: Arc<ConfigSpace>) -> Self {
        Replica {
            rid,
            space,
            execution_slot: 0,
            decisions: BTreeMap::new(),
            completed: BTreeMap::new(),
            app_state: [0; 32],
            executed: 0,
            skipped: 0,
        }
    }

    pub fn rid(&self) -> u32 {
        self.rid
    }
    pub fn execution_slot(&self) -> u64 {
        self.execution_slot
    }
    pub fn app_state(&self) -> [u8; 32] {
        self.app_state
    }
    pub fn executed(&self) -> u64 {
        self.executed
    }
    pub fn skipped(&self) -> u64 {
        self.skipped
    }
    pub fn held(&self) -> usize {
        self.decisions.len()
    }

    fn is_completed(&self, key: RequestKey) -> bool {
        self.completed.get(&key.cid).is_some_and(|&m| key.rsn <= m)
    }

    pub fn on_decision(
        &mut self,
        instance: InstanceId,
        value: Value,
        config: ConfigId,
    ) -> Vec<SmrAction> {
        let mut out = Vec::new();
        if instance.0 < self.execution_slot || self.decisions.contains_key(&instance.0) {
            return out;
        }
        self.decisions.insert(instance.0, Pending { value, config });
        while let Some(d) = self.decisions.remove(&self.execution_slot) {
            let slot = self.execution_slot;
            self.execution_slot += 1;
            let req = Request::from_value(&d.value);
            let key = req.as_ref().map(|r| r.key);
            match req {
                Some(Request { key: k, cmd }) if !self.is_completed(k) => {
                    self.apply(slot, k, &cmd);
                    for &p in self.space.get(d.config).participants.members() {
                        out.push(SmrAction::Send {
                            to: NodeId::Participant(p),
                            msg: SmrMsg::Response {
                                key: k,
                                result: Vec::new(),
                            },
                        });
                    }
                    out.push(SmrAction::Event(SmrEvent::Executed { slot, key }));
                }
                _ => {
                    // No-op filler or a request already executed elsewhere.
                    self.skipped += 1;
                    out.push(SmrAction::Event(SmrEvent::Executed { slot, key: None }));
                }
            }
        }
        out
    }

    fn apply(&mut self, slot: u64, key: RequestKey, cmd: &[u8]) {
        let mut h = Sha256::new();
        h.update(self.app_state);
        h.update(slot.to_le_bytes());
        h.update(key.cid.to_le_bytes());
        h.update(key.rsn.to_le_bytes());
        h.update(cmd);
        self.app_state = h.finalize().into();
        self.completed.insert(key.cid, key.rsn);
        self.executed += 1;
    }
}
