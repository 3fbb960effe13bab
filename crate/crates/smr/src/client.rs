use crate::error::SmrError;
use crate::msg::{NodeId, Request, RequestKey, SmrMsg};
use mptc_core::ProcessId;
use std::collections::BTreeMap;

/// Closed-loop client: at most one request outstanding.
#[derive(Debug, Clone)]
pub struct Client {
    cid: u64,
    rsn: u64,
    attached: Vec<ProcessId>,
    /// rsn -> issue time (µs).
    pending: BTreeMap<u64, u64>,
    cmd_size: usize,
}

impl Client {
    pub fn new(cid: u64, attached: Vec<ProcessId>, cmd_size: usize) -> Self {
        Client {
            cid,
            rsn: 0,
            attached,
            pending: BTreeMap::new(),
            cmd_size,
        }
    }

    pub fn cid(&self) -> u64 {
        self.cid
    }

    pub fn attached(&self) -> &[ProcessId] {
        &self.attached
    }

    pub fn next_rsn(&self) -> u64 {
        self.rsn
    }

    pub fn is_idle(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn pending(&self) -> impl Iterator<Item = u64> + '_ {
        self.pending.keys().copied()
    }

    /// One REQUEST per attached participant.
    pub fn issue(&mut self, now_us: u64) -> Result<Vec<(NodeId, SmrMsg)>, SmrError> {
        if let Some(&rsn) = self.pending.keys().next() {
            return Err(SmrError::RequestOutstanding { cid: self.cid, rsn });
        }
        let key = RequestKey::new(self.cid, self.rsn);
        self.pending.insert(self.rsn, now_us);
        self.rsn += 1;
        // Payload content is irrelevant to the no-op service; only size counts.
        let req = Request {
            key,
            cmd: vec![0xab; self.cmd_size],
        };
        Ok(self
            .attached
            .iter()
            .map(|&p| (NodeId::Participant(p), SmrMsg::Request(req.clone())))
            .collect())
    }

    /// Latency in µs for the first matching response; `None` for duplicates
    /// and unknown request numbers.
    pub fn on_response(&mut self, key: RequestKey, now_us: u64) -> Option<u64> {
        if key.cid != self.cid {
            return None;
        }
        self.pending
            .remove(&key.rsn)
            .map(|sent| now_us.saturating_sub(sent))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn issues_to_every_attached_participant() {
        let mut c = Client::new(1, vec![ProcessId(0), ProcessId(4)], 100);
        let out = c.issue(0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(c.next_rsn(), 1);
    }

    #[test]
    fn closed_loop_rejects_second_issue() {
        let mut c = Client::new(1, vec![ProcessId(0)], 8);
        c.issue(0).unwrap();
        assert!(matches!(
            c.issue(1),
            Err(SmrError::RequestOutstanding { .. })
        ));
    }

    #[test]
    fn duplicate_and_unknown_responses_ignored() {
        let mut c = Client::new(3, vec![ProcessId(0)], 8);
        for _ in 0..3 {
            c.issue(0).unwrap();
            let rsn = c.next_rsn() - 1;
            c.on_response(RequestKey::new(3, rsn), 5);
        }
        c.issue(100).unwrap();
        assert_eq!(c.on_response(RequestKey::new(3, 9), 120), None);
        assert_eq!(c.on_response(RequestKey::new(3, 3), 150), Some(50));
        assert_eq!(c.on_response(RequestKey::new(3, 3), 160), None);
        assert!(c.is_idle());
    }
}
