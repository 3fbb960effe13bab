//! Envelope wire format and delivery traces.
//!
//! Envelope: u8 type tag, u32 src, u32 dst, u32 payload length, payload,
//! all little-endian. The payload is the bincode encoding of the message.
//! A trace file is a sequence of envelopes, each prefixed by its u64
//! delivery time in microseconds.

use mptc_smr::{NodeId, SmrMsg};

const REPLICA_BASE: u32 = 0x4000_0000;
const CLIENT_BASE: u32 = 0x8000_0000;

/// Node address on the wire: participants as their id, replicas and
/// clients in tagged ranges.
pub fn node_code(n: NodeId) -> u32 {
    match n {
        NodeId::Participant(p) => p.0,
        NodeId::Replica(r) => REPLICA_BASE | r,
        NodeId::Client(c) => CLIENT_BASE | (c as u32 & 0x3fff_ffff),
    }
}

pub fn encode_envelope(from: NodeId, to: NodeId, msg: &SmrMsg) -> Vec<u8> {
    let payload = bincode::serialize(msg).expect("messages are plain data");
    let mut out = Vec::with_capacity(13 + payload.len());
    out.push(msg.tag());
    out.extend_from_slice(&node_code(from).to_le_bytes());
    out.extend_from_slice(&node_code(to).to_le_bytes());
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope<'a> {
    pub tag: u8,
    pub src: u32,
    pub dst: u32,
    pub payload: &'a [u8],
}

/// Splits one envelope off the front of `bytes`.
pub fn decode_envelope(bytes: &[u8]) -> Option<(Envelope<'_>, &[u8])> {
    if bytes.len() < 13 {
        return None;
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let len = word(9) as usize;
    let rest = bytes.get(13..)?;
    if rest.len() < len {
        return None;
    }
    Some((
        Envelope {
            tag: bytes[0],
            src: word(1),
            dst: word(5),
            payload: &rest[..len],
        },
        &rest[len..],
    ))
}

pub fn decode_payload(env: &Envelope<'_>) -> Option<SmrMsg> {
    bincode::deserialize(env.payload).ok()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub at_us: u64,
    pub from: NodeId,
    pub to: NodeId,
    pub msg: SmrMsg,
}

impl TraceRecord {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.at_us.to_le_bytes().to_vec();
        out.extend(encode_envelope(self.from, self.to, &self.msg));
        out
    }
}

/// Parses a trace file into `(time, envelope)` pairs.
pub fn read_trace(mut bytes: &[u8]) -> Option<Vec<(u64, Envelope<'_>)>> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let at = u64::from_le_bytes(bytes.get(..8)?.try_into().ok()?);
        let (env, rest) = decode_envelope(&bytes[8..])?;
        out.push((at, env));
        bytes = rest;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mptc_core::ProcessId;
    use mptc_smr::{Request, RequestKey};

    #[test]
    fn envelope_round_trips() {
        let msg = SmrMsg::Request(Request {
            key: RequestKey::new(3, 4),
            cmd: vec![9; 100],
        });
        let rec = TraceRecord {
            at_us: 77,
            from: NodeId::Client(3),
            to: NodeId::Participant(ProcessId(2)),
            msg: msg.clone(),
        };
        let mut bytes = rec.encode();
        bytes.extend(rec.encode());
        let parsed = read_trace(&bytes).unwrap();
        assert_eq!(parsed.len(), 2);
        let (at, env) = &parsed[0];
        assert_eq!(*at, 77);
        assert_eq!(env.tag, 1);
        assert_eq!(env.src, CLIENT_BASE | 3);
        assert_eq!(env.dst, 2);
        assert_eq!(decode_payload(env), Some(msg));
    }

    #[test]
    fn truncated_input_rejected() {
        let bytes = encode_envelope(
            NodeId::Replica(1),
            NodeId::Participant(ProcessId(0)),
            &SmrMsg::Response {
                key: RequestKey::new(1, 1),
                result: vec![],
            },
        );
        assert!(decode_envelope(&bytes[..bytes.len() - 1]).is_none());
        assert_eq!(
            u32::from_le_bytes(bytes[1..5].try_into().unwrap()),
            REPLICA_BASE | 1
        );
    }
}
