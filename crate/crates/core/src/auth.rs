//! Modeled message authentication for Byzantine runs.
//!
//! Each process holds a private key; verification goes through a shared
//! [`KeyRing`] that plays the role of a public-key directory. A faulty process
//! is only ever handed its own [`Signer`], so it cannot produce tags for
//! honest identities. Tags are keyed SHA-256 digests, which is enough inside a
//! simulator where the ring itself is never exposed to the adversary.

use crate::ids::ProcessId;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature(pub [u8; 32]);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sig({:02x}{:02x}..)", self.0[0], self.0[1])
    }
}

fn tag(key: &[u8; 32], msg: &[u8]) -> Signature {
    let mut h = Sha256::new();
    h.update(b"MPTC-SIG");
    h.update(key);
    h.update(msg);
    Signature(h.finalize().into())
}

/// Signing capability of a single process.
#[derive(Clone)]
pub struct Signer {
    me: ProcessId,
    key: [u8; 32],
}

impl Signer {
    pub fn id(&self) -> ProcessId {
        self.me
    }

    pub fn sign(&self, msg: &[u8]) -> Signature {
        tag(&self.key, msg)
    }
}

impl fmt::Debug for Signer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signer({})", self.me)
    }
}

/// Verification directory for all processes.
#[derive(Clone)]
pub struct KeyRing {
    keys: Vec<[u8; 32]>,
}

impl KeyRing {
    pub fn generate(n: u32, seed: u64) -> Self {
        let keys = (0..n)
            .map(|i| {
                let mut h = Sha256::new();
                h.update(b"MPTC-KEY");
                h.update(seed.to_le_bytes());
                h.update(i.to_le_bytes());
                h.finalize().into()
            })
            .collect();
        KeyRing { keys }
    }

    pub fn signer(&self, p: ProcessId) -> Signer {
        Signer {
            me: p,
            key: self.keys[p.0 as usize],
        }
    }

    pub fn verify(&self, p: ProcessId, msg: &[u8], sig: &Signature) -> bool {
        match self.keys.get(p.0 as usize) {
            Some(key) => tag(key, msg) == *sig,
            None => false,
        }
    }
}

impl fmt::Debug for KeyRing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KeyRing({} keys)", self.keys.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn own_signature_verifies() {
        let ring = KeyRing::generate(4, 1);
        let s = ring.signer(ProcessId(2));
        let sig = s.sign(b"hello");
        assert!(ring.verify(ProcessId(2), b"hello", &sig));
        assert!(!ring.verify(ProcessId(2), b"hellO", &sig));
    }

    #[test]
    fn signature_does_not_transfer_identity() {
        let ring = KeyRing::generate(4, 1);
        let sig = ring.signer(ProcessId(3)).sign(b"m");
        assert!(!ring.verify(ProcessId(1), b"m", &sig));
        assert!(!ring.verify(ProcessId(9), b"m", &sig));
    }
}
