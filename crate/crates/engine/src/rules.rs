//! Outcome-update rules for Phases 2 and 3, as pure functions.
//!
//! "Select arbitrarily" is fixed to the lowest sender id throughout; the
//! Byzantine most-frequent rule breaks ties by the smallest value bytes.
//! In the Byzantine variants, certificates passed in must already be
//! validated; a `D`/`M` claim without one counts only as its bare value.

use mptc_core::{Outcome, ProcessId, Round, Value};
use mptc_paxos::{Cert, CertKind};
use std::collections::BTreeMap;

/// What a process does with a Phase-3 quorum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Phase3Result {
    Decide(Value),
    Propose(Value),
}

/// Phase 2, crash mode. `received` is ordered by sender.
pub fn phase2_crash(
    own: &Outcome,
    own_proposal: &Value,
    received: &[(ProcessId, Outcome)],
) -> Outcome {
    match own {
        Outcome::Decided(_) | Outcome::Maybe(_) => own.clone(),
        Outcome::Undecided(v) => {
            let pick = received.iter().find_map(|(_, o)| o.value());
            Outcome::Undecided(pick.unwrap_or(v).clone())
        }
        Outcome::Unknown => {
            let forced = received.iter().find_map(|(_, o)| match o {
                Outcome::Decided(v) | Outcome::Maybe(v) => Some(v),
                _ => None,
            });
            let any = received.iter().find_map(|(_, o)| o.value());
            Outcome::Undecided(forced.or(any).unwrap_or(own_proposal).clone())
        }
    }
}

/// Phase 3, crash mode: Case 1 any `D`, Case 2 unanimous `M`, Case 3 lowest
/// sender's value.
pub fn phase3_crash(received: &[(ProcessId, Outcome)], own_proposal: &Value) -> Phase3Result {
    if let Some(v) = received.iter().find_map(|(_, o)| match o {
        Outcome::Decided(v) => Some(v),
        _ => None,
    }) {
        return Phase3Result::Decide(v.clone());
    }
    if let Some((_, Outcome::Maybe(first))) = received.first() {
        if received
            .iter()
            .all(|(_, o)| matches!(o, Outcome::Maybe(v) if v == first))
        {
            return Phase3Result::Propose(first.clone());
        }
    }
    let v = received
        .iter()
        .find_map(|(_, o)| o.value())
        .unwrap_or(own_proposal);
    Phase3Result::Propose(v.clone())
}

/// One received outcome with its validated certificate, if any.
#[derive(Debug, Clone)]
pub struct CertifiedOutcome {
    pub from: ProcessId,
    pub outcome: Outcome,
    pub cert: Option<Cert>,
}

fn highest_cert<'a>(certs: impl Iterator<Item = &'a Cert>) -> Option<&'a Cert> {
    certs.max_by(|a, b| a.round.cmp(&b.round).then_with(|| b.value.cmp(&a.value)))
}

/// Phase 2, Byzantine mode. A certified `D`/`M` is kept; otherwise the
/// process moves to `(U, v)` where `v` comes from the highest certificate it
/// knows, or its own proposal.
pub fn phase2_byzantine(
    own: &Outcome,
    own_cert: Option<&Cert>,
    own_proposal: &Value,
    lock: Option<&Cert>,
    received: &[CertifiedOutcome],
) -> (Outcome, Option<Cert>) {
    if matches!(own, Outcome::Decided(_) | Outcome::Maybe(_)) && own_cert.is_some() {
        return (own.clone(), own_cert.cloned());
    }
    let best = highest_cert(
        lock.into_iter()
            .chain(received.iter().filter_map(|r| r.cert.as_ref())),
    );
    match best {
        Some(c) => (Outcome::Undecided(c.value.clone()), Some(c.clone())),
        None => (Outcome::Undecided(own_proposal.clone()), None),
    }
}

/// Phase 3, Byzantine mode, for a quorum from round `round`.
///
/// Case 1: `f+1` `D(v)` claims backed by round-`round` commit certificates.
/// Case 2: `f+1` `D(v)`/`M(v)` claims backed by round-`round` certificates.
/// Otherwise the highest certificate known wins; failing that, the most
/// frequent value.
pub fn phase3_byzantine(
    f: u32,
    round: Round,
    received: &[CertifiedOutcome],
    lock: Option<&Cert>,
    own_proposal: &Value,
) -> (Phase3Result, Option<Cert>) {
    let need = f as usize + 1;
    let mut decided: BTreeMap<&Value, Vec<&Cert>> = BTreeMap::new();
    let mut certified: BTreeMap<&Value, usize> = BTreeMap::new();
    for r in received {
        let Some(c) = &r.cert else { continue };
        if c.round != round {
            continue;
        }
        match &r.outcome {
            Outcome::Decided(v) if c.kind == CertKind::Commit && &c.value == v => {
                decided.entry(v).or_default().push(c);
                *certified.entry(v).or_default() += 1;
            }
            Outcome::Decided(v) | Outcome::Maybe(v) if &c.value == v => {
                *certified.entry(v).or_default() += 1;
            }
            _ => {}
        }
    }
    if let Some((v, certs)) = decided.iter().find(|(_, cs)| cs.len() >= need) {
        return (Phase3Result::Decide((*v).clone()), Some(certs[0].clone()));
    }
    if let Some((v, _)) = certified.iter().find(|(_, &n)| n >= need) {
        return (Phase3Result::Propose((*v).clone()), None);
    }
    if let Some(c) = highest_cert(
        lock.into_iter()
            .chain(received.iter().filter_map(|r| r.cert.as_ref())),
    ) {
        return (Phase3Result::Propose(c.value.clone()), Some(c.clone()));
    }
    let mut freq: BTreeMap<&Value, usize> = BTreeMap::new();
    for r in received {
        if let Some(v) = r.outcome.value() {
            *freq.entry(v).or_default() += 1;
        }
    }
    // BTreeMap iterates smallest value first, so the first maximum wins ties.
    let mut best: Option<(&Value, usize)> = None;
    for (v, n) in freq {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((v, n));
        }
    }
    let v = best.map(|(v, _)| v).unwrap_or(own_proposal);
    (Phase3Result::Propose(v.clone()), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mptc_core::{ConfigId, InstanceId};

    fn v(b: u8) -> Value {
        Value::new(vec![b])
    }
    fn p(i: u32) -> ProcessId {
        ProcessId(i)
    }

    #[test]
    fn phase2_undecided_takes_lowest_sender() {
        let got = phase2_crash(
            &Outcome::Undecided(v(0xa)),
            &v(0xa),
            &[
                (p(0), Outcome::Maybe(v(0xb))),
                (p(1), Outcome::Undecided(v(0xc))),
            ],
        );
        assert_eq!(got, Outcome::Undecided(v(0xb)));
    }

    #[test]
    fn phase2_unknown_forced_by_maybe() {
        let got = phase2_crash(
            &Outcome::Unknown,
            &v(1),
            &[(p(0), Outcome::Unknown), (p(2), Outcome::Maybe(v(7)))],
        );
        assert_eq!(got.value(), Some(&v(7)));
    }

    #[test]
    fn phase2_all_unknown_keeps_own() {
        let got = phase2_crash(
            &Outcome::Unknown,
            &v(1),
            &[(p(0), Outcome::Unknown), (p(1), Outcome::Unknown)],
        );
        assert_eq!(got, Outcome::Undecided(v(1)));
    }

    #[test]
    fn phase2_maybe_is_kept() {
        let got = phase2_crash(
            &Outcome::Maybe(v(3)),
            &v(3),
            &[(p(0), Outcome::Undecided(v(4)))],
        );
        assert_eq!(got, Outcome::Maybe(v(3)));
    }

    #[test]
    fn phase3_crash_cases() {
        assert_eq!(
            phase3_crash(
                &[(p(0), Outcome::Decided(v(1))), (p(1), Outcome::Maybe(v(1)))],
                &v(9)
            ),
            Phase3Result::Decide(v(1))
        );
        assert_eq!(
            phase3_crash(
                &[(p(0), Outcome::Maybe(v(1))), (p(1), Outcome::Maybe(v(1)))],
                &v(9)
            ),
            Phase3Result::Propose(v(1))
        );
        assert_eq!(
            phase3_crash(
                &[
                    (p(2), Outcome::Undecided(v(5))),
                    (p(4), Outcome::Undecided(v(3)))
                ],
                &v(9)
            ),
            Phase3Result::Propose(v(5))
        );
    }

    fn cert(kind: CertKind, round: u64, val: Value) -> Cert {
        Cert {
            kind,
            instance: InstanceId(0),
            round: Round(round),
            config: ConfigId(0),
            value: val,
            sigs: vec![],
        }
    }

    fn co(from: u32, outcome: Outcome, c: Option<Cert>) -> CertifiedOutcome {
        CertifiedOutcome {
            from: p(from),
            outcome,
            cert: c,
        }
    }

    #[test]
    fn byzantine_case1_needs_f_plus_one() {
        let r = [
            co(
                0,
                Outcome::Decided(v(1)),
                Some(cert(CertKind::Commit, 2, v(1))),
            ),
            co(
                1,
                Outcome::Decided(v(1)),
                Some(cert(CertKind::Commit, 2, v(1))),
            ),
            co(2, Outcome::Maybe(v(2)), None),
        ];
        assert_eq!(
            phase3_byzantine(1, Round(2), &r, None, &v(9)).0,
            Phase3Result::Decide(v(1))
        );
        assert_ne!(
            phase3_byzantine(1, Round(2), &r[1..], None, &v(9)).0,
            Phase3Result::Decide(v(1))
        );
    }

    #[test]
    fn byzantine_uncertified_claims_do_not_decide() {
        let r = [
            co(0, Outcome::Decided(v(1)), None),
            co(1, Outcome::Decided(v(1)), None),
            co(2, Outcome::Undecided(v(2)), None),
        ];
        assert_eq!(
            phase3_byzantine(1, Round(0), &r, None, &v(9)).0,
            Phase3Result::Propose(v(1))
        );
    }

    #[test]
    fn byzantine_lock_beats_frequency() {
        let r = [
            co(0, Outcome::Undecided(v(2)), None),
            co(1, Outcome::Undecided(v(2)), None),
            co(
                2,
                Outcome::Undecided(v(3)),
                Some(cert(CertKind::Prepare, 4, v(3))),
            ),
        ];
        assert_eq!(
            phase3_byzantine(1, Round(5), &r, None, &v(9)).0,
            Phase3Result::Propose(v(3))
        );
        let older = cert(CertKind::Prepare, 1, v(7));
        let newer = cert(CertKind::Prepare, 6, v(8));
        assert_eq!(
            phase3_byzantine(1, Round(6), &r, Some(&newer), &v(9)).0,
            Phase3Result::Propose(v(8))
        );
        assert_eq!(
            phase3_byzantine(1, Round(6), &r, Some(&older), &v(9)).0,
            Phase3Result::Propose(v(3))
        );
    }

    #[test]
    fn byzantine_frequency_ties_pick_smallest() {
        let r = [
            co(0, Outcome::Undecided(v(5)), None),
            co(1, Outcome::Undecided(v(4)), None),
            co(2, Outcome::Unknown, None),
        ];
        assert_eq!(
            phase3_byzantine(1, Round(0), &r, None, &v(9)).0,
            Phase3Result::Propose(v(4))
        );
    }

    #[test]
    fn byzantine_phase2_adopts_highest_cert() {
        let r = [co(
            0,
            Outcome::Maybe(v(3)),
            Some(cert(CertKind::Prepare, 2, v(3))),
        )];
        let (o, c) = phase2_byzantine(
            &Outcome::Unknown,
            None,
            &v(1),
            Some(&cert(CertKind::Prepare, 1, v(6))),
            &r,
        );
        assert_eq!(o, Outcome::Undecided(v(3)));
        assert_eq!(c.unwrap().round, Round(2));
        let (o, _) = phase2_byzantine(&Outcome::Unknown, None, &v(1), None, &[]);
        assert_eq!(o, Outcome::Undecided(v(1)));
    }
}
