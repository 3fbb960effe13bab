//! Lexicographic ranking of k-subsets of `0..n`.

use crate::error::CoreError;
use crate::ids::{ProcessId, SetIndex};

/// `C(n, k)`, or `None` if it does not fit in a `u64`.
pub fn binomial(n: u32, k: u32) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    Some(acc as u64)
}

pub(crate) fn checked_binomial(n: u32, k: u32) -> Result<u64, CoreError> {
    binomial(n, k).ok_or(CoreError::RankOverflow { n, k })
}

fn check_members(members: &[ProcessId], n: u32, p_f: u32) -> Result<(), CoreError> {
    if members.len() != p_f as usize {
        return Err(CoreError::InvalidParticipantSet(format!(
            "expected {p_f} members, got {}",
            members.len()
        )));
    }
    for w in members.windows(2) {
        if w[0] >= w[1] {
            return Err(CoreError::InvalidParticipantSet(format!(
                "members not strictly increasing at {} >= {}",
                w[0], w[1]
            )));
        }
    }
    if let Some(last) = members.last() {
        if last.0 >= n {
            return Err(CoreError::InvalidParticipantSet(format!(
                "member {last} outside universe of {n}"
            )));
        }
    }
    Ok(())
}

/// Rank of `members` among all `p_f`-subsets of `0..n` in lexicographic order.
pub fn rank_participant_set(
    members: &[ProcessId],
    n: u32,
    p_f: u32,
) -> Result<SetIndex, CoreError> {
    check_members(members, n, p_f)?;
    checked_binomial(n, p_f)?;
    let k = p_f;
    let mut rank: u64 = 0;
    let mut next_free = 0u32;
    for (i, m) in members.iter().enumerate() {
        let i = i as u32;
        // Count the subsets that agree on the prefix but pick a smaller
        // element at position i.
        for skipped in next_free..m.0 {
            rank += checked_binomial(n - 1 - skipped, k - 1 - i)?;
        }
        next_free = m.0 + 1;
    }
    Ok(SetIndex(rank))
}

/// Inverse of [`rank_participant_set`].
pub fn unrank_participant_set(
    index: SetIndex,
    n: u32,
    p_f: u32,
) -> Result<Vec<ProcessId>, CoreError> {
    let total = checked_binomial(n, p_f)?;
    if index.0 >= total {
        return Err(CoreError::SetIndexOutOfRange {
            index: index.0,
            n,
            k: p_f,
        });
    }
    let mut rest = index.0;
    let mut out = Vec::with_capacity(p_f as usize);
    let mut candidate = 0u32;
    for i in 0..p_f {
        loop {
            let block = checked_binomial(n - 1 - candidate, p_f - 1 - i)?;
            if rest < block {
                break;
            }
            rest -= block;
            candidate += 1;
        }
        out.push(ProcessId(candidate));
        candidate += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pids(ids: &[u32]) -> Vec<ProcessId> {
        ids.iter().copied().map(ProcessId).collect()
    }

    /// All k-subsets of 0..n in lexicographic order, by plain recursion.
    fn enumerate(n: u32, k: u32) -> Vec<Vec<u32>> {
        fn go(start: u32, n: u32, k: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if cur.len() as u32 == k {
                out.push(cur.clone());
                return;
            }
            for x in start..n {
                cur.push(x);
                go(x + 1, n, k, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        go(0, n, k, &mut Vec::new(), &mut out);
        out
    }

    #[test]
    fn first_combination_ranks_zero() {
        assert_eq!(
            rank_participant_set(&pids(&[0, 1, 2]), 6, 3),
            Ok(SetIndex(0))
        );
    }

    #[test]
    fn last_combination_of_six_choose_three() {
        assert_eq!(
            rank_participant_set(&pids(&[3, 4, 5]), 6, 3),
            Ok(SetIndex(19))
        );
    }

    #[test]
    fn spaced_members_rank_by_enumeration() {
        // Frozen from the enumeration oracle below.
        assert_eq!(
            rank_participant_set(&pids(&[0, 2, 4]), 6, 3),
            Ok(SetIndex(5))
        );
    }

    #[test]
    fn matches_enumeration_oracle_up_to_eight() {
        for n in 1..=8 {
            for k in 1..=n {
                for (expected, combo) in enumerate(n, k).iter().enumerate() {
                    let members = pids(combo);
                    let r = rank_participant_set(&members, n, k).unwrap();
                    assert_eq!(r.0, expected as u64, "n={n} k={k} {combo:?}");
                    assert_eq!(unrank_participant_set(r, n, k).unwrap(), members);
                }
            }
        }
    }

    #[test]
    fn rejects_malformed_lists() {
        assert!(matches!(
            rank_participant_set(&pids(&[0, 0, 1]), 6, 3),
            Err(CoreError::InvalidParticipantSet(_))
        ));
        assert!(matches!(
            rank_participant_set(&pids(&[2, 1, 0]), 6, 3),
            Err(CoreError::InvalidParticipantSet(_))
        ));
        assert!(matches!(
            rank_participant_set(&pids(&[0, 1, 6]), 6, 3),
            Err(CoreError::InvalidParticipantSet(_))
        ));
        assert!(matches!(
            rank_participant_set(&pids(&[0, 1]), 6, 3),
            Err(CoreError::InvalidParticipantSet(_))
        ));
    }

    #[test]
    fn unrank_rejects_out_of_range() {
        assert!(unrank_participant_set(SetIndex(20), 6, 3).is_err());
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(6, 3), Some(20));
        assert_eq!(binomial(9, 4), Some(126));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(64, 32), Some(1_832_624_140_942_590_534));
        assert_eq!(binomial(80, 40), None);
    }
}
