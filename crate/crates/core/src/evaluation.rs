//! Tolerant group matching and precision/recall/F1 over a corpus.
//!
//! A detected group matches a truth group G at tolerance T when it contains at
//! least ⌈T·|G|⌉ members of G and at most ⌊(1−T)·|G|⌋ agents outside G.
//! Scores are micro-averaged: matched, detected and truth counts are summed
//! over frames before dividing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::PairSample;
use crate::model::{AgentId, FrameId, GroupSet};

/// Matching tolerance held as an exact fraction `num/den` in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tolerance {
    num: u64,
    den: u64,
}

impl Tolerance {
    pub const TWO_THIRDS: Tolerance = Tolerance { num: 2, den: 3 };
    pub const EXACT: Tolerance = Tolerance { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num > den {
            return Err(Error::InvalidParameter(format!(
                "tolerance {num}/{den} must lie in (0, 1]"
            )));
        }
        Ok(Tolerance { num, den })
    }

    /// Converts a decimal tolerance. Values within 1e-4 of a fraction with a
    /// denominator up to 12 snap to that fraction, so 0.6667 becomes exactly 2/3.
    pub fn from_f64(t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::InvalidParameter(format!("tolerance {t} must lie in (0, 1]")));
        }
        for den in 1..=12u64 {
            let num = (t * den as f64).round();
            if num >= 1.0 && (num / den as f64 - t).abs() < 1e-4 {
                return Tolerance::new(num as u64, den);
            }
        }
        const SCALE: u64 = 1_000_000;
        Tolerance::new(((t * SCALE as f64).round() as u64).max(1), SCALE)
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// ⌈T·n⌉
    pub fn min_overlap(&self, n: usize) -> usize {
        (self.num * n as u64).div_ceil(self.den) as usize
    }

    /// ⌊(1−T)·n⌋
    pub fn max_outsiders(&self, n: usize) -> usize {
        ((self.den - self.num) * n as u64 / self.den) as usize
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::TWO_THIRDS
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

pub fn group_match(detected: &BTreeSet<AgentId>, truth: &BTreeSet<AgentId>, tolerance: Tolerance) -> Result<bool> {
    if detected.is_empty() || truth.is_empty() {
        return Err(Error::Empty("group to match"));
    }
    let overlap = detected.intersection(truth).count();
    let outsiders = detected.len() - overlap;
    Ok(overlap >= tolerance.min_overlap(truth.len()) && outsiders <= tolerance.max_outsiders(truth.len()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Matching {
    /// Truth groups largest first (ties by index) each take the first
    /// unmatched detection that matches.
    #[default]
    Greedy,
    /// Maximum one-to-one matching by exhaustive search; frames are limited
    /// to 8 groups on each side.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_id: FrameId,
    pub matched: usize,
    pub detected: usize,
    pub truth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub detected: usize,
    pub truth: usize,
    pub tolerance: f64,
    pub per_frame: Vec<FrameScore>,
}

impl EvalReport {
    fn from_frames(per_frame: Vec<FrameScore>, tolerance: Tolerance) -> Self {
        let matched: usize = per_frame.iter().map(|f| f.matched).sum();
        let detected: usize = per_frame.iter().map(|f| f.detected).sum();
        let truth: usize = per_frame.iter().map(|f| f.truth).sum();
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(matched, detected);
        let recall = ratio(matched, truth);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f1,
            matched,
            detected,
            truth,
            tolerance: tolerance.as_f64(),
            per_frame,
        }
    }

    /// Plain-text rendering: one row per frame, then a summary block.
    pub fn to_text(&self) -> String {
        let mut out = String::from("frame_id\tmatched\tdetected\ttruth\n");
        for f in &self.per_frame {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", f.frame_id, f.matched, f.detected, f.truth));
        }
        out.push_str(&format!(
            "\n# summary\ntolerance\t{:.4}\nframes\t{}\nmatched\t{}\ndetected\t{}\ntruth\t{}\nprecision\t{:.4}\nrecall\t{:.4}\nf1\t{:.4}\n",
            self.tolerance,
            self.per_frame.len(),
            self.matched,
            self.detected,
            self.truth,
            self.precision,
            self.recall,
            self.f1
        ));
        out
    }
}

/// Matched pair count for one frame.
pub fn match_frame(detected: &GroupSet, truth: &GroupSet, tolerance: Tolerance, matching: Matching) -> Result<usize> {
    let det = detected.groups();
    let tru = truth.groups();
    // ok[t][d]: detection d is an acceptable match for truth t.
    let mut ok = vec![vec![false; det.len()]; tru.len()];
    for (t, tg) in tru.iter().enumerate() {
        for (d, dg) in det.iter().enumerate() {
            ok[t][d] = group_match(dg, tg, tolerance)?;
        }
    }
    Ok(match matching {
        Matching::Greedy => {
            let mut order: Vec<usize> = (0..tru.len()).collect();
            order.sort_by(|&a, &b| tru[b].len().cmp(&tru[a].len()).then(a.cmp(&b)));
            let mut used = vec![false; det.len()];
            let mut matched = 0;
            for t in order {
                if let Some(d) = (0..det.len()).find(|&d| !used[d] && ok[t][d]) {
                    used[d] = true;
                    matched += 1;
                }
            }
            matched
        }
        Matching::Exhaustive => {
            let mut used = vec![false; det.len()];
            best_assignment(&ok, 0, &mut used)
        }
    })
}

fn best_assignment(ok: &[Vec<bool>], t: usize, used: &mut [bool]) -> usize {
    if t == ok.len() {
        return 0;
    }
    let mut best = best_assignment(ok, t + 1, used);
    for d in 0..used.len() {
        if !used[d] && ok[t][d] {
            used[d] = true;
            best = best.max(1 + best_assignment(ok, t + 1, used));
            used[d] = false;
        }
    }
    best
}

pub fn evaluate(
    detections: &[(FrameId, GroupSet)],
    truths: &[(FrameId, GroupSet)],
    tolerance: Tolerance,
    matching: Matching,
) -> Result<EvalReport> {
    let index = |list: &[(FrameId, GroupSet)], what: &str| -> Result<BTreeMap<FrameId, GroupSet>> {
        let mut map = BTreeMap::new();
        for (id, gs) in list {
            if map.insert(*id, gs.clone()).is_some() {
                return Err(Error::FrameMismatch(format!("frame {id} appears twice in {what}")));
            }
        }
        Ok(map)
    };
    let det = index(detections, "detections")?;
    let tru = index(truths, "truth")?;
    if let Some(id) = det.keys().find(|k| !tru.contains_key(k)) {
        return Err(Error::FrameMismatch(format!("frame {id} has detections but no truth")));
    }
    if let Some(id) = tru.keys().find(|k| !det.contains_key(k)) {
        return Err(Error::FrameMismatch(format!("frame {id} has truth but no detections")));
    }
    let mut per_frame = Vec::with_capacity(det.len());
    for (frame_id, d) in &det {
        let t = &tru[frame_id];
        if matching == Matching::Exhaustive && (d.len() > 8 || t.len() > 8) {
            return Err(Error::TooManyGroups {
                frame_id: *frame_id,
                count: d.len().max(t.len()),
            });
        }
        per_frame.push(FrameScore {
            frame_id: *frame_id,
            matched: match_frame(d, t, tolerance, matching)?,
            detected: d.len(),
            truth: t.len(),
        });
    }
    Ok(EvalReport::from_frames(per_frame, tolerance))
}

/// Pairwise accuracy of always predicting the most frequent label
/// (ties predict the negative class).
pub fn majority_baseline(samples: &[PairSample]) -> Result<f64> {
    let positives = samples.iter().filter(|s| s.label == Some(1)).count();
    let negatives = samples.len() - positives;
    let majority = u8::from(positives > negatives);
    crate::classifiers::accuracy_of(samples, |_| Ok(majority))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(ids: &[AgentId]) -> BTreeSet<AgentId> {
        ids.iter().copied().collect()
    }

    fn gs(groups: &[&[AgentId]]) -> GroupSet {
        GroupSet::new(groups.iter().map(|g| g.to_vec())).unwrap()
    }

    #[test]
    fn tolerance_arithmetic() {
        let t = Tolerance::from_f64(0.6667).unwrap();
        assert_eq!(t, Tolerance::TWO_THIRDS);
        assert_eq!(t.min_overlap(3), 2);
        assert_eq!(t.max_outsiders(3), 1);
        assert_eq!(t.min_overlap(2), 2);
        assert_eq!(t.max_outsiders(2), 0);
        assert_eq!(t.min_overlap(6), 4);
        assert_eq!(t.max_outsiders(6), 2);
        assert_eq!(Tolerance::from_f64(1.0).unwrap(), Tolerance::EXACT);
        assert_eq!(Tolerance::EXACT.max_outsiders(7), 0);
        assert!(Tolerance::from_f64(0.0).is_err());
        assert!(Tolerance::from_f64(1.5).is_err());
        let odd = Tolerance::from_f64(0.61803).unwrap();
        assert!((odd.as_f64() - 0.61803).abs() < 1e-9);
    }

    #[test]
    fn group_match_examples() {
        let t = Tolerance::TWO_THIRDS;
        assert!(group_match(&s(&[1, 2, 3]), &s(&[1, 2, 3]), t).unwrap());
        assert!(group_match(&s(&[1, 2]), &s(&[1, 2, 3]), t).unwrap());
        assert!(!group_match(&s(&[1, 4, 5]), &s(&[1, 2, 3]), t).unwrap());
        assert!(group_match(&s(&[]), &s(&[1, 2]), t).is_err());
        assert!(!group_match(&s(&[1, 2]), &s(&[1, 2, 3]), Tolerance::EXACT).unwrap());
    }

    #[test]
    fn evaluate_single_frame_example() {
        let truth = vec![(0, gs(&[&[1, 2, 3], &[4, 5]]))];
        let det = vec![(0, gs(&[&[1, 2], &[4, 5], &[6, 7]]))];
        let r = evaluate(&det, &truth, Tolerance::TWO_THIRDS, Matching::Greedy).unwrap();
        assert_eq!(r.matched, 2);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.recall, 1.0);
        assert!((r.f1 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn perfect_and_empty_detections() {
        let truth = vec![(0, gs(&[&[1, 2, 3]])), (1, gs(&[&[1, 2], &[3, 4]])), (2, GroupSet::empty())];
        let r = evaluate(&truth, &truth, Tolerance::TWO_THIRDS, Matching::Greedy).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));

        let none: Vec<_> = truth.iter().map(|(id, _)| (*id, GroupSet::empty())).collect();
        let r = evaluate(&none, &truth, Tolerance::TWO_THIRDS, Matching::Greedy).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.truth, 3);
    }

    #[test]
    fn frame_sets_must_align() {
        let a = vec![(0, GroupSet::empty())];
        let b = vec![(1, GroupSet::empty())];
        assert!(matches!(evaluate(&a, &b, Tolerance::TWO_THIRDS, Matching::Greedy), Err(Error::FrameMismatch(_))));
    }

    #[test]
    fn majority_baseline_examples() {
        let sample = |l| PairSample { id_a: 1, id_b: 2, distance: 1.0, effort_angle: 1.0, label: Some(l) };
        assert_eq!(majority_baseline(&[sample(1), sample(0)]).unwrap(), 0.5);
        assert_eq!(majority_baseline(&[sample(0), sample(0), sample(0)]).unwrap(), 1.0);
        assert!((majority_baseline(&[sample(0), sample(1), sample(1)]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(majority_baseline(&[]).is_err());
    }

    #[test]
    fn loose_tolerance_lets_greedy_fall_short() {
        // At T = 1/2 the first detection matches both truths; greedy hands it
        // to the first truth and strands the second.
        let half = Tolerance::new(1, 2).unwrap();
        let truth = gs(&[&[1, 2, 3, 4, 5, 6], &[7, 8, 9, 10, 11, 12]]);
        let det = gs(&[&[1, 2, 3, 7, 8, 9], &[4, 5, 6, 13]]);
        let g = match_frame(&det, &truth, half, Matching::Greedy).unwrap();
        let e = match_frame(&det, &truth, half, Matching::Exhaustive).unwrap();
        assert_eq!((g, e), (1, 2));
    }

    fn arb_groups() -> impl Strategy<Value = GroupSet> {
        proptest::collection::vec(0usize..4, 0..9).prop_map(|assign| {
            let mut groups: BTreeMap<usize, Vec<AgentId>> = BTreeMap::new();
            for (i, g) in assign.into_iter().enumerate() {
                if g > 0 {
                    groups.entry(g).or_default().push(i as AgentId);
                }
            }
            GroupSet::new(groups.into_values().filter(|g| g.len() >= 2)).unwrap()
        })
    }

    proptest! {
        #[test]
        fn exact_tolerance_is_set_equality(det in arb_groups(), truth in arb_groups()) {
            let matched = match_frame(&det, &truth, Tolerance::EXACT, Matching::Greedy).unwrap();
            let equal = det.groups().iter().filter(|g| truth.groups().contains(g)).count();
            prop_assert_eq!(matched, equal);
        }

        #[test]
        fn greedy_is_optimal_at_two_thirds(det in arb_groups(), truth in arb_groups()) {
            let t = Tolerance::TWO_THIRDS;
            prop_assert_eq!(
                match_frame(&det, &truth, t, Matching::Greedy).unwrap(),
                match_frame(&det, &truth, t, Matching::Exhaustive).unwrap()
            );
        }

        #[test]
        fn counts_are_bounded(det in arb_groups(), truth in arb_groups()) {
            let r = evaluate(&[(0, det.clone())], &[(0, truth.clone())], Tolerance::TWO_THIRDS, Matching::Greedy).unwrap();
            prop_assert!(r.matched <= det.len().min(truth.len()));
            prop_assert!((0.0..=1.0).contains(&r.precision) && (0.0..=1.0).contains(&r.recall));
            let strict = evaluate(&[(0, det)], &[(0, truth)], Tolerance::EXACT, Matching::Greedy).unwrap();
            prop_assert!(strict.matched <= r.matched);
        }

        #[test]
        fn adding_a_true_member_never_breaks_a_match(
            truth in proptest::collection::btree_set(0u32..12, 2..8),
            det in proptest::collection::btree_set(0u32..12, 1..8),
        ) {
            let t = Tolerance::TWO_THIRDS;
            if group_match(&det, &truth, t).unwrap() {
                for extra in truth.difference(&det) {
                    let mut bigger = det.clone();
                    bigger.insert(*extra);
                    prop_assert!(group_match(&bigger, &truth, t).unwrap());
                }
            }
        }
    }
}
