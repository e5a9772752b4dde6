//! Wellspread configurations, `(Δ,λ)`-identifiable pairs and the
//! reconstruction of particle increments from discrete observations.

use serde::Serialize;

use crate::bdi::{ExcursionStats, Functional, Observation, Particles, SegmentRecord};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats::{block_bootstrap_se, Estimate};

/// Every pair of particles differs by at least `eps` in every coordinate.
/// Configurations with at most one particle are wellspread.
pub fn is_wellspread<P: Particles + ?Sized>(x: &P, eps: f64) -> bool {
    !has_close_pair(x, eps)
}

/// `x ∈ N(ε)`: at least two particles and some pair is closer than `eps` in
/// some coordinate.
pub fn in_n_epsilon<P: Particles + ?Sized>(x: &P, eps: f64) -> bool {
    has_close_pair(x, eps)
}

fn has_close_pair<P: Particles + ?Sized>(x: &P, eps: f64) -> bool {
    let n = x.len();
    if n < 2 {
        return false;
    }
    if x.dim() == 1 {
        let mut v = x.flat_positions().to_vec();
        v.sort_by(f64::total_cmp);
        return v.windows(2).any(|w| w[1] - w[0] < eps);
    }
    (0..n).any(|i| {
        let a = x.particle(i);
        (i + 1..n).any(|j| a.iter().zip(x.particle(j)).any(|(p, q)| (p - q).abs() < eps))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NotIdentifiable {
    Void,
    LengthMismatch,
    XNotWellspread,
    YNotWellspread,
    NoValidPermutation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum MatchResult {
    /// `perm[i] = j`: particle `i` of `x` becomes particle `j` of `y`.
    Identified(Vec<usize>),
    NotIdentifiable(NotIdentifiable),
}

impl MatchResult {
    pub fn is_identified(&self) -> bool {
        matches!(self, MatchResult::Identified(_))
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        match self {
            MatchResult::Identified(p) => Some(p),
            MatchResult::NotIdentifiable(_) => None,
        }
    }
}

/// Decides whether `(x, y)` is `(Δ,λ)`-identifiable and returns the unique
/// matching permutation if so.
pub fn match_pair<P: Particles + ?Sized, Q: Particles + ?Sized>(x: &P, y: &Q, delta: f64, lambda: f64) -> MatchResult {
    use NotIdentifiable::*;
    let n = x.len();
    if n != y.len() {
        return MatchResult::NotIdentifiable(LengthMismatch);
    }
    if n == 0 {
        return MatchResult::NotIdentifiable(Void);
    }
    let r = delta.powf(lambda);
    if !is_wellspread(x, 4.0 * r) {
        return MatchResult::NotIdentifiable(XNotWellspread);
    }
    if !is_wellspread(y, 2.0 * r) {
        return MatchResult::NotIdentifiable(YNotWellspread);
    }
    let mut perm = Vec::with_capacity(n);
    let mut taken = vec![false; n];
    for i in 0..n {
        let xi = x.particle(i);
        let hit = (0..n).find(|&j| y.particle(j).iter().zip(xi).all(|(b, a)| (b - a).abs() < r));
        match hit {
            Some(j) if !taken[j] => {
                taken[j] = true;
                perm.push(j);
            }
            _ => return MatchResult::NotIdentifiable(NoValidPermutation),
        }
    }
    MatchResult::Identified(perm)
}

/// Outcome of the reconstruction algorithm on one observed pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReconstruction {
    pub result: MatchResult,
    /// `y_{π(k)} - x_k` for every `k` when identified.
    pub increments: Vec<Vec<f64>>,
}

pub fn reconstruct_pair(x: &Observation, y: &Observation, delta: f64, lambda: f64) -> PairReconstruction {
    let result = match_pair(x, y, delta, lambda);
    let increments = match &result {
        MatchResult::Identified(perm) => perm
            .iter()
            .enumerate()
            .map(|(k, &j)| y.particle(j).iter().zip(x.particle(k)).map(|(b, a)| b - a).collect())
            .collect(),
        MatchResult::NotIdentifiable(_) => Vec::new(),
    };
    PairReconstruction { result, increments }
}

/// Runs the reconstruction on every consecutive pair of the stream.
pub fn reconstruct_increments(observations: &[Observation], delta: f64, lambda: f64) -> Vec<PairReconstruction> {
    observations
        .windows(2)
        .map(|w| reconstruct_pair(&w[0], &w[1], delta, lambda))
        .collect()
}

/// Counts over observed pairs. Proportions are relative to `n_pairs`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconStats {
    pub n_pairs: u64,
    pub n_nonvoid: u64,
    pub n_identifiable: u64,
    pub n_identifiable_correct: u64,
    pub n_identifiable_wrong: u64,
    pub n_nonvoid_not_ci: u64,
    pub n_ci: u64,
    /// CI segments whose pair is not identifiable.
    pub n_ci_not_identifiable: u64,
    /// CI segments whose pair is identified with the wrong permutation.
    pub n_ci_wrong: u64,
    pub se_identifiable: f64,
    pub se_wrong: f64,
    pub se_nonvoid_not_ci: f64,
    pub se_ci: f64,
}

impl ReconStats {
    fn prop(&self, k: u64) -> f64 {
        if self.n_pairs == 0 {
            0.0
        } else {
            k as f64 / self.n_pairs as f64
        }
    }

    pub fn p_identifiable(&self) -> f64 {
        self.prop(self.n_identifiable)
    }

    pub fn p_wrong(&self) -> f64 {
        self.prop(self.n_identifiable_wrong)
    }

    pub fn p_nonvoid_not_ci(&self) -> f64 {
        self.prop(self.n_nonvoid_not_ci)
    }

    pub fn p_ci(&self) -> f64 {
        self.prop(self.n_ci)
    }

    pub fn csv_header() -> &'static str {
        "delta,lambda,n_pairs,n_nonvoid,n_identifiable,n_correct,n_wrong,n_nonvoid_not_ci,n_ci,n_ci_not_identifiable,n_ci_wrong,p_identifiable,se_identifiable,p_wrong,se_wrong,p_nonvoid_not_ci,se_nonvoid_not_ci,p_ci,se_ci"
    }

    pub fn csv_row(&self, delta: f64, lambda: f64) -> String {
        format!(
            "{:.16e},{:.16e},{},{},{},{},{},{},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            delta,
            lambda,
            self.n_pairs,
            self.n_nonvoid,
            self.n_identifiable,
            self.n_identifiable_correct,
            self.n_identifiable_wrong,
            self.n_nonvoid_not_ci,
            self.n_ci,
            self.n_ci_not_identifiable,
            self.n_ci_wrong,
            self.p_identifiable(),
            self.se_identifiable,
            self.p_wrong(),
            self.se_wrong,
            self.p_nonvoid_not_ci(),
            self.se_nonvoid_not_ci,
            self.p_ci(),
            self.se_ci,
        )
    }
}

const IDENTIFIABLE: u8 = 1;
const WRONG: u8 = 2;
const NONVOID_NOT_CI: u8 = 4;
const CI: u8 = 8;

/// Streaming version of [`classify_against_truth`].
#[derive(Debug, Clone)]
pub struct ReconTally {
    delta: f64,
    lambda: f64,
    flags: Vec<u8>,
    n_nonvoid: u64,
    n_correct: u64,
    n_ci_not_identifiable: u64,
    n_ci_wrong: u64,
}

impl ReconTally {
    pub fn new(delta: f64, lambda: f64) -> Self {
        Self {
            delta,
            lambda,
            flags: Vec::new(),
            n_nonvoid: 0,
            n_correct: 0,
            n_ci_not_identifiable: 0,
            n_ci_wrong: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn push(&mut self, result: &MatchResult, truth: &SegmentRecord) {
        let mut f = 0;
        let nonvoid = !truth.start.is_empty();
        let ci = truth.ci_flag(self.delta, self.lambda);
        if nonvoid {
            self.n_nonvoid += 1;
            if !ci {
                f |= NONVOID_NOT_CI;
            }
        }
        if ci {
            f |= CI;
        }
        match result {
            MatchResult::Identified(perm) => {
                f |= IDENTIFIABLE;
                if follows_lineage(perm, truth) {
                    self.n_correct += 1;
                } else {
                    f |= WRONG;
                    if ci {
                        self.n_ci_wrong += 1;
                    }
                }
            }
            MatchResult::NotIdentifiable(_) => {
                if ci {
                    self.n_ci_not_identifiable += 1;
                }
            }
        }
        self.flags.push(f);
    }

    pub fn finish(&self) -> ReconStats {
        let count = |bit: u8| self.flags.iter().filter(|&&f| f & bit != 0).count() as u64;
        let n = self.flags.len();
        let block = ((n as f64).sqrt() as usize).max(1);
        let se = |bit: u8| {
            let xs: Vec<f64> = self.flags.iter().map(|&f| f64::from(f & bit != 0)).collect();
            let mut boot = rng::stream(0xB10C, u64::from(bit));
            block_bootstrap_se(&xs, block, 200, &mut boot)
        };
        ReconStats {
            n_pairs: n as u64,
            n_nonvoid: self.n_nonvoid,
            n_identifiable: count(IDENTIFIABLE),
            n_identifiable_correct: self.n_correct,
            n_identifiable_wrong: count(WRONG),
            n_nonvoid_not_ci: count(NONVOID_NOT_CI),
            n_ci: count(CI),
            n_ci_not_identifiable: self.n_ci_not_identifiable,
            n_ci_wrong: self.n_ci_wrong,
            se_identifiable: se(IDENTIFIABLE),
            se_wrong: se(WRONG),
            se_nonvoid_not_ci: se(NONVOID_NOT_CI),
            se_ci: se(CI),
        }
    }
}

/// Lineage ids of a configuration listed in canonical (observed) order.
fn canonical_ids(c: &crate::bdi::Configuration) -> Vec<u64> {
    let d = c.dim();
    let mut idx: Vec<usize> = (0..c.len()).collect();
    idx.sort_by(|&a, &b| {
        let (p, q) = (c.particle(a), c.particle(b));
        (0..d)
            .map(|m| p[m].total_cmp(&q[m]))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    idx.into_iter().map(|i| c.ids()[i]).collect()
}

fn follows_lineage(perm: &[usize], truth: &SegmentRecord) -> bool {
    let from = canonical_ids(&truth.start);
    let to = canonical_ids(&truth.end);
    from.len() == perm.len()
        && to.len() == perm.len()
        && perm.iter().enumerate().all(|(i, &j)| from[i] == to[j])
}

/// Compares each pair's outcome with the lineage truth of its segment.
pub fn classify_against_truth(
    pairs: &[MatchResult],
    truth: &[SegmentRecord],
    delta: f64,
    lambda: f64,
) -> Result<ReconStats> {
    if pairs.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pairs.len(),
            right: truth.len(),
        });
    }
    let mut tally = ReconTally::new(delta, lambda);
    for (p, t) in pairs.iter().zip(truth) {
        tally.push(p, t);
    }
    Ok(tally.finish())
}

/// Estimates of `μ(N(ε))` for each `ε`, read from `NearPair(ε)` functionals
/// accumulated by a regenerative run. `ε = 0` gives exactly zero.
pub fn wellspread_measure_estimate(stats: &ExcursionStats, eps_list: &[f64]) -> Result<Vec<Estimate>> {
    eps_list
        .iter()
        .map(|&eps| {
            if eps == 0.0 {
                Ok(Estimate::new(0.0, 0.0))
            } else {
                stats.estimate_named(&Functional::NearPair(eps).name())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdi::Configuration;

    fn obs(d: usize, v: &[f64]) -> Observation {
        Observation::new(d, v.to_vec())
    }

    #[test]
    fn wellspread_examples() {
        assert!(is_wellspread(&Observation::void(2), 1.0));
        assert!(is_wellspread(&obs(1, &[0.0, 0.5]), 0.5));
        assert!(!is_wellspread(&obs(2, &[0.0, 0.0, 0.3, 5.0]), 0.4));
        assert!(!in_n_epsilon(&obs(1, &[3.0]), 1.0));
        assert!(in_n_epsilon(&obs(1, &[0.0, 0.1]), 0.2));
        assert!(!in_n_epsilon(&obs(3, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]), 0.5));
        assert!(!in_n_epsilon(&obs(1, &[0.0, 1e-9]), 0.0));
    }

    #[test]
    fn match_examples() {
        let r = match_pair(&obs(1, &[0.0]), &obs(1, &[0.05]), 0.01, 0.4);
        assert_eq!(r, MatchResult::Identified(vec![0]));
        let r = match_pair(&obs(1, &[0.0]), &obs(1, &[0.0, 1.0]), 0.01, 0.4);
        assert_eq!(r, MatchResult::NotIdentifiable(NotIdentifiable::LengthMismatch));
        let r = match_pair(&obs(1, &[0.0, 1.0]), &obs(1, &[1.05, 0.02]), 0.01, 0.4);
        assert_eq!(r, MatchResult::Identified(vec![1, 0]));
        let r = match_pair(&Observation::void(1), &Observation::void(1), 0.01, 0.4);
        assert_eq!(r, MatchResult::NotIdentifiable(NotIdentifiable::Void));
    }

    #[test]
    fn boundary_ties() {
        let r = 0.01f64.powf(0.4);
        // a move of exactly Δ^λ is not a match
        let res = match_pair(&obs(1, &[0.0]), &obs(1, &[r]), 0.01, 0.4);
        assert_eq!(res, MatchResult::NotIdentifiable(NotIdentifiable::NoValidPermutation));
        // a gap of exactly 4Δ^λ is wellspread
        assert!(is_wellspread(&obs(1, &[0.0, 4.0 * r]), 4.0 * r));
    }

    #[test]
    fn increments_of_the_swap_example() {
        let x = obs(1, &[0.0, 1.0]);
        let y = obs(1, &[1.05, 0.02]);
        let rec = reconstruct_increments(&[x.clone(), y], 0.01, 0.4);
        assert_eq!(rec.len(), 1);
        assert!((rec[0].increments[0][0] - 0.02).abs() < 1e-15);
        assert!((rec[0].increments[1][0] - 0.05).abs() < 1e-12);
        let frozen = reconstruct_increments(&[x.clone(), x], 0.01, 0.4);
        assert_eq!(frozen[0].result, MatchResult::Identified(vec![0, 1]));
        assert!(frozen[0].increments.iter().all(|v| v[0] == 0.0));
    }

    fn segment(start: Configuration, end: Configuration, had_event: bool) -> SegmentRecord {
        let increments = if had_event {
            Vec::new()
        } else {
            start
                .ids()
                .iter()
                .enumerate()
                .map(|(i, &id)| (id, vec![end.position_of(id).unwrap()[0] - start.particle(i)[0]]))
                .collect()
        };
        SegmentRecord {
            interval_index: 0,
            had_event,
            start,
            end,
            increments,
        }
    }

    #[test]
    fn classification_counts() {
        let (d, l) = (0.01, 0.4);
        let start = Configuration::with_ids(1, vec![1.0, 0.0], vec![10, 11]);
        let end = Configuration::with_ids(1, vec![1.02, 0.05], vec![10, 11]);
        let ci = segment(start.clone(), end.clone(), false);
        let x = start.observe();
        let y = end.observe();
        let good = match_pair(&x, &y, d, l);
        // an event swaps the identities behind the same picture
        let end_swapped = Configuration::with_ids(1, vec![1.02, 0.05], vec![12, 11]);
        let branched = segment(start.clone(), end_swapped, true);
        let stats =
            classify_against_truth(&[good.clone(), good.clone()], &[ci.clone(), branched], d, l).unwrap();
        assert_eq!(stats.n_pairs, 2);
        assert_eq!(stats.n_ci, 1);
        assert_eq!(stats.n_identifiable, 2);
        assert_eq!(stats.n_identifiable_correct, 1);
        assert_eq!(stats.n_identifiable_wrong, 1);
        assert_eq!(stats.n_nonvoid_not_ci, 1);
        assert_eq!(stats.n_ci_wrong + stats.n_ci_not_identifiable, 0);
        assert!(classify_against_truth(&[good], &[], d, l).is_err());
        let empty = classify_against_truth(&[], &[], d, l).unwrap();
        assert_eq!(empty.n_pairs, 0);
        assert_eq!(empty.p_ci(), 0.0);
        assert_eq!(ReconStats::csv_header().split(',').count(), stats.csv_row(d, l).split(',').count());
    }
}
