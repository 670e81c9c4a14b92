//! Distance kernels: edit distance on semantic sequences with script
//! reconstruction, DTW and discrete Fréchet distance on spatial paths, and
//! within-group similarity statistics.
//!
//! DTW is the textbook sum-accumulation variant with symmetric steps and
//! Euclidean ground distance on positions; no window, no normalization.
//! DFD follows the Eiter–Mannila recurrence. Both are offset-sensitive by
//! default; callers wanting translation invariance subtract each path's
//! first point before calling (the CLI's `--normalize-translation`).

use rayon::prelude::*;
use thiserror::Error;

use crate::geom::Vec3;
use crate::model::SemanticSequence;
use crate::num::{median, sample_sd, Real};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DistanceError {
    #[error("paths must be non-empty")]
    EmptyPath,
    #[error("need at least {needed} items, got {got}")]
    InsufficientGroup { needed: usize, got: usize },
}

// ---------------------------------------------------------------------------
// Edit distance
// ---------------------------------------------------------------------------

/// One alignment operation over token indices of the two sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match { a: usize, b: usize },
    Substitute { a: usize, b: usize },
    /// Token `b` of the second sequence is missing from the first.
    Insert { b: usize },
    /// Token `a` of the first sequence has no counterpart in the second.
    Delete { a: usize },
}

/// An optimal alignment; applying it to the first sequence yields the
/// second, and its cost (non-match operations) equals the edit distance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn cost(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| !matches!(op, EditOp::Match { .. }))
            .count()
    }

    /// Replays the script: transforms `a` into `b`. Returns `None` if the
    /// script is inconsistent with the pair it claims to align.
    pub fn apply(&self, a: &SemanticSequence, b: &SemanticSequence) -> Option<SemanticSequence> {
        let mut out = Vec::new();
        let (mut ai, mut bi) = (0usize, 0usize);
        for op in &self.ops {
            match *op {
                EditOp::Match { a: i, b: j } => {
                    if i != ai || j != bi || a.tokens().get(i) != b.tokens().get(j) {
                        return None;
                    }
                    out.push(a.tokens()[i].clone());
                    ai += 1;
                    bi += 1;
                }
                EditOp::Substitute { a: i, b: j } => {
                    if i != ai || j != bi {
                        return None;
                    }
                    out.push(b.tokens()[j].clone());
                    ai += 1;
                    bi += 1;
                }
                EditOp::Insert { b: j } => {
                    if j != bi {
                        return None;
                    }
                    out.push(b.tokens()[j].clone());
                    bi += 1;
                }
                EditOp::Delete { a: i } => {
                    if i != ai {
                        return None;
                    }
                    ai += 1;
                }
            }
        }
        if ai != a.len() || bi != b.len() {
            return None;
        }
        SemanticSequence::from_tokens(out).ok()
    }
}

/// Minimum number of unit-cost insertions, deletions and substitutions
/// transforming `a` into `b`; tokens are equal iff their action sets are.
pub fn levenshtein(a: &SemanticSequence, b: &SemanticSequence) -> usize {
    levenshtein_with_script(a, b).0
}

/// Edit distance plus one optimal script, with deterministic tie-breaking:
/// match > substitute > delete > insert (applied while backtracking from
/// the final cell).
pub fn levenshtein_with_script(a: &SemanticSequence, b: &SemanticSequence) -> (usize, EditScript) {
    let (n, m) = (a.len(), b.len());
    let at = a.tokens();
    let bt = b.tokens();
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    let mut d = vec![0usize; (n + 1) * (m + 1)];
    for i in 0..=n {
        d[idx(i, 0)] = i;
    }
    for j in 0..=m {
        d[idx(0, j)] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[idx(i - 1, j - 1)] + usize::from(at[i - 1] != bt[j - 1]);
            let del = d[idx(i - 1, j)] + 1;
            let ins = d[idx(i, j - 1)] + 1;
            d[idx(i, j)] = sub.min(del).min(ins);
        }
    }

    let mut ops = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[idx(i, j)];
        if i > 0 && j > 0 && at[i - 1] == bt[j - 1] && here == d[idx(i - 1, j - 1)] {
            ops.push(EditOp::Match { a: i - 1, b: j - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && here == d[idx(i - 1, j - 1)] + 1 {
            ops.push(EditOp::Substitute { a: i - 1, b: j - 1 });
            i -= 1;
            j -= 1;
        } else if i > 0 && here == d[idx(i - 1, j)] + 1 {
            ops.push(EditOp::Delete { a: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Insert { b: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    let script = EditScript { ops };
    debug_assert_eq!(script.cost(), d[idx(n, m)]);
    (d[idx(n, m)], script)
}

/// Edit operations bucketed by what they say about the observed execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditClassification {
    /// Observed tokens with no counterpart in the optimal sequence.
    pub unnecessary: usize,
    /// Optimal tokens absent from the observed sequence.
    pub missing: usize,
    /// Token-for-token mismatches.
    pub wrong: usize,
}

impl EditClassification {
    pub fn total(&self) -> usize {
        self.unnecessary + self.missing + self.wrong
    }
}

/// Buckets a script's operations. With `a_is_observed` the script must come
/// from `levenshtein_with_script(observed, optimal)`; otherwise from
/// `(optimal, observed)` and the roles of insert/delete swap.
pub fn classify_edits(script: &EditScript, a_is_observed: bool) -> EditClassification {
    let mut c = EditClassification::default();
    for op in &script.ops {
        match op {
            EditOp::Match { .. } => {}
            EditOp::Substitute { .. } => c.wrong += 1,
            EditOp::Delete { .. } => {
                if a_is_observed {
                    c.unnecessary += 1;
                } else {
                    c.missing += 1;
                }
            }
            EditOp::Insert { .. } => {
                if a_is_observed {
                    c.missing += 1;
                } else {
                    c.unnecessary += 1;
                }
            }
        }
    }
    c
}

// ---------------------------------------------------------------------------
// Spatial path distances
// ---------------------------------------------------------------------------

/// Dynamic time warping distance:
/// `C[i][j] = |p_i - q_j| + min(C[i-1][j], C[i][j-1], C[i-1][j-1])`.
pub fn dtw<S: Real>(p: &[Vec3<S>], q: &[Vec3<S>]) -> Result<S, DistanceError> {
    if p.is_empty() || q.is_empty() {
        return Err(DistanceError::EmptyPath);
    }
    let m = q.len();
    let mut prev = vec![S::zero(); m];
    let mut curr = vec![S::zero(); m];
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            let cost = pi.distance(*qj);
            let best = match (i, j) {
                (0, 0) => S::zero(),
                (0, _) => curr[j - 1],
                (_, 0) => prev[0],
                _ => prev[j].min(curr[j - 1]).min(prev[j - 1]),
            };
            curr[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Discrete Fréchet distance (Eiter–Mannila):
/// `D[i][j] = max(|p_i - q_j|, min(D[i-1][j], D[i][j-1], D[i-1][j-1]))`.
pub fn dfd<S: Real>(p: &[Vec3<S>], q: &[Vec3<S>]) -> Result<S, DistanceError> {
    if p.is_empty() || q.is_empty() {
        return Err(DistanceError::EmptyPath);
    }
    let m = q.len();
    let mut prev = vec![S::zero(); m];
    let mut curr = vec![S::zero(); m];
    for (i, pi) in p.iter().enumerate() {
        for (j, qj) in q.iter().enumerate() {
            let cost = pi.distance(*qj);
            curr[j] = match (i, j) {
                (0, 0) => cost,
                (0, _) => cost.max(curr[j - 1]),
                (_, 0) => cost.max(prev[0]),
                _ => cost.max(prev[j].min(curr[j - 1]).min(prev[j - 1])),
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m - 1])
}

/// Which spatial metric a pairwise matrix uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathMetric {
    Dtw,
    Dfd,
}

impl PathMetric {
    pub fn compute<S: Real>(self, p: &[Vec3<S>], q: &[Vec3<S>]) -> Result<S, DistanceError> {
        match self {
            PathMetric::Dtw => dtw(p, q),
            PathMetric::Dfd => dfd(p, q),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PathMetric::Dtw => "dtw",
            PathMetric::Dfd => "dfd",
        }
    }
}

/// Keeps every `stride`-th point starting at the first, always keeping the
/// last point.
pub fn decimate<S: Real>(path: &[Vec3<S>], stride: usize) -> Vec<Vec3<S>> {
    assert!(stride >= 1, "stride must be >= 1");
    if path.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<Vec3<S>> = path.iter().copied().step_by(stride).collect();
    if (path.len() - 1) % stride != 0 {
        out.push(path[path.len() - 1]);
    }
    out
}

/// Symmetric all-pairs distance matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<S> {
    labels: Vec<String>,
    values: Vec<S>,
}

impl<S: Real> DistanceMatrix<S> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[i * self.labels.len() + j]
    }
}

/// All pairwise metric values after optional stride decimation. Cells may
/// be evaluated concurrently; the result is identical for any schedule.
pub fn pairwise_matrix<S: Real>(
    paths: &[(String, Vec<Vec3<S>>)],
    metric: PathMetric,
    stride: usize,
    parallel: bool,
) -> Result<DistanceMatrix<S>, DistanceError> {
    let n = paths.len();
    if n < 2 {
        return Err(DistanceError::InsufficientGroup { needed: 2, got: n });
    }
    let decimated: Vec<Vec<Vec3<S>>> = paths.iter().map(|(_, p)| decimate(p, stride)).collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let compute = |&(i, j): &(usize, usize)| metric.compute(&decimated[i], &decimated[j]);
    let results: Vec<Result<S, DistanceError>> = if parallel {
        pairs.par_iter().map(compute).collect()
    } else {
        pairs.iter().map(compute).collect()
    };
    let mut values = vec![S::zero(); n * n];
    for ((i, j), r) in pairs.into_iter().zip(results) {
        let d = r?;
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    Ok(DistanceMatrix {
        labels: paths.iter().map(|(l, _)| l.clone()).collect(),
        values,
    })
}

/// Per-item within-group similarity: the median and sample SD of one item's
/// distances to all other items of the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSimilarity<S> {
    pub label: String,
    pub median_distance_to_others: S,
    pub sd_of_distances_to_others: S,
}

pub fn group_similarity<S: Real>(
    matrix: &DistanceMatrix<S>,
) -> Result<Vec<GroupSimilarity<S>>, DistanceError> {
    let n = matrix.len();
    if n < 2 {
        return Err(DistanceError::InsufficientGroup { needed: 2, got: n });
    }
    Ok((0..n)
        .map(|i| {
            let others: Vec<S> = (0..n).filter(|&j| j != i).map(|j| matrix.get(i, j)).collect();
            GroupSimilarity {
                label: matrix.labels[i].clone(),
                median_distance_to_others: median(&others).unwrap(),
                sd_of_distances_to_others: sample_sd(&others).unwrap(),
            }
        })
        .collect())
}
