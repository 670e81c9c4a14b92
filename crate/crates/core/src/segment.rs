//! Segmentation of raw point streams at action-set transitions.
//!
//! A new subtrajectory begins at the first point whose action set differs
//! from its predecessor's; the transition point belongs to the new run and
//! boundaries are sample-aligned (no interpolation between samples).

use thiserror::Error;

use crate::model::{SemanticPoint, SemanticSequence, Subtrajectory, Trajectory};
use crate::num::Real;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SegmentError {
    #[error("cannot segment an empty point stream")]
    EmptyInput,
    #[error("timestamps must be strictly increasing (violated at input index {0})")]
    NonMonotonicInput(usize),
}

/// Splits `points` into maximal constant-action-set runs and assembles a
/// trajectory. Point and subtrajectory ids are (re)assigned: point ids are
/// 0..n-1 across the trajectory, sub ids 0..k-1 in order.
pub fn segment_trajectory<S: Real>(
    points: Vec<SemanticPoint<S>>,
    object_id: &str,
    goal: &str,
) -> Result<Trajectory<S>, SegmentError> {
    if points.is_empty() {
        return Err(SegmentError::EmptyInput);
    }
    for i in 1..points.len() {
        if !(points[i].t > points[i - 1].t) {
            return Err(SegmentError::NonMonotonicInput(i));
        }
    }

    let mut subs: Vec<Subtrajectory<S>> = Vec::new();
    let mut run: Vec<SemanticPoint<S>> = Vec::new();
    for (idx, mut p) in points.into_iter().enumerate() {
        p.point_id = idx;
        p.sub_id = subs.len();
        if let Some(last) = run.last() {
            if last.actions != p.actions {
                subs.push(close_run(std::mem::take(&mut run), subs.len()));
                p.sub_id = subs.len();
            }
        }
        run.push(p);
    }
    subs.push(close_run(run, subs.len()));

    Ok(Trajectory {
        traj_id: 0,
        object_id: object_id.to_string(),
        subs,
        goal: goal.to_string(),
    })
}

fn close_run<S: Real>(mut points: Vec<SemanticPoint<S>>, sub_id: usize) -> Subtrajectory<S> {
    for p in &mut points {
        p.sub_id = sub_id;
    }
    let t_start = points[0].t;
    let t_end = points[points.len() - 1].t;
    Subtrajectory {
        sub_id,
        traj_id: 0,
        points,
        t_start,
        t_end,
        subgoal: String::new(),
    }
}

/// The pure semantic trajectory: one action set per subtrajectory, in order.
pub fn compress<S: Real>(tr: &Trajectory<S>) -> SemanticSequence {
    // segmentation guarantees no consecutive duplicates
    SemanticSequence::from_tokens(tr.subs.iter().map(|s| s.actions().clone()).collect())
        .expect("adjacent subtrajectories have distinct action sets")
}

/// Maximal closed intervals `(t_start, t_end)` during which `action` is in
/// the point's action set, using subtrajectory boundaries. The query matches
/// by base label unless it carries an `@hand` qualifier. Intervals are
/// disjoint and ordered; a single-sample interval has zero duration but
/// still counts as one occurrence.
pub fn action_intervals<S: Real>(tr: &Trajectory<S>, action: &str) -> Vec<(S, S)> {
    let mut out: Vec<(S, S)> = Vec::new();
    let mut open: Option<(S, S)> = None;
    for sub in &tr.subs {
        if sub.actions().contains_matching(action) {
            open = match open {
                Some((start, _)) => Some((start, sub.t_end)),
                None => Some((sub.t_start, sub.t_end)),
            };
        } else if let Some(iv) = open.take() {
            out.push(iv);
        }
    }
    if let Some(iv) = open {
        out.push(iv);
    }
    out
}

/// All distinct base action labels occurring in a trajectory, sorted.
pub fn base_actions<S: Real>(tr: &Trajectory<S>) -> Vec<String> {
    let mut set = std::collections::BTreeSet::new();
    for sub in &tr.subs {
        for label in sub.actions().iter() {
            set.insert(crate::model::base_label(label).to_string());
        }
    }
    set.into_iter().collect()
}
