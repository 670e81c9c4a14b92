//! Per-episode behavioral metrics: task/idle time, action counts and
//! durations, hand balance, pointing precision.
//!
//! Task time runs from the first action start to the last action end over
//! all objects, so reading time before the first interaction never counts.
//! Idle time is the part of the task span covered by no action interval of
//! any object. Multi-grasp object times sum the individual interval
//! lengths; mid-release gaps are excluded.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ingest::TaskTemplate;
use crate::model::Episode;
use crate::num::{mean, population_sd, Real};
use crate::segment::{action_intervals, base_actions};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("episode contains no action occurrences")]
    NoActions,
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("unknown pointing target '{0}'")]
    UnknownTarget(String),
    #[error("condition '{0}' has no pointing events")]
    EmptyGroup(String),
}

/// Maximal intervals during which any action is active on any object,
/// merged into a disjoint, ordered union.
fn active_union<S: Real>(ep: &Episode<S>) -> Vec<(S, S)> {
    let mut ivs: Vec<(S, S)> = Vec::new();
    for tr in ep.trajectories.values() {
        let mut open: Option<(S, S)> = None;
        for sub in &tr.subs {
            if !sub.actions().is_empty() {
                open = match open {
                    Some((s, _)) => Some((s, sub.t_end)),
                    None => Some((sub.t_start, sub.t_end)),
                };
            } else if let Some(iv) = open.take() {
                ivs.push(iv);
            }
        }
        if let Some(iv) = open {
            ivs.push(iv);
        }
    }
    ivs.sort_by(|a, b| a.partial_cmp(b).expect("finite timestamps"));
    let mut merged: Vec<(S, S)> = Vec::new();
    for (s, e) in ivs {
        match merged.last_mut() {
            Some((_, le)) if s <= *le => {
                if e > *le {
                    *le = e;
                }
            }
            _ => merged.push((s, e)),
        }
    }
    merged
}

/// Seconds from the first action start to the last action end.
pub fn task_time<S: Real>(ep: &Episode<S>) -> Result<S, MetricsError> {
    let union = active_union(ep);
    match (union.first(), union.last()) {
        (Some(&(start, _)), Some(&(_, end))) => Ok(end - start),
        _ => Err(MetricsError::NoActions),
    }
}

/// Task time minus the measure of the union of all action intervals.
pub fn idle_time<S: Real>(ep: &Episode<S>) -> Result<S, MetricsError> {
    let union = active_union(ep);
    if union.is_empty() {
        return Err(MetricsError::NoActions);
    }
    let span = union.last().unwrap().1 - union.first().unwrap().0;
    let covered: S = union.iter().map(|&(s, e)| e - s).sum();
    Ok((span - covered).max(S::zero()))
}

/// Number of maximal `action` intervals on one object, or summed over all
/// objects when `object_id` is `None`. The query matches by base label
/// unless it carries an `@hand` qualifier.
pub fn action_count<S: Real>(
    ep: &Episode<S>,
    object_id: Option<&str>,
    action: &str,
) -> Result<usize, MetricsError> {
    match object_id {
        Some(id) => {
            let tr = ep
                .trajectory(id)
                .ok_or_else(|| MetricsError::UnknownObject(id.to_string()))?;
            Ok(action_intervals(tr, action).len())
        }
        None => Ok(ep
            .trajectories
            .values()
            .map(|tr| action_intervals(tr, action).len())
            .sum()),
    }
}

/// Summed lengths of one object's maximal intervals for `action`.
pub fn object_action_time<S: Real>(
    ep: &Episode<S>,
    object_id: &str,
    action: &str,
) -> Result<S, MetricsError> {
    let tr = ep
        .trajectory(object_id)
        .ok_or_else(|| MetricsError::UnknownObject(object_id.to_string()))?;
    Ok(action_intervals(tr, action)
        .iter()
        .map(|&(s, e)| e - s)
        .sum())
}

/// min(nL, nR) / max(nL, nR) over per-hand grasp occurrences; `None` when
/// no grasp carries a hand qualifier, 0 when exactly one hand was used.
pub fn hand_balance<S: Real>(ep: &Episode<S>) -> Option<S> {
    let mut left = 0usize;
    let mut right = 0usize;
    for tr in ep.trajectories.values() {
        left += action_intervals(tr, "grasp@left").len();
        right += action_intervals(tr, "grasp@right").len();
    }
    if left + right == 0 {
        return None;
    }
    let (lo, hi) = (left.min(right), left.max(right));
    if lo == 0 {
        Some(S::zero())
    } else {
        Some(S::of_usize(lo) / S::of_usize(hi))
    }
}

/// Euclidean distance from each pointing event's hit to its target center,
/// in event order, meters.
pub fn pointing_precision<S: Real>(
    ep: &Episode<S>,
    tmpl: &TaskTemplate<S>,
) -> Result<Vec<(String, S)>, MetricsError> {
    ep.events
        .iter()
        .map(|ev| {
            let center = tmpl
                .targets
                .get(&ev.target_id)
                .ok_or_else(|| MetricsError::UnknownTarget(ev.target_id.clone()))?;
            Ok((ev.target_id.clone(), center.distance(ev.hit_position)))
        })
        .collect()
}

/// Pooled mean and population SD of pointing distances per condition, over
/// all events of that condition's episodes.
pub fn group_precision_stats<S: Real>(
    episodes: &[Episode<S>],
    tmpl: &TaskTemplate<S>,
) -> Result<BTreeMap<String, (S, S)>, MetricsError> {
    let mut pooled: BTreeMap<String, Vec<S>> = BTreeMap::new();
    for ep in episodes {
        let entry = pooled.entry(ep.condition.clone()).or_default();
        for (_, d) in pointing_precision(ep, tmpl)? {
            entry.push(d);
        }
    }
    let mut out = BTreeMap::new();
    for (condition, ds) in pooled {
        if ds.is_empty() {
            return Err(MetricsError::EmptyGroup(condition));
        }
        out.insert(
            condition,
            (mean(&ds).unwrap(), population_sd(&ds).unwrap()),
        );
    }
    Ok(out)
}

/// The full per-episode metric set.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics<S> {
    pub task_time: S,
    pub idle_time: S,
    pub grasp_count: usize,
    /// Seconds of activity per (object, base action).
    pub per_object_action_time: BTreeMap<(String, String), S>,
    /// Interval count per (object, base action).
    pub per_object_action_count: BTreeMap<(String, String), usize>,
    pub hand_balance: Option<S>,
    /// (target, meters) per event; empty without a template or events.
    pub pointing_distances: Vec<(String, S)>,
}

impl<S: Real> EpisodeMetrics<S> {
    pub fn compute(ep: &Episode<S>, tmpl: Option<&TaskTemplate<S>>) -> Result<Self, MetricsError> {
        let task = task_time(ep)?;
        let idle = idle_time(ep)?;
        let mut times = BTreeMap::new();
        let mut counts = BTreeMap::new();
        for (object_id, tr) in &ep.trajectories {
            for action in base_actions(tr) {
                let ivs = action_intervals(tr, &action);
                let key = (object_id.clone(), action);
                counts.insert(key.clone(), ivs.len());
                times.insert(key, ivs.iter().map(|&(s, e)| e - s).sum());
            }
        }
        let pointing_distances = match tmpl {
            Some(t) if !ep.events.is_empty() => pointing_precision(ep, t)?,
            _ => Vec::new(),
        };
        Ok(Self {
            task_time: task,
            idle_time: idle,
            grasp_count: action_count(ep, None, "grasp")?,
            per_object_action_time: times,
            per_object_action_count: counts,
            hand_balance: hand_balance(ep),
            pointing_distances,
        })
    }

    /// Mean and population SD of this episode's pointing distances.
    pub fn pointing_summary(&self) -> Option<(S, S)> {
        let ds: Vec<S> = self.pointing_distances.iter().map(|&(_, d)| d).collect();
        Some((mean(&ds)?, population_sd(&ds)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::ingest::build_episode;
    use crate::model::{ActionSet, Hand, PointingEvent, Pose, SemanticPoint};

    fn pt(t: f64, actions: &[&str]) -> SemanticPoint<f64> {
        SemanticPoint::unsegmented(
            Pose::at(Vec3::zero()),
            t,
            ActionSet::from_labels(actions.iter().copied()),
        )
    }

    /// Episode with one object per (name, action, [interval]) spec; samples
    /// sit exactly on interval endpoints plus leading/trailing idle samples.
    fn episode(objects: &[(&str, &str, &[(f64, f64)])]) -> Episode<f64> {
        let by_object = objects
            .iter()
            .map(|(name, action, intervals)| {
                let mut pts = Vec::new();
                let mut t = -1.0;
                let mut push = |tt: f64, acts: &[&str]| {
                    pts.push(pt(tt, acts));
                };
                for &(s, e) in intervals.iter() {
                    // idle sample before the run (strictly before s)
                    push((t + s) / 2.0, &[]);
                    push(s, &[action]);
                    if e > s {
                        push(e, &[action]);
                    }
                    t = e + 0.25;
                    push(t, &[]);
                }
                (name.to_string(), pts)
            })
            .collect();
        build_episode(
            "e".into(),
            "p".into(),
            "M".into(),
            "t".into(),
            20.0,
            by_object,
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn task_time_single_interval() {
        let ep = episode(&[("knife", "grasp", &[(1.0, 8.0)])]);
        assert_eq!(task_time(&ep).unwrap(), 7.0);
    }

    #[test]
    fn task_time_spans_objects() {
        let ep = episode(&[
            ("knife", "grasp", &[(0.0, 5.0)]),
            ("plate", "grasp", &[(3.0, 9.0)]),
        ]);
        assert_eq!(task_time(&ep).unwrap(), 9.0);
    }

    #[test]
    fn no_actions_is_an_error() {
        let ep = build_episode::<f64>(
            "e".into(),
            "p".into(),
            "M".into(),
            "t".into(),
            20.0,
            vec![("a".into(), vec![pt(0.0, &[]), pt(1.0, &[])])],
            vec![],
        )
        .unwrap();
        assert_eq!(task_time(&ep).unwrap_err(), MetricsError::NoActions);
        assert_eq!(idle_time(&ep).unwrap_err(), MetricsError::NoActions);
    }

    #[test]
    fn idle_time_cases() {
        // continuous grasp: idle 0
        let ep = episode(&[("sponge", "grasp", &[(0.0, 16.0)])]);
        assert_eq!(idle_time(&ep).unwrap(), 0.0);
        // gap between [0,2] and [5,7]: idle 3
        let ep = episode(&[("a", "grasp", &[(0.0, 2.0), (5.0, 7.0)])]);
        assert_eq!(idle_time(&ep).unwrap(), 3.0);
        // overlapping intervals on different objects: union covers [0,6]
        let ep = episode(&[("a", "grasp", &[(0.0, 4.0)]), ("b", "grasp", &[(2.0, 6.0)])]);
        assert_eq!(idle_time(&ep).unwrap(), 0.0);
        assert_eq!(task_time(&ep).unwrap(), 6.0);
    }

    #[test]
    fn conservation_identity() {
        let ep = episode(&[
            ("a", "grasp", &[(0.0, 2.0), (5.0, 7.0)]),
            ("b", "clean", &[(1.5, 3.0)]),
        ]);
        let union = active_union(&ep);
        let covered: f64 = union.iter().map(|(s, e)| e - s).sum();
        assert!((idle_time(&ep).unwrap() + covered - task_time(&ep).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn counts() {
        let ep = episode(&[("knife", "grasp", &[(0.0, 1.0), (2.0, 3.0)])]);
        assert_eq!(action_count(&ep, Some("knife"), "grasp").unwrap(), 2);
        assert_eq!(action_count(&ep, None, "grasp").unwrap(), 2);
        assert_eq!(action_count(&ep, Some("knife"), "cut").unwrap(), 0);
        assert_eq!(
            action_count(&ep, Some("fork"), "grasp").unwrap_err(),
            MetricsError::UnknownObject("fork".into())
        );
    }

    #[test]
    fn object_action_times() {
        let ep = episode(&[("knife", "grasp", &[(1.0, 6.5)])]);
        assert!((object_action_time(&ep, "knife", "grasp").unwrap() - 5.5).abs() < 1e-12);
        let ep = episode(&[("knife", "grasp", &[(0.0, 2.0), (3.0, 6.0)])]);
        assert!((object_action_time(&ep, "knife", "grasp").unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let ep0 = episode(&[("a", "grasp", &[(0.0, 2.0), (5.0, 7.0)])]);
        let ep1 = episode(&[("a", "grasp", &[(10.0, 12.0), (15.0, 17.0)])]);
        assert_eq!(
            action_count(&ep0, None, "grasp").unwrap(),
            action_count(&ep1, None, "grasp").unwrap()
        );
        assert!(
            (object_action_time(&ep0, "a", "grasp").unwrap()
                - object_action_time(&ep1, "a", "grasp").unwrap())
            .abs()
                < 1e-12
        );
    }

    fn hand_episode(left: usize, right: usize) -> Episode<f64> {
        let mut pts = Vec::new();
        let mut t = 0.0;
        for i in 0..(left + right) {
            let hand = if i < left { "grasp@left" } else { "grasp@right" };
            pts.push(pt(t, &[hand]));
            pts.push(pt(t + 0.4, &[hand]));
            pts.push(pt(t + 0.6, &[]));
            t += 1.0;
        }
        if pts.is_empty() {
            pts.push(pt(0.0, &[]));
        }
        build_episode(
            "e".into(),
            "p".into(),
            "M".into(),
            "t".into(),
            20.0,
            vec![("obj".into(), pts)],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn hand_balance_cases() {
        assert_eq!(hand_balance(&hand_episode(3, 3)), Some(1.0));
        assert_eq!(hand_balance(&hand_episode(5, 0)), Some(0.0));
        assert_eq!(hand_balance(&hand_episode(2, 4)), Some(0.5));
        assert_eq!(hand_balance(&hand_episode(4, 2)), Some(0.5));
        assert_eq!(hand_balance::<f64>(&hand_episode(0, 0)), None);
    }

    fn pointing_episode(hits: &[(f64, f64, f64)]) -> (Episode<f64>, TaskTemplate<f64>) {
        let events = hits
            .iter()
            .enumerate()
            .map(|(i, &(x, y, z))| PointingEvent {
                target_id: "c".into(),
                hit_position: Vec3::new(x, y, z),
                t: i as f64,
                hand: Hand::Unspecified,
            })
            .collect();
        let ep = build_episode(
            "e".into(),
            "p".into(),
            "M".into(),
            "pointing".into(),
            20.0,
            vec![("pointer".into(), vec![pt(0.0, &["point"]), pt(1.0, &["point"])])],
            events,
        )
        .unwrap();
        let mut targets = BTreeMap::new();
        targets.insert("c".to_string(), Vec3::zero());
        let tmpl = TaskTemplate {
            task_id: "pointing".into(),
            optimal: BTreeMap::new(),
            focus_actions: BTreeMap::new(),
            rules: vec![],
            required_objects: vec![],
            targets,
        };
        (ep, tmpl)
    }

    #[test]
    fn pointing_three_four_five() {
        let (ep, tmpl) = pointing_episode(&[(0.03, 0.04, 0.0), (0.0, 0.0, 0.0)]);
        let ds = pointing_precision(&ep, &tmpl).unwrap();
        assert!((ds[0].1 - 0.05).abs() < 1e-15);
        assert_eq!(ds[1].1, 0.0);
    }

    #[test]
    fn pointing_mean_of_six() {
        let hits: Vec<(f64, f64, f64)> = [4.0, 5.0, 6.0, 7.0, 8.0, 9.0]
            .iter()
            .map(|&cm| (cm / 100.0, 0.0, 0.0))
            .collect();
        let (ep, tmpl) = pointing_episode(&hits);
        let m = EpisodeMetrics::compute(&ep, Some(&tmpl)).unwrap();
        let (mean, _) = m.pointing_summary().unwrap();
        assert!((mean - 0.065).abs() < 1e-12);
    }

    #[test]
    fn unknown_target_rejected() {
        let (mut ep, tmpl) = pointing_episode(&[(0.0, 0.0, 0.0)]);
        ep.events[0].target_id = "nope".into();
        assert_eq!(
            pointing_precision(&ep, &tmpl).unwrap_err(),
            MetricsError::UnknownTarget("nope".into())
        );
    }

    #[test]
    fn group_stats_pooled_population_sd() {
        let (mut e1, tmpl) = pointing_episode(&[(0.03, 0.0, 0.0)]);
        let (mut e2, _) = pointing_episode(&[(0.05, 0.0, 0.0)]);
        e1.condition = "M".into();
        e2.condition = "M".into();
        let stats = group_precision_stats(&[e1, e2], &tmpl).unwrap();
        let (mean, sd) = stats["M"];
        assert!((mean - 0.04).abs() < 1e-12);
        assert!((sd - 0.01).abs() < 1e-12);
    }

    #[test]
    fn empty_group_rejected() {
        let (mut e1, tmpl) = pointing_episode(&[(0.03, 0.0, 0.0)]);
        e1.events.clear();
        assert_eq!(
            group_precision_stats(std::slice::from_ref(&e1), &tmpl).unwrap_err(),
            MetricsError::EmptyGroup("M".into())
        );
    }
}
