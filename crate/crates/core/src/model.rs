//! Domain types shared by the whole pipeline.
//!
//! A recording is an [`Episode`]: per-object [`Trajectory`]s of timestamped,
//! action-annotated points, segmented into maximal constant-action-set runs
//! ([`Subtrajectory`]), plus pointing [`PointingEvent`]s. All types are
//! immutable after construction and safe to share across threads.

use std::collections::BTreeSet;
use std::fmt;

use crate::geom::Vec3;
use crate::num::Real;

/// Tolerance for the unit-quaternion invariant checked by [`validate_episode`].
pub const QUAT_NORM_TOL: f64 = 1e-6;

/// Lowercases ASCII letters; action labels are case-insensitive tokens.
pub fn normalize_label(label: &str) -> String {
    label.to_ascii_lowercase()
}

/// Label without its `@hand` qualifier (`grasp@left` -> `grasp`).
pub fn base_label(label: &str) -> &str {
    label.split('@').next().unwrap_or(label)
}

/// Hand qualifier of a label, if any.
pub fn label_hand(label: &str) -> Option<Hand> {
    match label.split_once('@').map(|(_, h)| h) {
        Some("left") => Some(Hand::Left),
        Some("right") => Some(Hand::Right),
        _ => None,
    }
}

/// True when `label` matches `query`: exact match, or base-label match when
/// the query carries no qualifier (so "grasp" matches "grasp@left").
pub fn label_matches(label: &str, query: &str) -> bool {
    if query.contains('@') {
        label == query
    } else {
        base_label(label) == query
    }
}

/// A set of concurrently active action labels. Set semantics, ordered
/// deterministically for serialization and display.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct ActionSet(BTreeSet<String>);

impl ActionSet {
    pub fn empty() -> Self {
        Self(BTreeSet::new())
    }

    /// Builds a set, normalizing labels to lowercase.
    pub fn from_labels<I, T>(labels: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: AsRef<str>,
    {
        Self(
            labels
                .into_iter()
                .map(|l| normalize_label(l.as_ref()))
                .collect(),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.contains(label)
    }

    /// Membership under [`label_matches`] semantics.
    pub fn contains_matching(&self, query: &str) -> bool {
        self.0.iter().any(|l| label_matches(l, query))
    }

    /// The set with `@hand` qualifiers removed.
    pub fn strip_hand_qualifiers(&self) -> ActionSet {
        Self(self.0.iter().map(|l| base_label(l).to_string()).collect())
    }

    pub fn insert(&mut self, label: &str) {
        self.0.insert(normalize_label(label));
    }

    pub fn remove_matching(&mut self, query: &str) {
        self.0.retain(|l| !label_matches(l, query));
    }
}

impl fmt::Display for ActionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}")
    }
}

/// Unit quaternion (w, x, y, z). Stored and round-tripped; excluded from all
/// distance computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion<S> {
    pub w: S,
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Quaternion<S> {
    pub fn identity() -> Self {
        Self {
            w: S::one(),
            x: S::zero(),
            y: S::zero(),
            z: S::zero(),
        }
    }

    pub fn norm(self) -> S {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Scales to unit norm; a zero or non-finite quaternion yields non-finite
    /// components, which ingestion rejects.
    pub fn normalized(self) -> Self {
        let n = self.norm();
        Self {
            w: self.w / n,
            x: self.x / n,
            y: self.y / n,
            z: self.z / n,
        }
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// Object pose: position in meters plus unit orientation quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<S> {
    pub position: Vec3<S>,
    pub orientation: Quaternion<S>,
}

impl<S: Real> Pose<S> {
    /// Ingestion constructor: normalizes the orientation.
    pub fn new(position: Vec3<S>, orientation: Quaternion<S>) -> Self {
        Self {
            position,
            orientation: orientation.normalized(),
        }
    }

    pub fn at(position: Vec3<S>) -> Self {
        Self {
            position,
            orientation: Quaternion::identity(),
        }
    }
}

/// One sampled observation of one object.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticPoint<S> {
    /// Monotone id within the owning trajectory, assigned by segmentation.
    pub point_id: usize,
    /// Id of the owning subtrajectory, assigned by segmentation.
    pub sub_id: usize,
    pub pose: Pose<S>,
    /// Seconds since recording start.
    pub t: S,
    pub actions: ActionSet,
}

impl<S: Real> SemanticPoint<S> {
    /// A point that has not been through segmentation yet; ids are assigned
    /// by [`crate::segment::segment_trajectory`].
    pub fn unsegmented(pose: Pose<S>, t: S, actions: ActionSet) -> Self {
        Self {
            point_id: 0,
            sub_id: 0,
            pose,
            t,
            actions,
        }
    }
}

/// Maximal run of points sharing one action set.
#[derive(Debug, Clone, PartialEq)]
pub struct Subtrajectory<S> {
    pub sub_id: usize,
    pub traj_id: usize,
    pub points: Vec<SemanticPoint<S>>,
    pub t_start: S,
    pub t_end: S,
    /// Optional free-text subgoal; never computed with.
    pub subgoal: String,
}

impl<S: Real> Subtrajectory<S> {
    /// The action set shared by every point in the run.
    pub fn actions(&self) -> &ActionSet {
        &self.points[0].actions
    }
}

/// Per-object, time-ordered sequence of subtrajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub traj_id: usize,
    pub object_id: String,
    pub subs: Vec<Subtrajectory<S>>,
    /// Overarching goal label; descriptive only.
    pub goal: String,
}

impl<S: Real> Trajectory<S> {
    pub fn points(&self) -> impl Iterator<Item = &SemanticPoint<S>> {
        self.subs.iter().flat_map(|s| s.points.iter())
    }

    pub fn point_count(&self) -> usize {
        self.subs.iter().map(|s| s.points.len()).sum()
    }

    /// Position path of the whole trajectory, in point order.
    pub fn path(&self) -> Vec<Vec3<S>> {
        self.points().map(|p| p.pose.position).collect()
    }
}

/// Which hand performed a pointing interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hand {
    Left,
    Right,
    Unspecified,
}

impl Hand {
    pub fn as_str(self) -> &'static str {
        match self {
            Hand::Left => "left",
            Hand::Right => "right",
            Hand::Unspecified => "unspecified",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "left" => Some(Hand::Left),
            "right" => Some(Hand::Right),
            "unspecified" => Some(Hand::Unspecified),
            _ => None,
        }
    }
}

/// One recorded pointing interaction.
#[derive(Debug, Clone, PartialEq)]
pub struct PointingEvent<S> {
    pub target_id: String,
    /// Where the ray hit, meters.
    pub hit_position: Vec3<S>,
    pub t: S,
    pub hand: Hand,
}

/// One participant's recorded execution of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode<S> {
    pub episode_id: String,
    pub participant_id: String,
    /// Group label for comparisons (the study's input configuration).
    pub condition: String,
    pub task_id: String,
    pub sample_rate_hz: S,
    pub trajectories: std::collections::BTreeMap<String, Trajectory<S>>,
    pub events: Vec<PointingEvent<S>>,
}

impl<S: Real> Episode<S> {
    pub fn trajectory(&self, object_id: &str) -> Option<&Trajectory<S>> {
        self.trajectories.get(object_id)
    }
}

/// Compressed list of action sets: the unit compared by edit distance.
/// Invariant: no two consecutive tokens are equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SemanticSequence {
    tokens: Vec<ActionSet>,
}

impl SemanticSequence {
    /// Builds from tokens that must already satisfy the invariant.
    /// Returns the index of the first offending token on failure.
    pub fn from_tokens(tokens: Vec<ActionSet>) -> Result<Self, usize> {
        for i in 1..tokens.len() {
            if tokens[i] == tokens[i - 1] {
                return Err(i);
            }
        }
        Ok(Self { tokens })
    }

    /// Builds by merging consecutive duplicate tokens.
    pub fn compressing<I: IntoIterator<Item = ActionSet>>(tokens: I) -> Self {
        let mut out: Vec<ActionSet> = Vec::new();
        for t in tokens {
            if out.last() != Some(&t) {
                out.push(t);
            }
        }
        Self { tokens: out }
    }

    pub fn tokens(&self) -> &[ActionSet] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Sequence with `@hand` qualifiers removed, re-merging any consecutive
    /// duplicates the stripping produces. Used before scoring against
    /// templates, which carry unqualified labels.
    pub fn strip_hand_qualifiers(&self) -> SemanticSequence {
        Self::compressing(self.tokens.iter().map(|t| t.strip_hand_qualifiers()))
    }
}

impl fmt::Display for SemanticSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// One broken invariant found by [`validate_episode`]. Violations are data,
/// not failures: a well-formed episode yields an empty list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Dotted path of the offending field, e.g. `trajectories[knife].subs[2].points[5].t`.
    pub field: String,
    /// The rule that was broken.
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

fn violation(field: String, rule: &str) -> Violation {
    Violation {
        field,
        rule: rule.to_string(),
    }
}

/// Checks every type invariant; returns an empty list iff the episode is
/// well-formed. Idempotent and side-effect free.
pub fn validate_episode<S: Real>(ep: &Episode<S>) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(ep.sample_rate_hz > S::zero()) || !ep.sample_rate_hz.is_finite() {
        out.push(violation(
            "sample_rate_hz".into(),
            "sample rate must be finite and > 0",
        ));
    }
    if ep.condition.is_empty() {
        out.push(violation("condition".into(), "condition must be non-empty"));
    }
    for (object_id, tr) in &ep.trajectories {
        let base = format!("trajectories[{object_id}]");
        if tr.object_id != *object_id {
            out.push(violation(
                format!("{base}.object_id"),
                "object id must equal its map key",
            ));
        }
        if tr.subs.is_empty() {
            out.push(violation(
                format!("{base}.subs"),
                "trajectory must contain at least one subtrajectory",
            ));
            continue;
        }
        let mut prev_t: Option<S> = None;
        for (si, sub) in tr.subs.iter().enumerate() {
            let sbase = format!("{base}.subs[{si}]");
            if sub.points.is_empty() {
                out.push(violation(
                    format!("{sbase}.points"),
                    "subtrajectory must contain at least one point",
                ));
                continue;
            }
            if sub.t_start != sub.points[0].t {
                out.push(violation(
                    format!("{sbase}.t_start"),
                    "t_start must equal the first point's timestamp",
                ));
            }
            if sub.t_end != sub.points[sub.points.len() - 1].t {
                out.push(violation(
                    format!("{sbase}.t_end"),
                    "t_end must equal the last point's timestamp",
                ));
            }
            let run_actions = sub.actions().clone();
            for (pi, p) in sub.points.iter().enumerate() {
                let pbase = format!("{sbase}.points[{pi}]");
                if let Some(prev) = prev_t {
                    if !(p.t > prev) {
                        out.push(violation(
                            format!("{pbase}.t"),
                            "non-increasing timestamp",
                        ));
                    }
                }
                prev_t = Some(p.t);
                if !p.t.is_finite() {
                    out.push(violation(
                        format!("{pbase}.t"),
                        "timestamp must be finite",
                    ));
                }
                if !p.pose.position.is_finite() {
                    out.push(violation(
                        format!("{pbase}.pose.position"),
                        "position components must be finite",
                    ));
                }
                if !p.pose.orientation.is_finite() {
                    out.push(violation(
                        format!("{pbase}.pose.orientation"),
                        "orientation components must be finite",
                    ));
                } else {
                    let dev = (p.pose.orientation.norm() - S::one()).abs();
                    if dev > S::of(QUAT_NORM_TOL) {
                        out.push(violation(
                            format!("{pbase}.pose.orientation"),
                            "quaternion norm must be within 1e-6 of 1",
                        ));
                    }
                }
                if p.actions != run_actions {
                    out.push(violation(
                        format!("{pbase}.actions"),
                        "all points of a subtrajectory must share one action set",
                    ));
                }
                for label in p.actions.iter() {
                    if label.is_empty() {
                        out.push(violation(
                            format!("{pbase}.actions"),
                            "action labels must be non-empty",
                        ));
                    } else if label.chars().any(|c| c.is_ascii_uppercase()) {
                        out.push(violation(
                            format!("{pbase}.actions"),
                            "action labels must be lowercase",
                        ));
                    }
                }
            }
            if si > 0 && tr.subs[si - 1].actions() == &run_actions {
                out.push(violation(
                    format!("{sbase}.actions"),
                    "adjacent subtrajectories must have different action sets",
                ));
            }
        }
    }
    for (ei, ev) in ep.events.iter().enumerate() {
        let ebase = format!("events[{ei}]");
        if !ev.hit_position.is_finite() {
            out.push(violation(
                format!("{ebase}.hit_position"),
                "hit position components must be finite",
            ));
        }
        if !ev.t.is_finite() {
            out.push(violation(format!("{ebase}.t"), "timestamp must be finite"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segment::segment_trajectory;

    fn pt(t: f64, actions: &[&str]) -> SemanticPoint<f64> {
        SemanticPoint::unsegmented(
            Pose::at(Vec3::new(t, 0.0, 0.0)),
            t,
            ActionSet::from_labels(actions.iter().copied()),
        )
    }

    fn two_object_episode() -> Episode<f64> {
        let knife = segment_trajectory(
            vec![pt(0.0, &[]), pt(0.05, &["grasp"]), pt(0.10, &["grasp"])],
            "knife",
            "cut",
        )
        .unwrap();
        let plate = segment_trajectory(vec![pt(0.0, &[]), pt(0.05, &[])], "plate", "cut").unwrap();
        let mut trajectories = std::collections::BTreeMap::new();
        trajectories.insert("knife".to_string(), knife);
        trajectories.insert("plate".to_string(), plate);
        Episode {
            episode_id: "e1".into(),
            participant_id: "p1".into(),
            condition: "M".into(),
            task_id: "cutting".into(),
            sample_rate_hz: 20.0,
            trajectories,
            events: vec![],
        }
    }

    #[test]
    fn well_formed_episode_has_no_violations() {
        let ep = two_object_episode();
        assert_eq!(validate_episode(&ep), vec![]);
    }

    #[test]
    fn repeated_timestamp_is_flagged() {
        let mut ep = two_object_episode();
        let tr = ep.trajectories.get_mut("plate").unwrap();
        tr.subs[0].points[1].t = 0.0; // same as the first point
        tr.subs[0].t_end = 0.0;
        let vs = validate_episode(&ep);
        assert_eq!(
            vs.iter()
                .filter(|v| v.rule == "non-increasing timestamp")
                .count(),
            1
        );
    }

    #[test]
    fn oversized_quaternion_normalizes_cleanly() {
        let q = Quaternion {
            w: 2.0f64,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        };
        let p = Pose::new(Vec3::zero(), q);
        assert_eq!(p.orientation, Quaternion::identity());
        let mut ep = two_object_episode();
        for sub in &mut ep.trajectories.get_mut("knife").unwrap().subs {
            for point in &mut sub.points {
                point.pose = Pose::new(point.pose.position, q);
            }
        }
        assert_eq!(validate_episode(&ep), vec![]);
    }

    #[test]
    fn validate_is_idempotent() {
        let mut ep = two_object_episode();
        ep.trajectories.get_mut("knife").unwrap().subs[0].t_start = 99.0;
        let first = validate_episode(&ep);
        let second = validate_episode(&ep);
        assert!(!first.is_empty());
        assert_eq!(first, second);
    }

    #[test]
    fn label_helpers() {
        assert_eq!(normalize_label("Grasp"), "grasp");
        assert_eq!(base_label("grasp@left"), "grasp");
        assert_eq!(label_hand("grasp@right"), Some(Hand::Right));
        assert_eq!(label_hand("grasp"), None);
        assert!(label_matches("grasp@left", "grasp"));
        assert!(!label_matches("grasp@left", "grasp@right"));
        assert!(label_matches("grasp", "grasp"));
    }

    #[test]
    fn sequence_invariant_and_stripping() {
        let a = ActionSet::from_labels(["grasp"]);
        let b = ActionSet::from_labels(["grasp", "cut"]);
        assert!(SemanticSequence::from_tokens(vec![a.clone(), a.clone()]).is_err());
        let seq = SemanticSequence::compressing(vec![a.clone(), a.clone(), b.clone()]);
        assert_eq!(seq.len(), 2);

        let ql = ActionSet::from_labels(["grasp@left"]);
        let qr = ActionSet::from_labels(["grasp@right"]);
        let seq = SemanticSequence::from_tokens(vec![ql, qr]).unwrap();
        let stripped = seq.strip_hand_qualifiers();
        assert_eq!(stripped.len(), 1);
        assert_eq!(stripped.tokens()[0], ActionSet::from_labels(["grasp"]));
    }
}
