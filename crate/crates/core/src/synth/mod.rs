//! Synthetic episode generation with controllable behavior profiles.
//!
//! A [`TaskScript`] is the noise-free plan: per-object phase schedules
//! (action set, duration, waypoint path) plus an optional pointing layout.
//! A [`BehaviorProfile`] perturbs the plan: path noise, regrasp and
//! extra-action injections, idle gaps, hand usage and pointing error. With
//! all perturbations at zero, the generated episode compresses exactly to
//! the script's template sequences.
//!
//! Paths are piecewise-linear waypoint interpolation with additive
//! per-sample Gaussian noise, smoothed by a 3-sample moving average. In
//! multi-object scripts the objects act sequentially, separated by
//! `idle_gap_s`; every object is sampled over the whole episode and rests
//! at its endpoints outside its active window. Object phase lists should
//! begin and end with an empty action set so the resting pre/post-roll
//! merges into them.
//!
//! Everything is driven by [`rng::SplitMix64`] streams derived from the
//! profile seed, so episodes are bit-reproducible and independent of
//! generation order.

pub mod rng;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec3;
use crate::ingest::{build_episode, ActionRule, Comparator, TaskTemplate};
use crate::model::{
    base_label, normalize_label, ActionSet, Episode, Hand, PointingEvent, Pose, SemanticPoint,
    SemanticSequence,
};
use crate::num::Real;
use rng::{derive_seed, SplitMix64};

/// Label injected into marked empty phases by `extra_action_probability`.
pub const EXTRA_ACTION_LABEL: &str = "touch";

/// Seconds of released grasp injected at a regrasp site.
const REGRASP_GAP_S: f64 = 0.25;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid script: {0}")]
    InvalidScript(String),
    #[error("groups need at least 2 episodes, got {0}")]
    GroupTooSmall(usize),
}

/// Behavior knobs for one generated episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorProfile {
    pub seed: u64,
    /// Per-coordinate SD of the additive path noise, meters.
    pub path_noise_sd: f64,
    /// Chance that a marked grasp phase gets a brief release injected.
    pub regrasp_probability: f64,
    /// Chance that a marked empty phase gets a spurious action injected.
    pub extra_action_probability: f64,
    /// Pause inserted between consecutive objects' schedules, seconds.
    pub idle_gap_s: f64,
    /// Probability that a grasp run is right-handed (objects that opt in).
    pub hand_bias: f64,
    /// Per-coordinate SD of the per-event pointing jitter, meters.
    pub pointing_error_sd: f64,
    /// Mean magnitude of the per-participant systematic aim offset, meters.
    pub aim_bias_m: f64,
    /// Participant-to-participant SD of the aim offset magnitude, meters.
    pub aim_bias_sd_m: f64,
    pub sample_rate_hz: f64,
}

impl Default for BehaviorProfile {
    fn default() -> Self {
        Self {
            seed: 0,
            path_noise_sd: 0.0,
            regrasp_probability: 0.0,
            extra_action_probability: 0.0,
            idle_gap_s: 0.0,
            hand_bias: 0.5,
            pointing_error_sd: 0.0,
            aim_bias_m: 0.0,
            aim_bias_sd_m: 0.0,
            sample_rate_hz: 20.0,
        }
    }
}

impl BehaviorProfile {
    pub fn validate(&self) -> Result<(), SynthError> {
        let prob = |name: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) {
                return Err(SynthError::InvalidProfile(format!(
                    "{name} must be in [0,1], got {v}"
                )));
            }
            Ok(())
        };
        prob("regrasp_probability", self.regrasp_probability)?;
        prob("extra_action_probability", self.extra_action_probability)?;
        prob("hand_bias", self.hand_bias)?;
        let nonneg = |name: &str, v: f64| {
            if !v.is_finite() || v < 0.0 {
                return Err(SynthError::InvalidProfile(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
            Ok(())
        };
        nonneg("path_noise_sd", self.path_noise_sd)?;
        nonneg("idle_gap_s", self.idle_gap_s)?;
        nonneg("pointing_error_sd", self.pointing_error_sd)?;
        nonneg("aim_bias_m", self.aim_bias_m)?;
        nonneg("aim_bias_sd_m", self.aim_bias_sd_m)?;
        if !(self.sample_rate_hz > 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(SynthError::InvalidProfile(
                "sample_rate_hz must be finite and > 0".into(),
            ));
        }
        Ok(())
    }

    /// Configures the pointing model so pooled event distances target the
    /// given mean and SD (meters), with `participant_sd_m` of the spread
    /// attributed to between-participant aim differences. The 1.1 jitter
    /// inflation compensates the radial concentration of 3D noise norms
    /// (calibrated against simulation).
    pub fn with_pointing_target(mut self, mean_m: f64, sd_m: f64, participant_sd_m: f64) -> Self {
        let jitter = 1.1 * (sd_m * sd_m - participant_sd_m * participant_sd_m).max(0.0).sqrt();
        self.pointing_error_sd = jitter;
        self.aim_bias_m = (mean_m - jitter * jitter / mean_m).max(0.0);
        self.aim_bias_sd_m = participant_sd_m;
        self
    }
}

/// One schedule entry: an action set held for a duration while the object
/// moves along `waypoints`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub actions: Vec<String>,
    pub duration_s: f64,
    pub waypoints: Vec<[f64; 3]>,
    /// Candidate for a regrasp injection (must contain a grasp).
    #[serde(default)]
    pub regrasp_site: bool,
    /// Candidate for an extra-action injection (must be empty).
    #[serde(default)]
    pub extra_action_site: bool,
}

impl Phase {
    fn new(actions: &[&str], duration_s: f64, waypoints: &[[f64; 3]]) -> Self {
        Self {
            actions: actions.iter().map(|s| s.to_string()).collect(),
            duration_s,
            waypoints: waypoints.to_vec(),
            regrasp_site: false,
            extra_action_site: false,
        }
    }

    fn action_set(&self) -> ActionSet {
        ActionSet::from_labels(self.actions.iter())
    }
}

/// Per-object schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectScript {
    pub object_id: String,
    pub phases: Vec<Phase>,
    /// Grasp runs get an `@left`/`@right` qualifier drawn with `hand_bias`.
    #[serde(default)]
    pub attribute_hands: bool,
    /// Action whose segments are the subtask of interest for distances.
    #[serde(default)]
    pub focus_action: Option<String>,
}

/// Pointing layout: targets plus the cadence of aims.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointingScript {
    pub targets: BTreeMap<String, [f64; 3]>,
    /// Seconds per aim cycle (one event per target, sorted by target id).
    pub aim_time_s: f64,
}

/// The noise-free plan an episode is generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskScript {
    pub format_version: u32,
    pub task_id: String,
    pub objects: Vec<ObjectScript>,
    #[serde(default)]
    pub pointing: Option<PointingScript>,
}

impl TaskScript {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.format_version != crate::ingest::FORMAT_VERSION {
            return Err(SynthError::InvalidScript(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        if self.objects.is_empty() && self.pointing.is_none() {
            return Err(SynthError::InvalidScript(
                "script needs objects or a pointing layout".into(),
            ));
        }
        for obj in &self.objects {
            if obj.phases.is_empty() {
                return Err(SynthError::InvalidScript(format!(
                    "object '{}' has no phases",
                    obj.object_id
                )));
            }
            for (i, ph) in obj.phases.iter().enumerate() {
                if !(ph.duration_s > 0.0) {
                    return Err(SynthError::InvalidScript(format!(
                        "object '{}' phase {i}: duration must be > 0",
                        obj.object_id
                    )));
                }
                if ph.waypoints.is_empty() {
                    return Err(SynthError::InvalidScript(format!(
                        "object '{}' phase {i}: needs at least one waypoint",
                        obj.object_id
                    )));
                }
                let set = ph.action_set();
                if ph.regrasp_site && !set.contains_matching("grasp") {
                    return Err(SynthError::InvalidScript(format!(
                        "object '{}' phase {i}: regrasp site must contain a grasp",
                        obj.object_id
                    )));
                }
                if ph.extra_action_site && !set.is_empty() {
                    return Err(SynthError::InvalidScript(format!(
                        "object '{}' phase {i}: extra-action site must be empty",
                        obj.object_id
                    )));
                }
            }
        }
        if let Some(p) = &self.pointing {
            if p.targets.is_empty() {
                return Err(SynthError::InvalidScript("pointing needs targets".into()));
            }
            if !(p.aim_time_s > 0.0) {
                return Err(SynthError::InvalidScript("aim_time_s must be > 0".into()));
            }
        }
        Ok(())
    }

    /// Parses a TOML script.
    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let script: TaskScript =
            toml::from_str(text).map_err(|e| SynthError::InvalidScript(e.to_string()))?;
        script.validate()?;
        Ok(script)
    }

    /// The task template a perfect execution of this script satisfies.
    pub fn template<S: Real>(&self) -> TaskTemplate<S> {
        let mut optimal = BTreeMap::new();
        let mut focus_actions = BTreeMap::new();
        let mut rules = Vec::new();
        let mut required_objects = Vec::new();
        for obj in &self.objects {
            let seq = SemanticSequence::compressing(obj.phases.iter().map(|p| p.action_set()));
            // equality rules from the nominal run counts per base action
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            let tokens = seq.tokens();
            for (i, tok) in tokens.iter().enumerate() {
                for label in tok.iter() {
                    let base = base_label(label).to_string();
                    let was_active = i > 0 && tokens[i - 1].contains_matching(&base);
                    if !was_active {
                        *counts.entry(base).or_insert(0) += 1;
                    }
                }
            }
            for (action, count) in counts {
                rules.push(ActionRule {
                    object_id: obj.object_id.clone(),
                    action,
                    comparator: Comparator::Eq,
                    count,
                });
            }
            optimal.insert(obj.object_id.clone(), seq);
            if let Some(f) = &obj.focus_action {
                focus_actions.insert(obj.object_id.clone(), normalize_label(f));
            }
            required_objects.push(obj.object_id.clone());
        }
        let mut targets = BTreeMap::new();
        if let Some(p) = &self.pointing {
            for (id, &[x, y, z]) in &p.targets {
                targets.insert(id.clone(), Vec3::new(S::of(x), S::of(y), S::of(z)));
            }
        }
        TaskTemplate {
            task_id: self.task_id.clone(),
            optimal,
            focus_actions,
            rules,
            required_objects,
            targets,
        }
    }

    /// Built-in script by name: cutting, cleaning, table_setup, pointing.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "cutting" => Some(Self::cutting()),
            "cleaning" => Some(Self::cleaning()),
            "table_setup" => Some(Self::table_setup()),
            "pointing" => Some(Self::pointing()),
            _ => None,
        }
    }

    /// Grasp a knife, cut three times, put it back.
    pub fn cutting() -> Self {
        let rest = [0.50, 0.00, 0.80];
        let above = |x: f64| [x, 0.30, 0.95];
        let down = |x: f64| [x, 0.30, 0.78];
        let mut approach = Phase::new(&["grasp"], 1.5, &[rest, above(0.0)]);
        approach.regrasp_site = true;
        let mut tail = Phase::new(&[], 1.0, &[rest]);
        tail.extra_action_site = true;
        Self {
            format_version: 1,
            task_id: "cutting".into(),
            objects: vec![ObjectScript {
                object_id: "knife".into(),
                phases: vec![
                    Phase::new(&[], 1.0, &[rest]),
                    approach,
                    Phase::new(&["grasp", "cut"], 0.8, &[above(0.0), down(0.0)]),
                    Phase::new(&["grasp"], 0.4, &[down(0.0), above(0.02)]),
                    Phase::new(&["grasp", "cut"], 0.8, &[above(0.02), down(0.02)]),
                    Phase::new(&["grasp"], 0.4, &[down(0.02), above(0.04)]),
                    Phase::new(&["grasp", "cut"], 0.8, &[above(0.04), down(0.04)]),
                    Phase::new(&["grasp"], 1.0, &[down(0.04), rest]),
                    tail,
                ],
                attribute_hands: false,
                focus_action: Some("cut".into()),
            }],
            pointing: None,
        }
    }

    /// Grasp a sponge, wipe the surface in one sweep, put it back.
    pub fn cleaning() -> Self {
        let rest = [0.60, -0.20, 0.80];
        let mut approach = Phase::new(&["grasp"], 1.2, &[rest, [0.30, -0.40, 0.82]]);
        approach.regrasp_site = true;
        Self {
            format_version: 1,
            task_id: "cleaning".into(),
            objects: vec![ObjectScript {
                object_id: "sponge".into(),
                phases: vec![
                    Phase::new(&[], 0.8, &[rest]),
                    approach,
                    Phase::new(
                        &["grasp", "clean"],
                        3.0,
                        &[
                            [0.30, -0.40, 0.82],
                            [0.45, -0.40, 0.82],
                            [0.30, -0.35, 0.82],
                            [0.45, -0.35, 0.82],
                            [0.30, -0.30, 0.82],
                        ],
                    ),
                    Phase::new(&["grasp"], 1.0, &[[0.30, -0.30, 0.82], rest]),
                    Phase::new(&[], 0.6, &[rest]),
                ],
                attribute_hands: false,
                focus_action: Some("clean".into()),
            }],
            pointing: None,
        }
    }

    /// Sequential pick-and-place of knife, fork and plate with hand
    /// attribution (the knife's 9.4 s grasp mirrors the scale of real
    /// table-setup recordings).
    pub fn table_setup() -> Self {
        let carry = |id: &str, dur: f64, from: [f64; 3], to: [f64; 3]| {
            let mut grasp = Phase::new(&["grasp"], dur, &[from, to]);
            grasp.regrasp_site = true;
            ObjectScript {
                object_id: id.into(),
                phases: vec![
                    Phase::new(&[], 0.5, &[from]),
                    grasp,
                    Phase::new(&[], 0.5, &[to]),
                ],
                attribute_hands: true,
                focus_action: None,
            }
        };
        Self {
            format_version: 1,
            task_id: "table_setup".into(),
            objects: vec![
                carry("knife", 9.4, [0.20, -0.50, 0.75], [-0.30, 0.40, 0.76]),
                carry("fork", 4.0, [0.25, -0.50, 0.75], [-0.35, 0.40, 0.76]),
                carry("plate", 3.5, [0.10, -0.55, 0.74], [-0.32, 0.30, 0.76]),
            ],
            pointing: None,
        }
    }

    /// Six aims at wall targets; one pointing event per target.
    pub fn pointing() -> Self {
        let rest = [0.0, 0.5, 1.2];
        let mut targets = BTreeMap::new();
        let layout = [
            ("t1", [-0.5, 2.0, 1.2]),
            ("t2", [0.0, 2.0, 1.2]),
            ("t3", [0.5, 2.0, 1.2]),
            ("t4", [-0.5, 2.0, 1.6]),
            ("t5", [0.0, 2.0, 1.6]),
            ("t6", [0.5, 2.0, 1.6]),
        ];
        let mut phases = vec![Phase::new(&[], 0.5, &[rest])];
        for (_, pos) in layout {
            let toward = [pos[0] * 0.3, 0.8, 1.2 + (pos[2] - 1.2) * 0.3];
            phases.push(Phase::new(&["point"], 0.5, &[rest, toward]));
            phases.push(Phase::new(&[], 0.5, &[toward, rest]));
        }
        for (id, pos) in layout {
            targets.insert(id.to_string(), pos);
        }
        Self {
            format_version: 1,
            task_id: "pointing".into(),
            objects: vec![ObjectScript {
                object_id: "pointer".into(),
                phases,
                attribute_hands: false,
                focus_action: None,
            }],
            pointing: Some(PointingScript {
                targets,
                aim_time_s: 1.0,
            }),
        }
    }
}

/// What the generator actually scheduled, derived from the final sampled
/// action streams (independently of the segmentation/metrics code paths).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth<S> {
    /// Maximal intervals per (object, base action).
    pub intervals: BTreeMap<(String, String), Vec<(S, S)>>,
    /// Interval count per (object, base action).
    pub counts: BTreeMap<(String, String), usize>,
    /// Compressed (qualified) semantic sequence per object.
    pub sequences: BTreeMap<String, SemanticSequence>,
    pub task_time: S,
    pub idle_time: S,
    pub grasp_count: usize,
    pub left_grasps: usize,
    pub right_grasps: usize,
    pub injected_regrasps: usize,
    pub injected_extra_actions: usize,
}

struct ObjectStream {
    object_id: String,
    /// One action set per global sample index.
    actions: Vec<ActionSet>,
    /// Nominal (noise-free) position per global sample index.
    nominal: Vec<[f64; 3]>,
}

/// Generates one episode plus its ground truth. Deterministic for a fixed
/// profile seed; a zero-noise profile reproduces the script's template
/// exactly.
pub fn generate_episode<S: Real>(
    script: &TaskScript,
    profile: &BehaviorProfile,
    condition: &str,
) -> Result<(Episode<S>, GroundTruth<S>), SynthError> {
    script.validate()?;
    profile.validate()?;
    let seed = profile.seed;
    let rate = profile.sample_rate_hz;
    let dt = 1.0 / rate;
    let samples = |dur: f64| ((dur * rate).round() as usize).max(1);
    let gap_samples = if profile.idle_gap_s > 0.0 {
        samples(profile.idle_gap_s)
    } else {
        0
    };

    // object schedules on the shared sample grid
    let mut offsets = Vec::with_capacity(script.objects.len());
    let mut cursor = 0usize;
    for (i, obj) in script.objects.iter().enumerate() {
        if i > 0 {
            cursor += gap_samples;
        }
        offsets.push(cursor);
        cursor += obj.phases.iter().map(|p| samples(p.duration_s)).sum::<usize>();
    }
    let timeline_len = cursor.max(1);

    let mut injected_regrasps = 0usize;
    let mut injected_extra = 0usize;
    let mut streams: Vec<ObjectStream> = Vec::with_capacity(script.objects.len());

    for (obj, &offset) in script.objects.iter().zip(&offsets) {
        let mut actions_rng = SplitMix64::new(derive_seed(seed, &obj.object_id, 1));
        let phase_samples: Vec<usize> = obj.phases.iter().map(|p| samples(p.duration_s)).collect();

        // per-phase action sets for this episode (hand attribution per
        // maximal grasp run)
        let mut phase_sets: Vec<ActionSet> = obj.phases.iter().map(|p| p.action_set()).collect();
        if obj.attribute_hands {
            let mut i = 0;
            while i < phase_sets.len() {
                if phase_sets[i].contains_matching("grasp") {
                    let mut j = i;
                    while j + 1 < phase_sets.len() && phase_sets[j + 1].contains_matching("grasp") {
                        j += 1;
                    }
                    let hand = if actions_rng.bernoulli(profile.hand_bias) {
                        Hand::Right
                    } else {
                        Hand::Left
                    };
                    for set in &mut phase_sets[i..=j] {
                        if set.contains("grasp") {
                            set.remove_matching("grasp");
                            set.insert(&format!("grasp@{}", hand.as_str()));
                        }
                    }
                    i = j + 1;
                } else {
                    i += 1;
                }
            }
        }

        // expand to per-sample action sets and apply injections
        let rest_start = obj.phases[0].waypoints[0];
        let rest_end = *obj.phases[obj.phases.len() - 1]
            .waypoints
            .last()
            .expect("validated non-empty waypoints");
        let mut actions: Vec<ActionSet> = vec![ActionSet::empty(); timeline_len];
        let mut nominal: Vec<[f64; 3]> = vec![[0.0; 3]; timeline_len];
        for (idx, pos) in nominal.iter_mut().enumerate() {
            *pos = if idx < offset { rest_start } else { rest_end };
        }

        let gap_len = samples(REGRASP_GAP_S);
        let mut phase_start = offset;
        for ((phase, set), &n) in obj.phases.iter().zip(&phase_sets).zip(&phase_samples) {
            let mut gap: Option<(usize, usize)> = None;
            if phase.regrasp_site
                && profile.regrasp_probability > 0.0
                && actions_rng.bernoulli(profile.regrasp_probability)
                && n >= 3
            {
                let g = gap_len.min(n - 2);
                let start = (n - g) / 2;
                gap = Some((start.max(1), (start.max(1) + g).min(n - 1)));
                injected_regrasps += 1;
            }
            let mut extra: Option<(usize, usize)> = None;
            if phase.extra_action_site
                && profile.extra_action_probability > 0.0
                && actions_rng.bernoulli(profile.extra_action_probability)
                && n >= 3
            {
                let g = gap_len.min(n - 2);
                let start = (n - g) / 2;
                extra = Some((start.max(1), (start.max(1) + g).min(n - 1)));
                injected_extra += 1;
            }
            for local in 0..n {
                let idx = phase_start + local;
                actions[idx] = match (gap, extra) {
                    (Some((s, e)), _) if local >= s && local < e => ActionSet::empty(),
                    (_, Some((s, e))) if local >= s && local < e => {
                        ActionSet::from_labels([EXTRA_ACTION_LABEL])
                    }
                    _ => set.clone(),
                };
                // piecewise-linear interpolation over the phase waypoints
                let w = phase.waypoints.len();
                nominal[idx] = if w == 1 || n == 1 {
                    phase.waypoints[0]
                } else {
                    let u = local as f64 / (n - 1) as f64;
                    let scaled = u * (w - 1) as f64;
                    let seg = (scaled.floor() as usize).min(w - 2);
                    let frac = scaled - seg as f64;
                    let a = phase.waypoints[seg];
                    let b = phase.waypoints[seg + 1];
                    [
                        a[0] + (b[0] - a[0]) * frac,
                        a[1] + (b[1] - a[1]) * frac,
                        a[2] + (b[2] - a[2]) * frac,
                    ]
                };
            }
            phase_start += n;
        }
        streams.push(ObjectStream {
            object_id: obj.object_id.clone(),
            actions,
            nominal,
        });
    }

    // noisy, smoothed paths; noise directions depend only on the seed so
    // scaling path_noise_sd scales the same displacements
    let mut points_by_object = Vec::with_capacity(streams.len());
    for stream in &streams {
        let mut path_rng = SplitMix64::new(derive_seed(seed, &stream.object_id, 2));
        let noisy: Vec<[f64; 3]> = stream
            .nominal
            .iter()
            .map(|p| {
                let g = [path_rng.gaussian(), path_rng.gaussian(), path_rng.gaussian()];
                [
                    p[0] + profile.path_noise_sd * g[0],
                    p[1] + profile.path_noise_sd * g[1],
                    p[2] + profile.path_noise_sd * g[2],
                ]
            })
            .collect();
        let n = noisy.len();
        let smoothed: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                let count = (hi - lo + 1) as f64;
                let mut acc = [0.0; 3];
                for s in &noisy[lo..=hi] {
                    acc[0] += s[0];
                    acc[1] += s[1];
                    acc[2] += s[2];
                }
                [acc[0] / count, acc[1] / count, acc[2] / count]
            })
            .collect();
        let points: Vec<SemanticPoint<S>> = (0..n)
            .map(|i| {
                SemanticPoint::unsegmented(
                    Pose::at(Vec3::new(
                        S::of(smoothed[i][0]),
                        S::of(smoothed[i][1]),
                        S::of(smoothed[i][2]),
                    )),
                    S::of(i as f64 * dt),
                    stream.actions[i].clone(),
                )
            })
            .collect();
        points_by_object.push((stream.object_id.clone(), points));
    }

    // pointing events
    let mut events = Vec::new();
    if let Some(pointing) = &script.pointing {
        let mut point_rng = SplitMix64::new(derive_seed(seed, "pointing", 3));
        let dir = point_rng.unit_sphere();
        let magnitude = profile.aim_bias_m + profile.aim_bias_sd_m * point_rng.gaussian();
        let bias = [dir[0] * magnitude, dir[1] * magnitude, dir[2] * magnitude];
        for (k, (target_id, center)) in pointing.targets.iter().enumerate() {
            let jitter = [
                profile.pointing_error_sd * point_rng.gaussian(),
                profile.pointing_error_sd * point_rng.gaussian(),
                profile.pointing_error_sd * point_rng.gaussian(),
            ];
            let t = (k as f64 + 0.5) * pointing.aim_time_s;
            events.push(PointingEvent {
                target_id: target_id.clone(),
                hit_position: Vec3::new(
                    S::of(center[0] + bias[0] + jitter[0]),
                    S::of(center[1] + bias[1] + jitter[1]),
                    S::of(center[2] + bias[2] + jitter[2]),
                ),
                t: S::of(t),
                hand: Hand::Unspecified,
            });
        }
    }

    let truth = ground_truth(&streams, dt, injected_regrasps, injected_extra);
    let episode = build_episode(
        format!("{}-{}-{:016x}", script.task_id, condition, seed),
        format!("p-{:016x}", seed),
        condition.to_string(),
        script.task_id.clone(),
        S::of(rate),
        points_by_object,
        events,
    )
    .expect("generated streams are non-empty and strictly increasing");
    Ok((episode, truth))
}

fn ground_truth<S: Real>(
    streams: &[ObjectStream],
    dt: f64,
    injected_regrasps: usize,
    injected_extra_actions: usize,
) -> GroundTruth<S> {
    let mut intervals: BTreeMap<(String, String), Vec<(S, S)>> = BTreeMap::new();
    let mut sequences = BTreeMap::new();
    let mut active: Vec<(S, S)> = Vec::new();
    let mut grasp_count = 0usize;
    let mut left = 0usize;
    let mut right = 0usize;

    for stream in streams {
        sequences.insert(
            stream.object_id.clone(),
            SemanticSequence::compressing(stream.actions.iter().cloned()),
        );
        let mut bases = std::collections::BTreeSet::new();
        let mut qualified = std::collections::BTreeSet::new();
        for set in &stream.actions {
            for label in set.iter() {
                bases.insert(base_label(label).to_string());
                qualified.insert(label.to_string());
            }
        }
        for base in &bases {
            let ivs = sample_runs(&stream.actions, |set| set.contains_matching(base), dt);
            if base == "grasp" {
                grasp_count += ivs.len();
            }
            intervals.insert((stream.object_id.clone(), base.clone()), ivs);
        }
        for label in &qualified {
            match crate::model::label_hand(label) {
                Some(Hand::Left) if base_label(label) == "grasp" => {
                    left += sample_runs::<S, _>(&stream.actions, |s| s.contains(label), dt).len();
                }
                Some(Hand::Right) if base_label(label) == "grasp" => {
                    right += sample_runs::<S, _>(&stream.actions, |s| s.contains(label), dt).len();
                }
                _ => {}
            }
        }
        active.extend(sample_runs(&stream.actions, |set| !set.is_empty(), dt));
    }

    active.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    let mut union: Vec<(S, S)> = Vec::new();
    for (s, e) in active {
        match union.last_mut() {
            Some((_, le)) if s <= *le => {
                if e > *le {
                    *le = e;
                }
            }
            _ => union.push((s, e)),
        }
    }
    let (task_time, idle_time) = match (union.first(), union.last()) {
        (Some(&(s, _)), Some(&(_, e))) => {
            let span = e - s;
            let covered: S = union.iter().map(|&(a, b)| b - a).sum();
            (span, (span - covered).max(S::zero()))
        }
        _ => (S::zero(), S::zero()),
    };

    let counts = intervals
        .iter()
        .map(|(k, v)| (k.clone(), v.len()))
        .collect();
    GroundTruth {
        intervals,
        counts,
        sequences,
        task_time,
        idle_time,
        grasp_count,
        left_grasps: left,
        right_grasps: right,
        injected_regrasps,
        injected_extra_actions: injected_extra_actions,
    }
}

fn sample_runs<S: Real, F: Fn(&ActionSet) -> bool>(
    actions: &[ActionSet],
    pred: F,
    dt: f64,
) -> Vec<(S, S)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, set) in actions.iter().enumerate() {
        if pred(set) {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push((S::of(s as f64 * dt), S::of((i - 1) as f64 * dt)));
        }
    }
    if let Some(s) = start {
        out.push((
            S::of(s as f64 * dt),
            S::of((actions.len() - 1) as f64 * dt),
        ));
    }
    out
}

/// Generates `n_per_group` episodes per condition with seeds derived from
/// each profile's base seed, the condition label and the index.
pub fn generate_group<S: Real>(
    script: &TaskScript,
    profiles: &BTreeMap<String, BehaviorProfile>,
    n_per_group: usize,
) -> Result<Vec<(Episode<S>, GroundTruth<S>)>, SynthError> {
    if n_per_group < 2 {
        return Err(SynthError::GroupTooSmall(n_per_group));
    }
    if profiles.is_empty() {
        return Err(SynthError::InvalidProfile("no conditions given".into()));
    }
    let mut out = Vec::with_capacity(profiles.len() * n_per_group);
    for (condition, profile) in profiles {
        for index in 0..n_per_group {
            let mut p = profile.clone();
            p.seed = derive_seed(profile.seed, condition, index as u64);
            let (mut ep, truth) = generate_episode(script, &p, condition)?;
            ep.episode_id = format!("{}-{}-{:03}", script.task_id, condition, index);
            ep.participant_id = format!("p-{}-{:03}", condition, index);
            out.push((ep, truth));
        }
    }
    Ok(out)
}
