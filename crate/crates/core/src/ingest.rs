//! Reading and writing the toolkit's file formats.
//!
//! Episode recordings use the line-delimited `.semtraj` format (format
//! version 1, UTF-8, one record per line, `#` comments and blank lines
//! allowed):
//!
//! ```text
//! hdr 1 <episode_id> <participant_id> <condition> <task_id> <sample_rate_hz> <unit_scale>
//! frm <object_id> <t> <px> <py> <pz> <qw> <qx> <qy> <qz> [action,action,...]
//! evt point <target_id> <t> <hx> <hy> <hz> <left|right|unspecified>
//! ```
//!
//! The header must precede all other records. Positions are multiplied by
//! `unit_scale` on ingestion so episodes are SI meters in memory; timestamps
//! are seconds. Per-object timestamps must be strictly increasing; frames of
//! different objects may interleave in any global order. The empty action
//! set is written as an explicit `[]`.
//!
//! Task templates are TOML (see [`load_template`]).

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Deserialize;
use thiserror::Error;

use crate::geom::Vec3;
use crate::model::{
    normalize_label, ActionSet, Episode, Hand, PointingEvent, Pose, Quaternion, SemanticPoint,
    SemanticSequence, Trajectory,
};
use crate::num::Real;
use crate::segment::segment_trajectory;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed record: {detail}")]
    MalformedRecord { line: usize, detail: String },
    #[error("missing header record")]
    MissingHeader,
    #[error("line {line}: non-monotonic timestamp for object '{object}'")]
    NonMonotonicTimestamp { object: String, line: usize },
    #[error("line {line}: non-finite value in field '{field}'")]
    NonFiniteValue { field: String, line: usize },
    #[error("line {line}: unknown record kind '{kind}'")]
    UnknownRecordKind { kind: String, line: usize },
    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for ParseError {
    fn from(e: std::io::Error) -> Self {
        ParseError::Io(e.to_string())
    }
}

fn malformed(line: usize, detail: impl Into<String>) -> ParseError {
    ParseError::MalformedRecord {
        line,
        detail: detail.into(),
    }
}

fn ident_ok(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | ':' | '-'))
}

fn label_ok(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '_' | '@'))
}

fn parse_ident(tok: &str, field: &str, line: usize) -> Result<String, ParseError> {
    if ident_ok(tok) {
        Ok(tok.to_string())
    } else {
        Err(malformed(
            line,
            format!("field '{field}' must be a non-empty identifier, got '{tok}'"),
        ))
    }
}

fn parse_num<S: Real>(tok: &str, field: &str, line: usize) -> Result<S, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| malformed(line, format!("field '{field}' is not a number: '{tok}'")))?;
    if !v.is_finite() {
        return Err(ParseError::NonFiniteValue {
            field: field.to_string(),
            line,
        });
    }
    Ok(S::of(v))
}

fn parse_actions(tok: &str, line: usize) -> Result<ActionSet, ParseError> {
    let inner = tok
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| malformed(line, format!("actions field must be [..], got '{tok}'")))?;
    let mut set = ActionSet::empty();
    if inner.is_empty() {
        return Ok(set);
    }
    for raw in inner.split(',') {
        let label = normalize_label(raw);
        if !label_ok(&label) {
            return Err(malformed(line, format!("invalid action label '{raw}'")));
        }
        set.insert(&label);
    }
    Ok(set)
}

struct Header<S> {
    episode_id: String,
    participant_id: String,
    condition: String,
    task_id: String,
    sample_rate_hz: S,
    unit_scale: S,
}

/// Assembles an episode from per-object point streams, segmenting each
/// stream and assigning canonical trajectory ids: objects ranked by
/// (first timestamp, object id). Synthetic generation and parsing both go
/// through here so ids round-trip.
pub fn build_episode<S: Real>(
    episode_id: String,
    participant_id: String,
    condition: String,
    task_id: String,
    sample_rate_hz: S,
    points_by_object: Vec<(String, Vec<SemanticPoint<S>>)>,
    events: Vec<PointingEvent<S>>,
) -> Result<Episode<S>, crate::segment::SegmentError> {
    let goal = task_id.clone();
    let mut order: Vec<(S, String)> = points_by_object
        .iter()
        .map(|(id, pts)| (pts.first().map(|p| p.t).unwrap_or_else(S::zero), id.clone()))
        .collect();
    order.sort_by(|a, b| a.partial_cmp(b).expect("finite timestamps"));

    let mut trajectories: BTreeMap<String, Trajectory<S>> = BTreeMap::new();
    for (object_id, pts) in points_by_object {
        let rank = order
            .iter()
            .position(|(_, id)| *id == object_id)
            .expect("object present in ordering");
        let mut tr = segment_trajectory(pts, &object_id, &goal)?;
        tr.traj_id = rank;
        for sub in &mut tr.subs {
            sub.traj_id = rank;
        }
        trajectories.insert(object_id, tr);
    }
    Ok(Episode {
        episode_id,
        participant_id,
        condition,
        task_id,
        sample_rate_hz,
        trajectories,
        events,
    })
}

/// Parses a `.semtraj` stream into a validated [`Episode`].
pub fn parse_episode<S: Real>(source: impl BufRead) -> Result<Episode<S>, ParseError> {
    let mut header: Option<Header<S>> = None;
    let mut object_order: Vec<String> = Vec::new();
    let mut points: BTreeMap<String, Vec<SemanticPoint<S>>> = BTreeMap::new();
    let mut last_t: BTreeMap<String, S> = BTreeMap::new();
    let mut events: Vec<PointingEvent<S>> = Vec::new();

    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = trimmed.split_whitespace().collect();
        match tok[0] {
            "hdr" => {
                if header.is_some() {
                    return Err(malformed(line_no, "duplicate header"));
                }
                if tok.len() != 8 {
                    return Err(malformed(
                        line_no,
                        format!("header needs 8 fields, got {}", tok.len()),
                    ));
                }
                let version: u32 = tok[1]
                    .parse()
                    .map_err(|_| malformed(line_no, "format_version must be an integer"))?;
                if version != FORMAT_VERSION {
                    return Err(malformed(
                        line_no,
                        format!("unsupported format_version {version}"),
                    ));
                }
                let sample_rate_hz: S = parse_num(tok[6], "sample_rate_hz", line_no)?;
                if sample_rate_hz <= S::zero() {
                    return Err(malformed(line_no, "sample_rate_hz must be > 0"));
                }
                let unit_scale: S = parse_num(tok[7], "unit_scale", line_no)?;
                if unit_scale <= S::zero() {
                    return Err(malformed(line_no, "unit_scale must be > 0"));
                }
                header = Some(Header {
                    episode_id: parse_ident(tok[2], "episode_id", line_no)?,
                    participant_id: parse_ident(tok[3], "participant_id", line_no)?,
                    condition: parse_ident(tok[4], "condition", line_no)?,
                    task_id: parse_ident(tok[5], "task_id", line_no)?,
                    sample_rate_hz,
                    unit_scale,
                });
            }
            "frm" => {
                let hdr = header.as_ref().ok_or(ParseError::MissingHeader)?;
                if tok.len() != 11 {
                    return Err(malformed(
                        line_no,
                        format!("frame needs 11 fields, got {}", tok.len()),
                    ));
                }
                let object_id = parse_ident(tok[1], "object_id", line_no)?;
                let t: S = parse_num(tok[2], "t", line_no)?;
                if t < S::zero() {
                    return Err(malformed(line_no, "negative timestamp"));
                }
                if let Some(&prev) = last_t.get(&object_id) {
                    if !(t > prev) {
                        return Err(ParseError::NonMonotonicTimestamp {
                            object: object_id,
                            line: line_no,
                        });
                    }
                }
                let px: S = parse_num(tok[3], "px", line_no)?;
                let py: S = parse_num(tok[4], "py", line_no)?;
                let pz: S = parse_num(tok[5], "pz", line_no)?;
                let qw: S = parse_num(tok[6], "qw", line_no)?;
                let qx: S = parse_num(tok[7], "qx", line_no)?;
                let qy: S = parse_num(tok[8], "qy", line_no)?;
                let qz: S = parse_num(tok[9], "qz", line_no)?;
                let actions = parse_actions(tok[10], line_no)?;
                let position = Vec3::new(px, py, pz).scale(hdr.unit_scale);
                let pose = Pose::new(
                    position,
                    Quaternion {
                        w: qw,
                        x: qx,
                        y: qy,
                        z: qz,
                    },
                );
                if !pose.orientation.is_finite() {
                    // zero-norm quaternion normalizes to NaN
                    return Err(ParseError::NonFiniteValue {
                        field: "orientation".into(),
                        line: line_no,
                    });
                }
                last_t.insert(object_id.clone(), t);
                if !points.contains_key(&object_id) {
                    object_order.push(object_id.clone());
                }
                points
                    .entry(object_id)
                    .or_default()
                    .push(SemanticPoint::unsegmented(pose, t, actions));
            }
            "evt" => {
                let hdr = header.as_ref().ok_or(ParseError::MissingHeader)?;
                if tok.len() != 8 {
                    return Err(malformed(
                        line_no,
                        format!("event needs 8 fields, got {}", tok.len()),
                    ));
                }
                if tok[1] != "point" {
                    return Err(malformed(
                        line_no,
                        format!("unknown event type '{}'", tok[1]),
                    ));
                }
                let target_id = parse_ident(tok[2], "target_id", line_no)?;
                let t: S = parse_num(tok[3], "t", line_no)?;
                let hx: S = parse_num(tok[4], "hx", line_no)?;
                let hy: S = parse_num(tok[5], "hy", line_no)?;
                let hz: S = parse_num(tok[6], "hz", line_no)?;
                let hand = Hand::parse(tok[7])
                    .ok_or_else(|| malformed(line_no, format!("unknown hand '{}'", tok[7])))?;
                events.push(PointingEvent {
                    target_id,
                    hit_position: Vec3::new(hx, hy, hz).scale(hdr.unit_scale),
                    t,
                    hand,
                });
            }
            kind => {
                if header.is_none() {
                    return Err(ParseError::MissingHeader);
                }
                return Err(ParseError::UnknownRecordKind {
                    kind: kind.to_string(),
                    line: line_no,
                });
            }
        }
    }

    let hdr = header.ok_or(ParseError::MissingHeader)?;
    let by_object: Vec<(String, Vec<SemanticPoint<S>>)> = object_order
        .into_iter()
        .map(|id| {
            let pts = points.remove(&id).expect("points recorded for object");
            (id, pts)
        })
        .collect();
    let ep = build_episode(
        hdr.episode_id,
        hdr.participant_id,
        hdr.condition,
        hdr.task_id,
        hdr.sample_rate_hz,
        by_object,
        events,
    )
    .expect("per-object monotonicity enforced during parsing");
    debug_assert!(crate::model::validate_episode(&ep).is_empty());
    Ok(ep)
}

/// Writes an episode in canonical `.semtraj` form: header first, frames
/// merged across objects in global time order (ties by trajectory id),
/// events last. Numbers are printed with enough digits for exact
/// round-trips, so `parse_episode(write_episode(e)) == e`.
pub fn write_episode<S: Real>(ep: &Episode<S>, mut sink: impl Write) -> std::io::Result<()> {
    writeln!(
        sink,
        "hdr {} {} {} {} {} {} 1",
        FORMAT_VERSION,
        ep.episode_id,
        ep.participant_id,
        ep.condition,
        ep.task_id,
        ep.sample_rate_hz
    )?;

    let mut trajs: Vec<&Trajectory<S>> = ep.trajectories.values().collect();
    trajs.sort_by_key(|t| t.traj_id);
    let mut cursors: Vec<(usize, Vec<&SemanticPoint<S>>)> = trajs
        .iter()
        .map(|t| (0usize, t.points().collect::<Vec<_>>()))
        .collect();
    loop {
        let mut best: Option<(usize, S)> = None;
        for (ti, (cursor, pts)) in cursors.iter().enumerate() {
            if let Some(p) = pts.get(*cursor) {
                if best.map_or(true, |(_, bt)| p.t < bt) {
                    best = Some((ti, p.t));
                }
            }
        }
        let Some((ti, _)) = best else { break };
        let (cursor, pts) = &mut cursors[ti];
        let p = pts[*cursor];
        *cursor += 1;
        let actions: Vec<&str> = p.actions.iter().collect();
        writeln!(
            sink,
            "frm {} {} {} {} {} {} {} {} {} [{}]",
            trajs[ti].object_id,
            p.t,
            p.pose.position.x,
            p.pose.position.y,
            p.pose.position.z,
            p.pose.orientation.w,
            p.pose.orientation.x,
            p.pose.orientation.y,
            p.pose.orientation.z,
            actions.join(",")
        )?;
    }
    for ev in &ep.events {
        writeln!(
            sink,
            "evt point {} {} {} {} {} {}",
            ev.target_id,
            ev.t,
            ev.hit_position.x,
            ev.hit_position.y,
            ev.hit_position.z,
            ev.hand.as_str()
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Task templates
// ---------------------------------------------------------------------------

/// How an action count relates to its required count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ge,
    Le,
}

impl Comparator {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "==" => Some(Comparator::Eq),
            ">=" => Some(Comparator::Ge),
            "<=" => Some(Comparator::Le),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Ge => ">=",
            Comparator::Le => "<=",
        }
    }

    pub fn holds(self, observed: usize, required: usize) -> bool {
        match self {
            Comparator::Eq => observed == required,
            Comparator::Ge => observed >= required,
            Comparator::Le => observed <= required,
        }
    }
}

/// Required action count on one object, e.g. (knife, cut, ==, 3).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionRule {
    pub object_id: String,
    pub action: String,
    pub comparator: Comparator,
    pub count: usize,
}

/// Per-task optimal semantic sequences, action-count rules and target
/// geometry for pointing.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskTemplate<S> {
    pub task_id: String,
    /// Optimal semantic sequence per object.
    pub optimal: BTreeMap<String, SemanticSequence>,
    /// Optional per-object action whose segments are the subtask of
    /// interest for spatial similarity (e.g. knife -> cut).
    pub focus_actions: BTreeMap<String, String>,
    pub rules: Vec<ActionRule>,
    pub required_objects: Vec<String>,
    /// Pointing target centers, meters.
    pub targets: BTreeMap<String, Vec3<S>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("malformed template: {0}")]
    Malformed(String),
    #[error("object '{object}': optimal sequence has consecutive duplicate tokens at index {index}")]
    ConsecutiveDuplicateTokens { object: String, index: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateFile {
    format_version: u32,
    task_id: String,
    #[serde(default)]
    required_objects: Vec<String>,
    #[serde(default)]
    objects: BTreeMap<String, TemplateObject>,
    #[serde(default)]
    rules: Vec<TemplateRule>,
    #[serde(default)]
    targets: BTreeMap<String, [f64; 3]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateObject {
    optimal: Vec<Vec<String>>,
    #[serde(default)]
    focus_action: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateRule {
    object: String,
    action: String,
    comparator: String,
    count: usize,
}

/// Loads a TOML task template. Field names: `format_version`, `task_id`,
/// `required_objects`, `[objects.<id>] optimal = [[...], ...]` (+ optional
/// `focus_action`), `[[rules]] object/action/comparator/count`, and
/// `[targets] <id> = [x, y, z]`.
pub fn load_template<S: Real>(mut source: impl std::io::Read) -> Result<TaskTemplate<S>, TemplateError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| TemplateError::Malformed(format!("i/o failure: {e}")))?;
    let file: TemplateFile =
        toml::from_str(&text).map_err(|e| TemplateError::Malformed(e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(TemplateError::Malformed(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }

    let mut optimal = BTreeMap::new();
    let mut focus_actions = BTreeMap::new();
    for (object, obj) in file.objects {
        let tokens: Vec<ActionSet> = obj
            .optimal
            .iter()
            .map(|labels| ActionSet::from_labels(labels.iter()))
            .collect();
        let seq = SemanticSequence::from_tokens(tokens)
            .map_err(|index| TemplateError::ConsecutiveDuplicateTokens {
                object: object.clone(),
                index,
            })?;
        optimal.insert(object.clone(), seq);
        if let Some(f) = obj.focus_action {
            focus_actions.insert(object, normalize_label(&f));
        }
    }

    let mut rules = Vec::new();
    for r in file.rules {
        let comparator = Comparator::parse(&r.comparator).ok_or_else(|| {
            TemplateError::Malformed(format!("unknown comparator '{}'", r.comparator))
        })?;
        rules.push(ActionRule {
            object_id: r.object,
            action: normalize_label(&r.action),
            comparator,
            count: r.count,
        });
    }

    let mut targets = BTreeMap::new();
    for (id, [x, y, z]) in file.targets {
        if ![x, y, z].iter().all(|v| v.is_finite()) {
            return Err(TemplateError::Malformed(format!(
                "target '{id}' has non-finite coordinates"
            )));
        }
        targets.insert(id, Vec3::new(S::of(x), S::of(y), S::of(z)));
    }

    Ok(TaskTemplate {
        task_id: file.task_id,
        optimal,
        focus_actions,
        rules,
        required_objects: file.required_objects,
        targets,
    })
}
