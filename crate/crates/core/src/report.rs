//! Assembles per-episode analysis rows and cross-group comparison tables.
//! The CLI renders these; everything here is plain data and deterministic
//! for a fixed input.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::distance::{
    classify_edits, group_similarity, levenshtein_with_script, pairwise_matrix, DistanceError,
    EditClassification, PathMetric,
};
use crate::geom::Vec3;
use crate::ingest::TaskTemplate;
use crate::metrics::{EpisodeMetrics, MetricsError};
use crate::model::Episode;
use crate::num::Real;
use crate::segment::compress;
use crate::stats::{compare_groups, ComparisonResult, GroupedSample, StatsError, TestFamily};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("episode '{episode}': {source}")]
    Metrics {
        episode: String,
        source: MetricsError,
    },
    #[error("distance computation for object '{object}' in group '{group}': {source}")]
    Distance {
        object: String,
        group: String,
        source: DistanceError,
    },
    #[error("metric '{metric}': {source}")]
    Stats {
        metric: String,
        source: StatsError,
    },
    #[error("{0}")]
    Invalid(String),
}

/// Which episode field forms the comparison groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    Condition,
    Participant,
    Task,
}

impl GroupBy {
    pub fn key<S: Real>(self, ep: &Episode<S>) -> &str {
        match self {
            GroupBy::Condition => &ep.condition,
            GroupBy::Participant => &ep.participant_id,
            GroupBy::Task => &ep.task_id,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "condition" => Some(GroupBy::Condition),
            "participant" => Some(GroupBy::Participant),
            "task" => Some(GroupBy::Task),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GroupBy::Condition => "condition",
            GroupBy::Participant => "participant",
            GroupBy::Task => "task",
        }
    }
}

/// Knobs shared by the analyze and compare pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions<S> {
    pub stride: usize,
    pub normalize_translation: bool,
    pub alpha: S,
    pub family: TestFamily,
    pub group_by: GroupBy,
}

impl<S: Real> Default for AnalysisOptions<S> {
    fn default() -> Self {
        Self {
            stride: 1,
            normalize_translation: false,
            alpha: S::of(0.05),
            family: TestFamily::Nonparametric,
            group_by: GroupBy::Condition,
        }
    }
}

/// One episode's analysis output: metrics plus semantic scoring against the
/// template.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzeRow<S> {
    pub episode_id: String,
    pub participant_id: String,
    pub condition: String,
    pub task_id: String,
    pub metrics: EpisodeMetrics<S>,
    /// Sum of per-object Levenshtein distances to the template.
    pub levenshtein: Option<usize>,
    pub per_object_levenshtein: BTreeMap<String, usize>,
    pub edits: Option<EditClassification>,
    /// Human-readable description of each violated template rule.
    pub rule_violations: Vec<String>,
    pub pointing_mean: Option<S>,
    pub pointing_sd: Option<S>,
}

/// Computes one analysis row. Semantic scoring strips `@hand` qualifiers
/// before comparing against the template's unqualified sequences; an object
/// required by the template but absent from the episode scores the full
/// length of its optimal sequence as missing.
pub fn analyze_episode<S: Real>(
    ep: &Episode<S>,
    tmpl: Option<&TaskTemplate<S>>,
) -> Result<AnalyzeRow<S>, PipelineError> {
    let metrics = EpisodeMetrics::compute(ep, tmpl).map_err(|source| PipelineError::Metrics {
        episode: ep.episode_id.clone(),
        source,
    })?;
    let mut levenshtein = None;
    let mut per_object = BTreeMap::new();
    let mut edits: Option<EditClassification> = None;
    let mut rule_violations = Vec::new();
    if let Some(t) = tmpl {
        let mut total = 0usize;
        let mut acc = EditClassification::default();
        for (object, optimal) in &t.optimal {
            let observed = match ep.trajectory(object) {
                Some(tr) => compress(tr).strip_hand_qualifiers(),
                None => Default::default(),
            };
            let (d, script) = levenshtein_with_script(&observed, optimal);
            let c = classify_edits(&script, true);
            acc.unnecessary += c.unnecessary;
            acc.missing += c.missing;
            acc.wrong += c.wrong;
            total += d;
            per_object.insert(object.clone(), d);
        }
        levenshtein = Some(total);
        edits = Some(acc);
        for rule in &t.rules {
            let observed = ep
                .trajectory(&rule.object_id)
                .map(|tr| crate::segment::action_intervals(tr, &rule.action).len())
                .unwrap_or(0);
            if !rule.comparator.holds(observed, rule.count) {
                rule_violations.push(format!(
                    "{}: {} count {} violates {} {}",
                    rule.object_id,
                    rule.action,
                    observed,
                    rule.comparator.as_str(),
                    rule.count
                ));
            }
        }
    }
    let (pointing_mean, pointing_sd) = match metrics.pointing_summary() {
        Some((m, s)) => (Some(m), Some(s)),
        None => (None, None),
    };
    Ok(AnalyzeRow {
        episode_id: ep.episode_id.clone(),
        participant_id: ep.participant_id.clone(),
        condition: ep.condition.clone(),
        task_id: ep.task_id.clone(),
        metrics,
        levenshtein,
        per_object_levenshtein: per_object,
        edits,
        rule_violations,
        pointing_mean,
        pointing_sd,
    })
}

/// One comparison row of the group report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow<S> {
    pub metric: String,
    pub comparison: ComparisonResult<S>,
}

/// One titled block of rows, mirroring the appendix table sections.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable<S> {
    pub section: String,
    pub rows: Vec<MetricRow<S>>,
}

/// The full compare output.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport<S> {
    pub group_by: String,
    pub labels: Vec<String>,
    pub tables: Vec<MetricTable<S>>,
    /// Pooled pointing (mean, population SD) per group, meters.
    pub pointing_pooled: BTreeMap<String, (S, S)>,
    pub alpha: S,
}

fn grouped<S: Real>(
    metric: &str,
    values: Vec<(String, S)>,
) -> Result<GroupedSample<S>, PipelineError> {
    let mut map: BTreeMap<String, Vec<S>> = BTreeMap::new();
    for (label, v) in values {
        map.entry(label).or_default().push(v);
    }
    GroupedSample::new(map).map_err(|source| PipelineError::Stats {
        metric: metric.to_string(),
        source,
    })
}

fn compare_row<S: Real>(
    metric: &str,
    values: Vec<(String, S)>,
    opts: &AnalysisOptions<S>,
) -> Result<MetricRow<S>, PipelineError> {
    let g = grouped(metric, values)?;
    let comparison =
        compare_groups(&g, opts.family, opts.alpha).map_err(|source| PipelineError::Stats {
            metric: metric.to_string(),
            source,
        })?;
    Ok(MetricRow {
        metric: metric.to_string(),
        comparison,
    })
}

/// The spatial path compared for `object`: the focus-action segments when
/// the template flags one (falling back to the full trajectory when the
/// episode never performs it), optionally translated to start at the
/// origin.
fn object_path<S: Real>(
    ep: &Episode<S>,
    object: &str,
    tmpl: Option<&TaskTemplate<S>>,
    normalize: bool,
) -> Option<Vec<Vec3<S>>> {
    let tr = ep.trajectory(object)?;
    let focus = tmpl.and_then(|t| t.focus_actions.get(object));
    let mut path: Vec<Vec3<S>> = match focus {
        Some(action) => {
            let pts: Vec<Vec3<S>> = tr
                .subs
                .iter()
                .filter(|s| s.actions().contains_matching(action))
                .flat_map(|s| s.points.iter().map(|p| p.pose.position))
                .collect();
            if pts.is_empty() {
                tr.path()
            } else {
                pts
            }
        }
        None => tr.path(),
    };
    if normalize {
        let origin = path[0];
        for p in &mut path {
            *p = p.sub(origin);
        }
    }
    Some(path)
}

/// Builds the full group report: general metrics, per-(object, action)
/// times and counts, within-group DTW/DFD similarity per object, and
/// pointing precision.
pub fn build_group_report<S: Real>(
    episodes: &[Episode<S>],
    tmpl: Option<&TaskTemplate<S>>,
    opts: &AnalysisOptions<S>,
) -> Result<GroupReport<S>, PipelineError> {
    if episodes.is_empty() {
        return Err(PipelineError::Invalid("no episodes".into()));
    }
    let rows: Vec<AnalyzeRow<S>> = episodes
        .iter()
        .map(|ep| analyze_episode(ep, tmpl))
        .collect::<Result<_, _>>()?;
    let key = |i: usize| opts.group_by.key(&episodes[i]).to_string();

    let mut labels: Vec<String> = episodes
        .iter()
        .map(|e| opts.group_by.key(e).to_string())
        .collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(PipelineError::Invalid(format!(
            "need at least 2 groups, got {}",
            labels.len()
        )));
    }

    let mut tables = Vec::new();

    // General Metrics
    let mut general = Vec::new();
    general.push(compare_row(
        "Task Time (s)",
        rows.iter()
            .enumerate()
            .map(|(i, r)| (key(i), r.metrics.task_time))
            .collect(),
        opts,
    )?);
    general.push(compare_row(
        "Idle Time (s)",
        rows.iter()
            .enumerate()
            .map(|(i, r)| (key(i), r.metrics.idle_time))
            .collect(),
        opts,
    )?);
    general.push(compare_row(
        "Grasp Count",
        rows.iter()
            .enumerate()
            .map(|(i, r)| (key(i), S::of_usize(r.metrics.grasp_count)))
            .collect(),
        opts,
    )?);
    let balances: Vec<(String, S)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.metrics.hand_balance.map(|b| (key(i), b)))
        .collect();
    if covers_all_groups(&balances, &labels) {
        general.push(compare_row("Balance", balances, opts)?);
    }
    if tmpl.is_some() {
        general.push(compare_row(
            "Levenshtein D.",
            rows.iter()
                .enumerate()
                .map(|(i, r)| (key(i), S::of_usize(r.levenshtein.unwrap_or(0))))
                .collect(),
            opts,
        )?);
        general.push(compare_row(
            "Unnecessary Actions",
            rows.iter()
                .enumerate()
                .map(|(i, r)| (key(i), S::of_usize(r.edits.map_or(0, |e| e.unnecessary))))
                .collect(),
            opts,
        )?);
        general.push(compare_row(
            "Rule Violations",
            rows.iter()
                .enumerate()
                .map(|(i, r)| (key(i), S::of_usize(r.rule_violations.len())))
                .collect(),
            opts,
        )?);
    }
    tables.push(MetricTable {
        section: "General Metrics".into(),
        rows: general,
    });

    // per-(object, action) times and counts over all observed pairs
    let mut pairs: Vec<(String, String)> = rows
        .iter()
        .flat_map(|r| r.metrics.per_object_action_count.keys().cloned())
        .collect();
    pairs.sort();
    pairs.dedup();
    let mut time_rows = Vec::new();
    let mut count_rows = Vec::new();
    for (object, action) in &pairs {
        let time_values: Vec<(String, S)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let v = r
                    .metrics
                    .per_object_action_time
                    .get(&(object.clone(), action.clone()))
                    .copied()
                    .unwrap_or_else(S::zero);
                (key(i), v)
            })
            .collect();
        time_rows.push(compare_row(&format!("{object}: {action}"), time_values, opts)?);
        let count_values: Vec<(String, S)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let v = r
                    .metrics
                    .per_object_action_count
                    .get(&(object.clone(), action.clone()))
                    .copied()
                    .unwrap_or(0);
                (key(i), S::of_usize(v))
            })
            .collect();
        count_rows.push(compare_row(
            &format!("{object}: {action}"),
            count_values,
            opts,
        )?);
    }
    if !time_rows.is_empty() {
        tables.push(MetricTable {
            section: "Action Times (s)".into(),
            rows: time_rows,
        });
        tables.push(MetricTable {
            section: "Action Counts".into(),
            rows: count_rows,
        });
    }

    // within-group spatial similarity per object
    let mut objects: Vec<String> = episodes[0].trajectories.keys().cloned().collect();
    objects.retain(|o| episodes.iter().all(|e| e.trajectories.contains_key(o)));
    for metric in [PathMetric::Dtw, PathMetric::Dfd] {
        let mut median_rows = Vec::new();
        let mut sd_rows = Vec::new();
        for object in &objects {
            let mut medians: Vec<(String, S)> = Vec::new();
            let mut sds: Vec<(String, S)> = Vec::new();
            for label in &labels {
                let members: Vec<(String, Vec<Vec3<S>>)> = episodes
                    .iter()
                    .filter(|e| opts.group_by.key(e) == label)
                    .map(|e| {
                        (
                            e.episode_id.clone(),
                            object_path(e, object, tmpl, opts.normalize_translation)
                                .expect("object present in all episodes"),
                        )
                    })
                    .collect();
                let matrix = pairwise_matrix(&members, metric, opts.stride, true).map_err(
                    |source| PipelineError::Distance {
                        object: object.clone(),
                        group: label.clone(),
                        source,
                    },
                )?;
                for sim in group_similarity(&matrix).map_err(|source| PipelineError::Distance {
                    object: object.clone(),
                    group: label.clone(),
                    source,
                })? {
                    medians.push((label.clone(), sim.median_distance_to_others));
                    sds.push((label.clone(), sim.sd_of_distances_to_others));
                }
            }
            median_rows.push(compare_row(object, medians, opts)?);
            sd_rows.push(compare_row(object, sds, opts)?);
        }
        if !median_rows.is_empty() {
            tables.push(MetricTable {
                section: format!("{} Median", metric.as_str().to_uppercase()),
                rows: median_rows,
            });
            tables.push(MetricTable {
                section: format!("{} SD", metric.as_str().to_uppercase()),
                rows: sd_rows,
            });
        }
    }

    // pointing precision (per-episode mean distances, compared in cm)
    let mut pointing_pooled = BTreeMap::new();
    if let Some(t) = tmpl {
        if !t.targets.is_empty() && rows.iter().any(|r| r.pointing_mean.is_some()) {
            let means: Vec<(String, S)> = rows
                .iter()
                .enumerate()
                .filter_map(|(i, r)| {
                    r.pointing_mean.map(|m| (key(i), m * S::of(100.0)))
                })
                .collect();
            if covers_all_groups(&means, &labels) {
                tables.push(MetricTable {
                    section: "Pointing Precision (cm)".into(),
                    rows: vec![compare_row("Mean Distance", means, opts)?],
                });
                let mut pooled: BTreeMap<String, Vec<S>> = BTreeMap::new();
                for (i, r) in rows.iter().enumerate() {
                    pooled
                        .entry(key(i))
                        .or_default()
                        .extend(r.metrics.pointing_distances.iter().map(|&(_, d)| d));
                }
                for (label, ds) in pooled {
                    if !ds.is_empty() {
                        pointing_pooled.insert(
                            label,
                            (
                                crate::num::mean(&ds).unwrap(),
                                crate::num::population_sd(&ds).unwrap(),
                            ),
                        );
                    }
                }
            }
        }
    }

    Ok(GroupReport {
        group_by: opts.group_by.as_str().to_string(),
        labels,
        tables,
        pointing_pooled,
        alpha: opts.alpha,
    })
}

fn covers_all_groups<S>(values: &[(String, S)], labels: &[String]) -> bool {
    !values.is_empty() && labels.iter().all(|l| values.iter().any(|(k, _)| k == l))
}
