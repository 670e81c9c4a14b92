//! Report rendering: markdown tables for humans, RFC-4180 CSV for plotting,
//! JSON for machines. All three are deterministic for a fixed report.

use std::collections::BTreeSet;

use semtraj::report::AnalyzeRow;
use semtraj::stats::ComparisonResult;
use semtraj::GroupReport;
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Markdown,
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "markdown" | "md" => Some(OutputFormat::Markdown),
            "csv" => Some(OutputFormat::Csv),
            "json" => Some(OutputFormat::Json),
            _ => None,
        }
    }
}

/// RFC-4180 quoting: fields containing commas, quotes or newlines are
/// wrapped in double quotes with inner quotes doubled.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_line(fields: &[String]) -> String {
    fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
}

/// Human rendering of a value: up to 4 decimals, trailing zeros trimmed.
fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// p-value in the tables' style: ".048" / "<.001", starred when < alpha.
fn fmt_p(p: f64, alpha: f64) -> String {
    let star = if p < alpha { "*" } else { "" };
    if p < 0.001 {
        format!("<.001{star}")
    } else {
        format!("{}{star}", format!("{p:.3}").trim_start_matches('0'))
    }
}

/// Column set for the analyze table: fixed columns plus dynamic
/// per-(object, action) time/count columns and per-object Levenshtein.
struct AnalyzeColumns {
    pairs: Vec<(String, String)>,
    lev_objects: Vec<String>,
}

impl AnalyzeColumns {
    fn collect(rows: &[AnalyzeRow<f64>]) -> Self {
        let mut pairs = BTreeSet::new();
        let mut lev_objects = BTreeSet::new();
        for r in rows {
            pairs.extend(r.metrics.per_object_action_count.keys().cloned());
            lev_objects.extend(r.per_object_levenshtein.keys().cloned());
        }
        Self {
            pairs: pairs.into_iter().collect(),
            lev_objects: lev_objects.into_iter().collect(),
        }
    }

    fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "episode",
            "participant",
            "condition",
            "task",
            "task_time_s",
            "idle_time_s",
            "grasp_count",
            "balance",
            "levenshtein",
            "unnecessary",
            "missing",
            "wrong",
            "rule_violations",
            "pointing_mean_cm",
            "pointing_sd_cm",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for (o, a) in &self.pairs {
            h.push(format!("time_s[{o}:{a}]"));
        }
        for (o, a) in &self.pairs {
            h.push(format!("count[{o}:{a}]"));
        }
        for o in &self.lev_objects {
            h.push(format!("levenshtein[{o}]"));
        }
        h
    }

    fn row(&self, r: &AnalyzeRow<f64>, human: bool) -> Vec<String> {
        let f = |v: f64| {
            if human {
                fmt_num(v)
            } else {
                format!("{v}")
            }
        };
        let mut out = vec![
            r.episode_id.clone(),
            r.participant_id.clone(),
            r.condition.clone(),
            r.task_id.clone(),
            f(r.metrics.task_time),
            f(r.metrics.idle_time),
            r.metrics.grasp_count.to_string(),
            r.metrics.hand_balance.map(&f).unwrap_or_default(),
            r.levenshtein.map(|v| v.to_string()).unwrap_or_default(),
            r.edits.map(|e| e.unnecessary.to_string()).unwrap_or_default(),
            r.edits.map(|e| e.missing.to_string()).unwrap_or_default(),
            r.edits.map(|e| e.wrong.to_string()).unwrap_or_default(),
            r.rule_violations.len().to_string(),
            r.pointing_mean.map(|v| f(v * 100.0)).unwrap_or_default(),
            r.pointing_sd.map(|v| f(v * 100.0)).unwrap_or_default(),
        ];
        for key in &self.pairs {
            out.push(
                r.metrics
                    .per_object_action_time
                    .get(key)
                    .map(|&v| f(v))
                    .unwrap_or_default(),
            );
        }
        for key in &self.pairs {
            out.push(
                r.metrics
                    .per_object_action_count
                    .get(key)
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            );
        }
        for o in &self.lev_objects {
            out.push(
                r.per_object_levenshtein
                    .get(o)
                    .map(|v| v.to_string())
                    .unwrap_or_default(),
            );
        }
        out
    }
}

pub fn render_analyze(rows: &[AnalyzeRow<f64>], format: OutputFormat) -> String {
    let cols = AnalyzeColumns::collect(rows);
    match format {
        OutputFormat::Csv => {
            let mut out = csv_line(&cols.header());
            out.push('\n');
            for r in rows {
                out.push_str(&csv_line(&cols.row(r, false)));
                out.push('\n');
            }
            out
        }
        OutputFormat::Markdown => {
            let header = cols.header();
            let mut out = format!("| {} |\n", header.join(" | "));
            out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
            for r in rows {
                let cells: Vec<String> = cols
                    .row(r, true)
                    .into_iter()
                    .map(|c| if c.is_empty() { "–".to_string() } else { c })
                    .collect();
                out.push_str(&format!("| {} |\n", cells.join(" | ")));
            }
            out
        }
        OutputFormat::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "episode_id": r.episode_id,
                        "participant_id": r.participant_id,
                        "condition": r.condition,
                        "task_id": r.task_id,
                        "task_time_s": r.metrics.task_time,
                        "idle_time_s": r.metrics.idle_time,
                        "grasp_count": r.metrics.grasp_count,
                        "balance": r.metrics.hand_balance,
                        "levenshtein": r.levenshtein,
                        "edits": r.edits.map(|e| json!({
                            "unnecessary": e.unnecessary,
                            "missing": e.missing,
                            "wrong": e.wrong,
                        })),
                        "rule_violations": r.rule_violations,
                        "pointing_mean_m": r.pointing_mean,
                        "pointing_sd_m": r.pointing_sd,
                        "per_object_action_time_s": r.metrics.per_object_action_time.iter()
                            .map(|((o, a), v)| json!({"object": o, "action": a, "seconds": v}))
                            .collect::<Vec<_>>(),
                        "per_object_action_count": r.metrics.per_object_action_count.iter()
                            .map(|((o, a), v)| json!({"object": o, "action": a, "count": v}))
                            .collect::<Vec<_>>(),
                        "per_object_levenshtein": r.per_object_levenshtein,
                        "pointing_distances_m": r.metrics.pointing_distances.iter()
                            .map(|(t, d)| json!({"target": t, "meters": d}))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect();
            let doc = json!({"report": "analyze", "format_version": 1, "rows": items});
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    }
}

fn comparison_json(c: &ComparisonResult<f64>) -> Value {
    json!({
        "labels": c.labels,
        "centers": c.centers,
        "omnibus_stat": c.omnibus_stat,
        "omnibus_p": c.omnibus_p,
        "levene": c.levene.map(|(w, p)| json!({"w": w, "p": p})),
        "pairs": c.pairs.iter().map(|p| json!({
            "a": p.a,
            "b": p.b,
            "raw_p": p.raw_p,
            "holm_p": p.holm_p,
            "cliffs_delta": p.cliffs_delta,
        })).collect::<Vec<_>>(),
        "direction": c.direction,
        "alpha": c.alpha,
    })
}

pub fn render_compare(report: &GroupReport, format: OutputFormat) -> String {
    let pair_headers: Vec<String> = report
        .tables
        .first()
        .and_then(|t| t.rows.first())
        .map(|r| {
            let labels = &r.comparison.labels;
            let mut pairs = Vec::new();
            for i in 0..labels.len() {
                for j in i + 1..labels.len() {
                    pairs.push(format!("{}-{}", labels[i], labels[j]));
                }
            }
            pairs
        })
        .unwrap_or_default();

    match format {
        OutputFormat::Markdown => {
            let mut out = String::new();
            for table in &report.tables {
                out.push_str(&format!("### {}\n\n", table.section));
                let mut header = vec!["Metric".to_string()];
                header.extend(report.labels.iter().cloned());
                header.push("p-value".to_string());
                for ph in &pair_headers {
                    header.push(format!("{ph} (p, δ)"));
                }
                header.push("Result".to_string());
                out.push_str(&format!("| {} |\n", header.join(" | ")));
                out.push_str(&format!("|{}\n", "---|".repeat(header.len())));
                for row in &table.rows {
                    let c = &row.comparison;
                    let mut cells = vec![row.metric.clone()];
                    for label in &report.labels {
                        let v = c
                            .labels
                            .iter()
                            .position(|l| l == label)
                            .map(|i| fmt_num(c.centers[i]));
                        cells.push(v.unwrap_or_else(|| "–".to_string()));
                    }
                    cells.push(fmt_p(c.omnibus_p, c.alpha));
                    for ph in &pair_headers {
                        let cell = c
                            .pairs
                            .iter()
                            .find(|p| format!("{}-{}", p.a, p.b) == *ph)
                            .map(|p| {
                                format!("{}, {}", fmt_p(p.holm_p, c.alpha), fmt_num(p.cliffs_delta))
                            })
                            .unwrap_or_else(|| "–".to_string());
                        cells.push(cell);
                    }
                    cells.push(c.direction.clone());
                    out.push_str(&format!("| {} |\n", cells.join(" | ")));
                }
                out.push('\n');
            }
            if !report.pointing_pooled.is_empty() {
                out.push_str("### Pooled Pointing (cm)\n\n| Group | Mean | SD |\n|---|---|---|\n");
                for (label, (m, sd)) in &report.pointing_pooled {
                    out.push_str(&format!(
                        "| {} | {} | {} |\n",
                        label,
                        fmt_num(m * 100.0),
                        fmt_num(sd * 100.0)
                    ));
                }
                out.push('\n');
            }
            out
        }
        OutputFormat::Csv => {
            let mut header = vec!["section".to_string(), "metric".to_string()];
            header.extend(report.labels.iter().cloned());
            header.push("omnibus_p".to_string());
            for ph in &pair_headers {
                header.push(format!("raw_p[{ph}]"));
                header.push(format!("holm_p[{ph}]"));
                header.push(format!("delta[{ph}]"));
            }
            header.push("direction".to_string());
            let mut out = csv_line(&header);
            out.push('\n');
            for table in &report.tables {
                for row in &table.rows {
                    let c = &row.comparison;
                    let mut cells = vec![table.section.clone(), row.metric.clone()];
                    for label in &report.labels {
                        let v = c
                            .labels
                            .iter()
                            .position(|l| l == label)
                            .map(|i| format!("{}", c.centers[i]));
                        cells.push(v.unwrap_or_default());
                    }
                    cells.push(format!("{}", c.omnibus_p));
                    for ph in &pair_headers {
                        match c.pairs.iter().find(|p| format!("{}-{}", p.a, p.b) == *ph) {
                            Some(p) => {
                                cells.push(format!("{}", p.raw_p));
                                cells.push(format!("{}", p.holm_p));
                                cells.push(format!("{}", p.cliffs_delta));
                            }
                            None => {
                                cells.push(String::new());
                                cells.push(String::new());
                                cells.push(String::new());
                            }
                        }
                    }
                    cells.push(c.direction.clone());
                    out.push_str(&csv_line(&cells));
                    out.push('\n');
                }
            }
            out
        }
        OutputFormat::Json => {
            let tables: Vec<Value> = report
                .tables
                .iter()
                .map(|t| {
                    json!({
                        "section": t.section,
                        "rows": t.rows.iter().map(|r| json!({
                            "metric": r.metric,
                            "comparison": comparison_json(&r.comparison),
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let pooled: Value = report
                .pointing_pooled
                .iter()
                .map(|(k, (m, sd))| (k.clone(), json!({"mean_m": m, "sd_m": sd})))
                .collect::<serde_json::Map<String, Value>>()
                .into();
            let doc = json!({
                "report": "compare",
                "format_version": 1,
                "group_by": report.group_by,
                "labels": report.labels,
                "alpha": report.alpha,
                "tables": tables,
                "pointing_pooled": pooled,
            });
            serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
        }
    }
}
