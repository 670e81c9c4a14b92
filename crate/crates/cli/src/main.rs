//! `semtraj`: validate, analyze, compare and synthesize semantic trajectory
//! recordings.
//!
//! Exit codes: 0 success, 1 validation/analysis error, 2 usage error.

mod render;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use semtraj::ingest::{load_template, parse_episode, write_episode, ParseError};
use semtraj::model::validate_episode;
use semtraj::report::{analyze_episode, build_group_report, AnalysisOptions, GroupBy};
use semtraj::stats::TestFamily;
use semtraj::synth::{generate_group, rng::derive_seed, BehaviorProfile, TaskScript};
use semtraj::{Episode, TaskTemplate};

use render::{render_analyze, render_compare, OutputFormat};

#[derive(Parser)]
#[command(name = "semtraj", version, about = "Semantic trajectory analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format: markdown, csv or json.
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate episode files; prints one diagnostic per problem.
    Validate {
        /// Episode files or directories containing `.semtraj` files.
        paths: Vec<PathBuf>,
    },
    /// Per-episode metrics and semantic scoring.
    Analyze {
        /// Episode files or directories.
        episodes: Vec<PathBuf>,
        /// Task template (required for semantic scoring and pointing).
        #[arg(long)]
        template: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Cross-group statistical comparison tables.
    Compare {
        /// Episode files or directories.
        episodes: Vec<PathBuf>,
        /// Task template (required for semantic scoring and pointing).
        #[arg(long)]
        template: Option<PathBuf>,
        /// Episode field that forms the groups: condition, participant, task.
        #[arg(long, default_value = "condition")]
        group_by: String,
        /// Keep every k-th path sample for the distance kernels.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Subtract each path's first point before computing distances.
        #[arg(long)]
        normalize_translation: bool,
        /// Significance level for post-hoc gating and direction strings.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Use the parametric family (Levene gate, ANOVA, t-tests).
        #[arg(long)]
        assume_normal: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Generate synthetic episodes.
    Synth {
        /// Built-in script name (cutting, cleaning, table_setup, pointing)
        /// or path to a TOML script.
        #[arg(long)]
        script: String,
        /// TOML profile file with per-condition behavior profiles.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Episodes per condition.
        #[arg(short, long, default_value_t = 2)]
        n: usize,
        /// Output directory for `.semtraj` files.
        #[arg(long)]
        out: PathBuf,
        /// Override the base seed of every condition.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Validate { paths } => cmd_validate(&paths),
        Command::Analyze {
            episodes,
            template,
            output,
        } => {
            let format = parse_format(&output)?;
            let text = cmd_analyze(&episodes, template.as_deref(), format)?;
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            episodes,
            template,
            group_by,
            stride,
            normalize_translation,
            alpha,
            assume_normal,
            output,
        } => {
            let opts = AnalysisOptions {
                stride: if stride == 0 { 1 } else { stride },
                normalize_translation,
                alpha,
                family: if assume_normal {
                    TestFamily::Parametric
                } else {
                    TestFamily::Nonparametric
                },
                group_by: GroupBy::parse(&group_by)
                    .ok_or_else(|| anyhow!("unknown group-by field '{group_by}'"))?,
            };
            let format = parse_format(&output)?;
            let text = cmd_compare(&episodes, template.as_deref(), &opts, format)?;
            emit(&output, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth {
            script,
            profile,
            n,
            out,
            seed,
        } => cmd_synth(&script, profile.as_deref(), n, &out, seed),
    }
}

fn emit(output: &OutputArgs, text: &str) -> Result<()> {
    match &output.out {
        Some(path) => {
            let mut f = File::create(path)
                .with_context(|| format!("cannot create {}", path.display()))?;
            f.write_all(text.as_bytes())?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn parse_format(output: &OutputArgs) -> Result<OutputFormat> {
    OutputFormat::parse(&output.format)
        .ok_or_else(|| anyhow!("unknown format '{}'", output.format))
}

/// Expands files and directories into a sorted list of `.semtraj` paths.
fn collect_episode_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("cannot read directory {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.extension().is_some_and(|x| x == "semtraj"))
                .collect();
            entries.sort();
            out.extend(entries);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        bail!("no episodes");
    }
    Ok(out)
}

fn parse_error_kind(e: &ParseError) -> (&'static str, usize) {
    match e {
        ParseError::MalformedRecord { line, .. } => ("MalformedRecord", *line),
        ParseError::MissingHeader => ("MissingHeader", 0),
        ParseError::NonMonotonicTimestamp { line, .. } => ("NonMonotonicTimestamp", *line),
        ParseError::NonFiniteValue { line, .. } => ("NonFiniteValue", *line),
        ParseError::UnknownRecordKind { line, .. } => ("UnknownRecordKind", *line),
        ParseError::Io(_) => ("IoFailure", 0),
    }
}

fn load_episode(path: &Path) -> Result<Episode, ParseError> {
    let file = File::open(path).map_err(ParseError::from)?;
    parse_episode(BufReader::new(file))
}

fn cmd_validate(paths: &[PathBuf]) -> Result<ExitCode> {
    let files = collect_episode_paths(paths)?;
    let mut ok = true;
    for path in &files {
        match load_episode(path) {
            Ok(ep) => {
                for v in validate_episode(&ep) {
                    ok = false;
                    println!("{}:0: Violation: {v}", path.display());
                }
            }
            Err(e) => {
                ok = false;
                let (kind, line) = parse_error_kind(&e);
                println!("{}:{}: {}: {}", path.display(), line, kind, e);
            }
        }
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn load_episodes(paths: &[PathBuf]) -> Result<Vec<Episode>> {
    let files = collect_episode_paths(paths)?;
    files
        .iter()
        .map(|path| {
            load_episode(path).map_err(|e| {
                let (kind, line) = parse_error_kind(&e);
                anyhow!("{}:{}: {}: {}", path.display(), line, kind, e)
            })
        })
        .collect()
}

fn load_template_file(path: &Path) -> Result<TaskTemplate> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    load_template(BufReader::new(file))
        .with_context(|| format!("template {}", path.display()))
}

fn cmd_analyze(
    paths: &[PathBuf],
    template: Option<&Path>,
    format: OutputFormat,
) -> Result<String> {
    let episodes = load_episodes(paths)?;
    let tmpl = template.map(load_template_file).transpose()?;
    let rows = episodes
        .iter()
        .map(|ep| analyze_episode(ep, tmpl.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render_analyze(&rows, format))
}

fn cmd_compare(
    paths: &[PathBuf],
    template: Option<&Path>,
    opts: &AnalysisOptions<f64>,
    format: OutputFormat,
) -> Result<String> {
    let episodes = load_episodes(paths)?;
    let tmpl = template.map(load_template_file).transpose()?;
    let report = build_group_report(&episodes, tmpl.as_ref(), opts)?;
    Ok(render_compare(&report, format))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    format_version: u32,
    #[serde(default)]
    base_seed: Option<u64>,
    conditions: BTreeMap<String, BehaviorProfile>,
}

fn load_profiles(
    path: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<BTreeMap<String, BehaviorProfile>> {
    let mut conditions = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot open {}", p.display()))?;
            let file: ProfileFile =
                toml::from_str(&text).with_context(|| format!("profile {}", p.display()))?;
            if file.format_version != 1 {
                bail!("profile {}: unsupported format_version", p.display());
            }
            let mut conditions = file.conditions;
            if let Some(base) = file.base_seed {
                for profile in conditions.values_mut() {
                    if profile.seed == 0 {
                        profile.seed = base;
                    }
                }
            }
            conditions
        }
        None => {
            let mut m = BTreeMap::new();
            m.insert("default".to_string(), BehaviorProfile::default());
            m
        }
    };
    if let Some(seed) = seed_override {
        for profile in conditions.values_mut() {
            profile.seed = seed;
        }
    }
    if conditions.is_empty() {
        bail!("profile defines no conditions");
    }
    Ok(conditions)
}

fn load_script(name_or_path: &str) -> Result<TaskScript> {
    if let Some(builtin) = TaskScript::builtin(name_or_path) {
        return Ok(builtin);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        return Ok(TaskScript::from_toml(&text)?);
    }
    bail!(
        "'{name_or_path}' is neither a built-in script (cutting, cleaning, table_setup, pointing) nor a file"
    );
}

fn cmd_synth(
    script: &str,
    profile: Option<&Path>,
    n: usize,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let script = load_script(script)?;
    let profiles = load_profiles(profile, seed)?;
    let episodes = generate_group::<f64>(&script, &profiles, n)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    for (ep, _) in &episodes {
        let path = out_dir.join(format!("{}.semtraj", ep.episode_id));
        let mut file =
            File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
        write_episode(ep, &mut file)?;
        let index: usize = ep
            .episode_id
            .rsplit('-')
            .next()
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        let base = profiles[&ep.condition].seed;
        println!(
            "{} condition={} seed={:#018x}",
            path.display(),
            ep.condition,
            derive_seed(base, &ep.condition, index as u64)
        );
    }
    Ok(ExitCode::SUCCESS)
}
