//! Semantic trajectory analytics for recorded task executions.
//!
//! The pipeline: [`ingest`] parses `.semtraj` recordings and task
//! templates, [`segment`] splits object motion at action-set transitions
//! and compresses it into pure semantic sequences, [`metrics`] computes
//! behavioral measures, [`distance`] scores executions (edit distance) and
//! spatial similarity (DTW, discrete Fréchet), [`stats`] runs the group
//! comparisons, [`synth`] generates synthetic episodes for testing, and
//! [`report`] assembles the comparison tables the CLI renders.
//!
//! All numeric kernels are generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which is what the file
//! formats and the CLI use.

pub mod distance;
pub mod geom;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod num;
pub mod report;
pub mod segment;
pub mod stats;
pub mod synth;

/// f64-backed position vector (meters).
pub type Vec3 = geom::Vec3<f64>;
/// f64-backed pose.
pub type Pose = model::Pose<f64>;
/// f64-backed episode, the type the `.semtraj` format carries.
pub type Episode = model::Episode<f64>;
/// f64-backed trajectory.
pub type Trajectory = model::Trajectory<f64>;
/// f64-backed semantic point.
pub type SemanticPoint = model::SemanticPoint<f64>;
/// f64-backed task template.
pub type TaskTemplate = ingest::TaskTemplate<f64>;
/// f64-backed per-episode metrics.
pub type EpisodeMetrics = metrics::EpisodeMetrics<f64>;
/// f64-backed grouped sample for the statistical tests.
pub type GroupedSample = stats::GroupedSample<f64>;
/// f64-backed group comparison result.
pub type ComparisonResult = stats::ComparisonResult<f64>;
/// f64-backed group report.
pub type GroupReport = report::GroupReport<f64>;
