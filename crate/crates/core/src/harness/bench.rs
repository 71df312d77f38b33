use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::episode::{run_episode, EpisodeSeed, EpisodeTrace};
use super::metrics::{compute_metrics, EpisodeSummary, MetricsError, PolicyHistograms, PolicyMetrics};
use crate::despot::{DespotPolicy, Planner, SolverConfig};
use crate::error::ConfigError;
use crate::model::{Action, Model, PatientState};
use crate::policy::{ExpertConfig, ExpertPolicy, Policy, PolicyKind, RandomPolicy};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Replication indices used for the sampled traces, far away from the
/// benchmark's own indices.
pub const MILD_TRACE_INDEX: u64 = 1 << 40;
pub const SEVERE_TRACE_INDEX: u64 = (1 << 40) + 1;

pub fn mild_case() -> PatientState {
    PatientState::new(true, false, false, 0)
}

pub fn severe_case() -> PatientState {
    PatientState::new(false, true, true, 0)
}

/// Build a policy by name. Expert rules read the belief named by
/// `model.params().expert_belief`; the planner reads `solver.belief`.
pub fn make_policy(kind: PolicyKind, model: &Arc<Model>, solver: &SolverConfig) -> Result<Box<dyn Policy>, ConfigError> {
    let expert = |default| -> Result<Box<dyn Policy>, ConfigError> {
        let cfg = ExpertConfig::new(default, model.params())?;
        Ok(Box::new(ExpertPolicy::new(kind.name(), cfg).with_backend(model.params().expert_belief)))
    };
    Ok(match kind {
        PolicyKind::Random => Box::new(RandomPolicy),
        PolicyKind::ExpertHosp => expert(Action::Hosp)?,
        PolicyKind::ExpertDsa => expert(Action::Dsa)?,
        PolicyKind::Despot => Box::new(DespotPolicy::new(Planner::new(model.clone(), solver.clone())?)),
    })
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub policies: Vec<PolicyKind>,
    pub episodes: usize,
    pub master_seed: u64,
    /// Worker threads; results do not depend on this.
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct PolicyRun {
    pub policy: PolicyKind,
    pub summaries: Vec<EpisodeSummary>,
    pub metrics: Result<PolicyMetrics, MetricsError>,
    pub histograms: PolicyHistograms,
    pub mild_trace: EpisodeTrace,
    pub severe_trace: EpisodeTrace,
}

#[derive(Debug, Clone)]
pub struct BenchmarkResult {
    pub master_seed: u64,
    pub episodes: usize,
    pub gamma: f64,
    pub horizon: u32,
    pub runs: Vec<PolicyRun>,
}

impl BenchmarkResult {
    pub fn failed_episodes(&self) -> usize {
        self.runs.iter().map(|r| r.summaries.iter().filter(|s| s.failed()).count()).sum()
    }

    pub fn report(&self) -> BenchmarkReport {
        BenchmarkReport {
            schema_version: REPORT_SCHEMA_VERSION,
            master_seed: self.master_seed,
            episodes: self.episodes,
            gamma: self.gamma,
            horizon: self.horizon,
            policies: self.runs.iter().filter_map(|r| r.metrics.clone().ok()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub master_seed: u64,
    pub episodes: usize,
    pub gamma: f64,
    pub horizon: u32,
    pub policies: Vec<PolicyMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramFile {
    pub schema_version: u32,
    pub policies: Vec<PolicyHistograms>,
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("episodes must be at least 1")]
    NoEpisodes,
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Run every policy on the same `episodes` seeded patients.
pub fn run_benchmark(model: Arc<Model>, solver: &SolverConfig, cfg: &BenchConfig) -> Result<BenchmarkResult, BenchError> {
    if cfg.episodes == 0 {
        return Err(BenchError::NoEpisodes);
    }
    // fail on bad solver settings before spawning anything
    for &kind in &cfg.policies {
        make_policy(kind, &model, solver)?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers.max(1)).build()?;
    let horizon = model.horizon();
    let runs = cfg
        .policies
        .iter()
        .map(|&kind| {
            let traces: Vec<EpisodeTrace> = pool.install(|| {
                (0..cfg.episodes as u64)
                    .into_par_iter()
                    .map(|index| {
                        let mut policy = make_policy(kind, &model, solver).expect("validated above");
                        run_episode(&model, policy.as_mut(), EpisodeSeed { master_seed: cfg.master_seed, index }, None)
                    })
                    .collect()
            });
            let summaries: Vec<EpisodeSummary> = traces.iter().map(|t| EpisodeSummary::from_trace(t, horizon)).collect();
            let sample = |index, state| {
                let mut policy = make_policy(kind, &model, solver).expect("validated above");
                run_episode(&model, policy.as_mut(), EpisodeSeed { master_seed: cfg.master_seed, index }, Some(state))
            };
            PolicyRun {
                policy: kind,
                metrics: compute_metrics(&summaries),
                histograms: PolicyHistograms::build(kind.name(), &summaries, horizon),
                mild_trace: sample(MILD_TRACE_INDEX, mild_case()),
                severe_trace: sample(SEVERE_TRACE_INDEX, severe_case()),
                summaries,
            }
        })
        .collect();
    Ok(BenchmarkResult { master_seed: cfg.master_seed, episodes: cfg.episodes, gamma: model.gamma(), horizon, runs })
}

/// Write `report.json`, `episodes.csv`, `histograms.json` and
/// `traces/<policy>-{mild,severe}.json` under `dir`.
pub fn write_artifacts(result: &BenchmarkResult, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir.join("traces"))?;
    write_json(&dir.join("report.json"), &result.report())?;

    let mut csv = csv::Writer::from_path(dir.join("episodes.csv"))?;
    for run in &result.runs {
        for row in &run.summaries {
            csv.serialize(row)?;
        }
    }
    csv.flush()?;

    let histograms = HistogramFile {
        schema_version: REPORT_SCHEMA_VERSION,
        policies: result.runs.iter().map(|r| r.histograms.clone()).collect(),
    };
    write_json(&dir.join("histograms.json"), &histograms)?;

    for run in &result.runs {
        write_json(&dir.join("traces").join(format!("{}-mild.json", run.policy)), &run.mild_trace)?;
        write_json(&dir.join("traces").join(format!("{}-severe.json", run.policy)), &run.severe_trace)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Read back the per-episode CSV.
pub fn read_summaries(path: &Path) -> Result<Vec<EpisodeSummary>, csv::Error> {
    csv::Reader::from_path(path)?.deserialize().collect()
}
