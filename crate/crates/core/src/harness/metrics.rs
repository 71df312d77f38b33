use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::episode::{EndReason, EpisodeTrace};
use crate::model::Conditions;

/// One CSV row per episode. Every reported statistic is recomputed from these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub policy: String,
    pub index: u64,
    pub initial_state: String,
    pub initially_sick: bool,
    pub steps: usize,
    pub end: EndReason,
    pub disc_return: f64,
    pub final_state: String,
    pub recovered: bool,
    pub time_to_treatment: Option<u32>,
}

impl EpisodeSummary {
    pub fn from_trace(trace: &EpisodeTrace, horizon: u32) -> EpisodeSummary {
        EpisodeSummary {
            policy: trace.policy.clone(),
            index: trace.index,
            initial_state: trace.initial_state.conditions().to_string(),
            initially_sick: trace.initial_state.any_stroke(),
            steps: trace.steps.len(),
            end: trace.end,
            disc_return: trace.disc_return,
            final_state: trace.final_state.conditions().to_string(),
            recovered: trace.recovered(),
            time_to_treatment: trace.time_to_treatment(horizon),
        }
    }

    pub fn failed(&self) -> bool {
        self.end == EndReason::Failed
    }
}

/// Which episodes the recovery rate is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryPopulation {
    /// Patients who arrived with at least one condition.
    InitiallySick,
    /// Every episode; used only when nobody arrived sick.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyMetrics {
    pub policy: String,
    pub episodes: usize,
    pub failed: usize,
    pub recovery_rate: f64,
    pub recovery_population: RecoveryPopulation,
    pub recovery_n: usize,
    pub disc_reward_mean: f64,
    pub disc_reward_std: f64,
    pub disc_reward_se: f64,
    pub time_to_treatment_mean: Option<f64>,
    pub time_to_treatment_std: Option<f64>,
    pub time_to_treatment_se: Option<f64>,
    pub time_to_treatment_n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no episodes to summarize")]
    Empty,
    #[error("every episode failed")]
    AllFailed,
}

/// Mean, sample standard deviation (n - 1) and standard error. The spread is
/// zero for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    (mean, std, std / n.sqrt())
}

/// Aggregate one policy's episodes. Failed episodes are counted and excluded.
pub fn compute_metrics(summaries: &[EpisodeSummary]) -> Result<PolicyMetrics, MetricsError> {
    let first = summaries.first().ok_or(MetricsError::Empty)?;
    let ok: Vec<&EpisodeSummary> = summaries.iter().filter(|s| !s.failed()).collect();
    if ok.is_empty() {
        return Err(MetricsError::AllFailed);
    }
    let returns: Vec<f64> = ok.iter().map(|s| s.disc_return).collect();
    let (mean, std, se) = mean_std(&returns);

    let sick: Vec<&&EpisodeSummary> = ok.iter().filter(|s| s.initially_sick).collect();
    let (population, recovered, recovery_n) = if sick.is_empty() {
        (RecoveryPopulation::All, ok.iter().filter(|s| s.recovered).count(), ok.len())
    } else {
        (RecoveryPopulation::InitiallySick, sick.iter().filter(|s| s.recovered).count(), sick.len())
    };

    let ttt: Vec<f64> = ok.iter().filter_map(|s| s.time_to_treatment).map(f64::from).collect();
    let (ttt_mean, ttt_std, ttt_se) = if ttt.is_empty() {
        (None, None, None)
    } else {
        let (m, s, e) = mean_std(&ttt);
        (Some(m), Some(s), Some(e))
    };

    Ok(PolicyMetrics {
        policy: first.policy.clone(),
        episodes: summaries.len(),
        failed: summaries.len() - ok.len(),
        recovery_rate: recovered as f64 / recovery_n as f64,
        recovery_population: population,
        recovery_n,
        disc_reward_mean: mean,
        disc_reward_std: std,
        disc_reward_se: se,
        time_to_treatment_mean: ttt_mean,
        time_to_treatment_std: ttt_std,
        time_to_treatment_se: ttt_se,
        time_to_treatment_n: ttt.len(),
    })
}

/// Fixed-width bins; values outside the range land in the end bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lower: f64,
    pub width: f64,
    pub n: usize,
    pub counts: Vec<u64>,
    /// Counts divided by `n`; all zero when `n` is zero.
    pub mass: Vec<f64>,
}

impl Histogram {
    pub fn build(lower: f64, width: f64, bins: usize, values: impl IntoIterator<Item = f64>) -> Histogram {
        let mut counts = vec![0u64; bins];
        let mut n = 0;
        for v in values {
            let i = ((v - lower) / width).floor();
            let i = if i < 0.0 { 0 } else { (i as usize).min(bins - 1) };
            counts[i] += 1;
            n += 1;
        }
        let mass = counts.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect();
        Histogram { lower, width, n, counts, mass }
    }
}

pub const REWARD_BIN_LOWER: f64 = -160_000.0;
pub const REWARD_BIN_WIDTH: f64 = 5_000.0;
pub const REWARD_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyHistograms {
    pub policy: String,
    pub disc_reward: Histogram,
    pub disc_reward_stroke: Histogram,
    pub disc_reward_stroke_free: Histogram,
    /// One bin per epoch, 0 through the horizon.
    pub time_to_treatment: Histogram,
}

impl PolicyHistograms {
    pub fn build(policy: &str, summaries: &[EpisodeSummary], horizon: u32) -> PolicyHistograms {
        let ok: Vec<&EpisodeSummary> = summaries.iter().filter(|s| !s.failed()).collect();
        let rewards = |keep: &dyn Fn(&EpisodeSummary) -> bool| {
            Histogram::build(
                REWARD_BIN_LOWER,
                REWARD_BIN_WIDTH,
                REWARD_BINS,
                ok.iter().filter(|s| keep(s)).map(|s| s.disc_return),
            )
        };
        PolicyHistograms {
            policy: policy.to_string(),
            disc_reward: rewards(&|_| true),
            disc_reward_stroke: rewards(&|s| s.initially_sick),
            disc_reward_stroke_free: rewards(&|s| !s.initially_sick),
            time_to_treatment: Histogram::build(
                0.0,
                1.0,
                horizon as usize + 1,
                ok.iter().filter_map(|s| s.time_to_treatment).map(f64::from),
            ),
        }
    }
}

/// Parse a condition set written by [`Conditions`]'s `Display`.
pub fn parse_conditions(text: &str) -> Option<Conditions> {
    Conditions::all().find(|c| c.to_string() == text)
}
