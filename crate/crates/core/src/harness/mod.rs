//! Seeded episode simulation, benchmark aggregation and artifact export.

mod bench;
mod episode;
mod metrics;

pub use bench::{
    make_policy, mild_case, read_summaries, run_benchmark, severe_case, write_artifacts, write_json, BenchConfig,
    BenchError, BenchmarkReport, BenchmarkResult, HistogramFile, PolicyRun, MILD_TRACE_INDEX, REPORT_SCHEMA_VERSION,
    SEVERE_TRACE_INDEX,
};
pub use episode::{
    initial_state_for, run_episode, EndReason, EpisodeSeed, EpisodeTrace, TraceStep, TRACE_SCHEMA_VERSION,
};
pub use metrics::{
    compute_metrics, mean_std, parse_conditions, EpisodeSummary, Histogram, MetricsError, PolicyHistograms,
    PolicyMetrics, RecoveryPopulation, REWARD_BINS, REWARD_BIN_LOWER, REWARD_BIN_WIDTH,
};
