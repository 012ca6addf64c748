//! Benchmark harness: run configuration, map families and tasks, the
//! replanning navigator, closed-loop runs with manual interventions, and
//! metrics and reports.

mod config;
mod maps;
mod metrics;
mod nav;
mod report;
mod run;
mod task;

pub use config::{derive_seed, BenchConfig, RunConfig};
pub use maps::{generate, layout_a, CorridorMap, Family, RESOLUTION};
pub use metrics::{mean_jerk, RunMetrics};
pub use nav::Navigator;
pub use report::{find, format_table, trace_image, write_trace};
pub use run::{run_task, Method, RunOutcome, Trace, TraceSample};
pub use task::{benchmark_suite, benchmark_task, collection_tasks, junction_task, training_suite, walk_task, TaskSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("task: {0}")]
    Task(String),
    #[error("io: {0}")]
    Io(String),
    #[error("metrics: {0}")]
    Metrics(String),
}
