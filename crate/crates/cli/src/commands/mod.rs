pub mod annotate;
pub mod evaluate;
pub mod generate;
pub mod pipeline;
pub mod retrieve;
pub mod stats;

pub use annotate::{cmd_annotate, AnnotateArgs, AnnotateOutcome};
pub use evaluate::{cmd_evaluate, EvaluateArgs, EvaluateOutcome, EvaluationReport};
pub use generate::{cmd_generate, GenerateArgs, GenerateOutcome};
pub use pipeline::{cmd_pipeline, PipelineOutcome};
pub use retrieve::{cmd_retrieve, RetrieveArgs, RetrieveOutcome};
pub use stats::{cmd_stats, stats_text, StatsArgs};

/// Bounded pool for per-item work. Results are collected in input order,
/// so output files never depend on scheduling.
pub(crate) fn worker_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
}
