//! Datasets, metrics and experiment orchestration.

mod dataset;
mod experiment;
mod metrics;

pub use dataset::{cqa_build_claim, load_dataset, parse_dataset, Dataset, DatasetSummary, Example, Split};
pub use experiment::{
    checkpoint_dir, engines_name, featurize, predict, prepare, run_experiment, sources_name, ClaimInput, EvidenceStore,
    ExperimentConfig, ExperimentOutcome, ExperimentRunner, FixtureSources, ModelKind, PolicyChoice, Prediction,
    PredictionRecord, PreparedExample, Resources, Task, TrainedArtifacts,
};
pub use metrics::{
    compute_metrics, constant_predictions, format_percent, ClassMetrics, Confusion, MetricsReport, MetricsTable,
    TABLE_COLUMNS,
};
