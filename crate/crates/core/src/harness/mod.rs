//! Training, evaluation and diagnostic commands behind the `glno` binary.
mod config;
mod data;
mod metrics;
mod tools;
mod train;

pub use config::{GradcheckConfig, KeyValues, LossKind, RunConfig, Scaling};
pub use data::{LoadedDataset, Normalization};
pub use metrics::{
    accuracy, labels_from_targets, loglog_slope, nll_loss, relative_l2, relative_l2_var,
    MetricsRecord,
};
pub use tools::{
    bench_forward, bench_network, check_gradcheck, check_spectrum, dump_spectrum, mesh_spectrum,
    parse_sizes, run_gradcheck, BenchReport, SpectrumSummary,
};
pub use train::{
    check_evaluation, evaluate, evaluate_checkpoint, load_model, plan_training, save_model, train,
    CheckpointMeta, EvalReport, TrainPlan, TrainSummary, CHECKPOINT_FILE, METRICS_FILE,
    SUMMARY_FILE,
};
