//! Loss, metrics, the training loop, checkpointing, sweeps, and ablations.

mod checkpoint;
mod loss;
mod metrics;
mod runner;
mod trainer;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use loss::{batch_loss, example_nll, l2_penalty};
pub use metrics::{accuracy, evaluate, macro_f1, ClassMetrics, MetricsReport};
pub use runner::{
    layer_sweep, run_ablation, sweep_csv, AblationVariant, ExperimentData, SweepRow, SWEEP_HEADER,
};
pub use trainer::{
    epoch_log_csv, predict, predict_probs, EpochRecord, TrainConfig, TrainOutcome, Trainer,
    EPOCH_LOG_HEADER,
};
