//! Adam optimization, the training loop, epoch logs and checkpoints.

mod adam;
mod checkpoint;
mod config;
mod fit;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{
    read_header, Checkpoint, CheckpointHeader, TensorInfo, FORMAT_VERSION, MAGIC,
};
pub use config::TrainConfig;
pub use fit::{
    dataset_table, evaluate_loss, fit, normalize_dataset, stratified_split, train_epoch,
    write_epoch_log, EpochLog, FitOutput, Summary, EPOCH_LOG_HEADER,
};
