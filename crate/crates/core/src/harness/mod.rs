//! Desk-scale dynamic link prediction: synthetic recency-driven data,
//! a one-layer attention link model, training with early stopping,
//! ranking metrics, and the width / modulation sweeps.

mod checkpoint;
mod metrics;
mod model;
mod sweep;
mod synth;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use metrics::{
    destination_universe, evaluate_model, rank_pessimistic, sample_negatives, RankingResult,
};
pub use model::{KernelChoice, LambdaSpec, LinkModel, ModelConfig, ModelVars};
pub use sweep::{ablate_modulation, run_benchmark_cell, sweep_sigma, CellResult, SweepRow, INFINITE_WIDTH};
pub use synth::{gen_synthetic, SynthConfig};
pub use train::{train, Adam, TrainHistory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Numeric(#[from] crate::numeric::NumericError),
    #[error("{0}")]
    Domain(String),
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint parse error at line {line}: {message}")]
    Checkpoint { line: usize, message: String },
}

pub type HarnessResult<T> = Result<T, HarnessError>;
