//! Euclidean link-prediction baselines and initialisation-time probes.

mod metrics;
mod model;
mod probes;
mod sweep;
mod train;

pub use metrics::{auc_of, roc_auc};
pub use model::{
    fermi_dirac, loss_and_grad, normalized_adjacency, pair_loss, Adam, Encoder, FermiDiracParams, ForwardCache, Gradient,
    Layer, Model, ModelConfig, NormalizedAdjacency, DENSE_NODE_CAP,
};
pub use probes::{
    gat_attention_concentration, sage_aggregation_covariance, AggregationStats, AttentionStats, GAT_OUT_DIM,
};
pub use sweep::{default_grid, gamma_sweep, mean_std, trial_data, tuned_trials, SweepRow, SweepSettings, SweepTable};
pub use train::{score_pairs, train_link_predictor, EpochStats, TrainReport};

use thiserror::Error;

use crate::treegen::{SplitError, TreeGenError};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dense adjacency for {0} nodes exceeds the size cap")]
    SizeLimit(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid splits: {0}")]
    InvalidSplits(String),
    #[error("ROC AUC needs both classes")]
    SingleClass,
    #[error("score is NaN")]
    NonFiniteScore,
    #[error("training diverged at epoch {}", .0.per_epoch.len())]
    NonFiniteLoss(Box<TrainReport>),
    #[error(transparent)]
    TreeGen(#[from] TreeGenError),
    #[error(transparent)]
    Split(#[from] SplitError),
}
