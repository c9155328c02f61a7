//! Tuned multi-seed evaluation on the tree family and the γ sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{FermiDiracParams, ModelConfig};
use super::train::{train_link_predictor, TrainReport};
use super::BaselineError;
use crate::rng;
use crate::treegen::{generate_dataset, make_splits, Dataset, SplitSpec, TreeParams};

const SPLIT_SALT: u64 = 1 << 32;
const MODEL_SALT: u64 = 2 << 32;

/// `lr ∈ {1e-3, 1e-2} × weight_decay ∈ {0, 1e-4} × width ∈ {128, 256}`,
/// with the depth and remaining settings of `base`. The width applies to
/// every layer, the embedding included.
pub fn default_grid(base: &ModelConfig) -> Vec<ModelConfig> {
    let mut out = Vec::with_capacity(8);
    for lr in [1e-3, 1e-2] {
        for wd in [0.0, 1e-4] {
            for width in [128, 256] {
                out.push(ModelConfig {
                    learning_rate: lr,
                    weight_decay: wd,
                    hidden_dims: vec![width; base.hidden_dims.len().max(1)],
                    embed_dim: base.embed_dim.map(|_| width),
                    ..base.clone()
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub trials: usize,
    pub seed: u64,
    pub fracs: (f64, f64, f64),
    pub fermi_dirac: FermiDiracParams,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            trials: 5,
            seed: 0,
            fracs: crate::treegen::DEFAULT_FRACS,
            fermi_dirac: FermiDiracParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub mean_auc: f64,
    /// Population standard deviation over trials.
    pub std_auc: f64,
    pub n_trials: usize,
    pub test_aucs: Vec<f64>,
    /// Configuration picked by validation AUC on the first trial.
    pub best_config: ModelConfig,
    /// Validation AUC of every grid entry on the first trial (`None` when
    /// training diverged).
    pub tuning_val_auc: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("gamma,mean_auc,std_auc,n_trials\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.6},{:.6},{}\n", r.gamma, r.mean_auc, r.std_auc, r.n_trials));
        }
        s
    }
}

/// Dataset and splits of trial `t`. The feature seed depends only on the
/// trial, so sweeps over γ reuse the same Gaussian draws.
pub fn trial_data(params: &TreeParams, settings: &SweepSettings, trial: usize) -> Result<(Dataset, SplitSpec), BaselineError> {
    let p = TreeParams {
        seed: rng::derive_seed(settings.seed, trial as u64),
        ..*params
    };
    let ds = generate_dataset(&p)?;
    let splits = make_splits(&ds.graph, settings.fracs, rng::derive_seed(settings.seed, SPLIT_SALT | trial as u64))?;
    Ok((ds, splits))
}

fn with_trial_seed(cfg: &ModelConfig, settings: &SweepSettings, trial: usize) -> ModelConfig {
    ModelConfig {
        seed: rng::derive_seed(settings.seed, MODEL_SALT | trial as u64),
        ..cfg.clone()
    }
}

/// Tunes over `grid` on trial 0 by validation AUC (first best wins), then
/// reports test AUC of the chosen configuration on every trial.
pub fn tuned_trials(params: &TreeParams, grid: &[ModelConfig], settings: &SweepSettings) -> Result<SweepRow, BaselineError> {
    if settings.trials == 0 || grid.is_empty() {
        return Err(BaselineError::InvalidConfig("need at least one trial and one configuration".into()));
    }
    let (ds0, sp0) = trial_data(params, settings, 0)?;
    let tuning: Vec<Result<TrainReport, BaselineError>> = grid
        .par_iter()
        .map(|cfg| train_link_predictor(&ds0, &sp0, &with_trial_seed(cfg, settings, 0), &settings.fermi_dirac))
        .collect();
    let mut best: Option<(usize, f64, f64)> = None;
    let mut tuning_val_auc = Vec::with_capacity(grid.len());
    for (i, res) in tuning.into_iter().enumerate() {
        match res {
            Ok(rep) => {
                tuning_val_auc.push(Some(rep.best_val_auc));
                if best.is_none_or(|(_, v, _)| rep.best_val_auc > v) {
                    best = Some((i, rep.best_val_auc, rep.test_auc));
                }
            }
            Err(BaselineError::NonFiniteLoss(_)) => tuning_val_auc.push(None),
            Err(e) => return Err(e),
        }
    }
    let (bi, _, first) = best.ok_or_else(|| BaselineError::InvalidConfig("every grid configuration diverged".into()))?;
    let rest: Vec<f64> = (1..settings.trials)
        .into_par_iter()
        .map(|t| {
            let (ds, sp) = trial_data(params, settings, t)?;
            Ok(train_link_predictor(&ds, &sp, &with_trial_seed(&grid[bi], settings, t), &settings.fermi_dirac)?.test_auc)
        })
        .collect::<Result<_, BaselineError>>()?;
    let mut test_aucs = vec![first];
    test_aucs.extend(rest);
    let (mean, std) = mean_std(&test_aucs);
    Ok(SweepRow {
        gamma: params.gamma,
        mean_auc: mean,
        std_auc: std,
        n_trials: test_aucs.len(),
        test_aucs,
        best_config: grid[bi].clone(),
        tuning_val_auc,
    })
}

pub fn gamma_sweep(
    gammas: &[f64],
    base: &TreeParams,
    grid: &[ModelConfig],
    settings: &SweepSettings,
) -> Result<SweepTable, BaselineError> {
    let rows = gammas
        .par_iter()
        .map(|&gamma| tuned_trials(&TreeParams { gamma, ..*base }, grid, settings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepTable { rows })
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
