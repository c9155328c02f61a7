use std::collections::HashSet;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{pair_loss, Adam, Encoder, FermiDiracParams, Model, ModelConfig, NormalizedAdjacency};
use super::{auc_of, BaselineError};
use crate::rng;
use crate::treegen::{Dataset, SplitSpec};

const NEG_STREAM: u64 = 0x2;
const DROPOUT_STREAM: u64 = 0x3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub loss: f64,
    pub val_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: ModelConfig,
    pub dataset_id: String,
    pub per_epoch: Vec<EpochStats>,
    /// Test AUC at the epoch with the best validation AUC.
    pub test_auc: f64,
    pub best_val_auc: f64,
    pub best_epoch: usize,
    /// Decoder parameters at the best epoch.
    pub fermi_dirac: FermiDiracParams,
    pub diverged: bool,
}

/// Probabilities the model assigns to `pairs`.
pub fn score_pairs(emb: &Array2<f64>, pairs: &[(usize, usize)], fd: &FermiDiracParams) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(u, v)| {
            let diff = &emb.row(u) - &emb.row(v);
            super::fermi_dirac(diff.dot(&diff), fd)
        })
        .collect()
}

fn check_splits(ds: &Dataset, s: &SplitSpec) -> Result<(), BaselineError> {
    let n = ds.graph.num_nodes();
    let all = [&s.train_pos, &s.val_pos, &s.test_pos, &s.val_neg, &s.test_neg];
    if all.iter().flat_map(|v| v.iter()).any(|&(u, v)| u >= n || v >= n || u == v) {
        return Err(BaselineError::InvalidSplits("pair outside the node range".into()));
    }
    if s.train_pos.is_empty() || s.val_pos.is_empty() || s.test_pos.is_empty() {
        return Err(BaselineError::InvalidSplits("empty positive split".into()));
    }
    if s.val_neg.is_empty() || s.test_neg.is_empty() {
        return Err(BaselineError::InvalidSplits("empty negative split".into()));
    }
    if s.val_neg.iter().chain(&s.test_neg).any(|&(u, v)| ds.graph.has_edge(u, v)) {
        return Err(BaselineError::InvalidSplits("negative pair is an edge".into()));
    }
    if s.train_pos.iter().chain(&s.val_pos).chain(&s.test_pos).any(|&(u, v)| !ds.graph.has_edge(u, v)) {
        return Err(BaselineError::InvalidSplits("positive pair is not an edge".into()));
    }
    Ok(())
}

fn sample_negatives<R: Rng>(n: usize, count: usize, forbidden: &HashSet<(usize, usize)>, rng: &mut R) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let e = (u.min(v), u.max(v));
        if !forbidden.contains(&e) {
            out.push(e);
        }
    }
    out
}

/// Trains one link predictor. GCN propagation uses the training edges only.
///
/// Each epoch draws `|train_pos|` fresh negatives uniformly from pairs that
/// are neither edges nor frozen validation/test negatives. Training stops
/// after `patience` epochs without a validation improvement.
pub fn train_link_predictor(
    ds: &Dataset,
    splits: &SplitSpec,
    config: &ModelConfig,
    fd: &FermiDiracParams,
) -> Result<TrainReport, BaselineError> {
    config.validate()?;
    if !(fd.t > 0.0) {
        return Err(BaselineError::InvalidConfig("temperature must be positive".into()));
    }
    check_splits(ds, splits)?;
    let n = ds.graph.num_nodes();
    let x = ds.features.mapv(f64::from);
    let adj = match config.encoder {
        Encoder::Gcn => Some(NormalizedAdjacency::from_edges(n, &splits.train_pos)?),
        Encoder::Mlp => None,
    };
    let adj = adj.as_ref();

    let mut forbidden: HashSet<(usize, usize)> = ds.graph.edges().iter().copied().collect();
    forbidden.extend(splits.val_neg.iter().chain(&splits.test_neg).map(|&(u, v)| (u.min(v), u.max(v))));
    let available = n * (n - 1) / 2 - forbidden.len();
    if available < splits.train_pos.len() {
        return Err(BaselineError::InvalidSplits("too few non-edges for training negatives".into()));
    }

    let mut model = Model::for_config(config, x.ncols(), fd);
    let mut opt = Adam::new(model.num_params(), model.num_decayed(), config.learning_rate, config.weight_decay);
    let neg_seed = rng::derive_seed(config.seed, NEG_STREAM);
    let drop_seed = rng::derive_seed(config.seed, DROPOUT_STREAM);

    let mut report = TrainReport {
        config: config.clone(),
        dataset_id: ds.name().to_string(),
        per_epoch: Vec::new(),
        test_auc: 0.5,
        best_val_auc: f64::NEG_INFINITY,
        best_epoch: 0,
        fermi_dirac: *fd,
        diverged: false,
    };

    for epoch in 0..config.epochs {
        let neg = sample_negatives(n, splits.train_pos.len(), &forbidden, &mut rng::stream(neg_seed, epoch as u64));
        let mut drop_rng = rng::stream(drop_seed, epoch as u64);
        let (emb, cache) = model.forward(&x, adj, Some((config.dropout, &mut drop_rng)))?;
        let (loss, d_emb, dr, dlt) = pair_loss(&emb, &splits.train_pos, &neg, model.r, model.log_t, model.clamp_max);
        let mut grad = model.backward(&cache, adj, d_emb);
        let k = grad.len();
        grad[k - 2] = dr;
        grad[k - 1] = dlt;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            report.diverged = true;
            return Err(BaselineError::NonFiniteLoss(Box::new(report)));
        }
        let mut params = model.flat_params();
        opt.step(&mut params, &grad);
        model.set_flat_params(&params);

        let emb = model.embed(&x, adj)?;
        let fdp = model.fermi_dirac_params();
        let val_auc = auc_of(
            &score_pairs(&emb, &splits.val_pos, &fdp),
            &score_pairs(&emb, &splits.val_neg, &fdp),
        )?;
        report.per_epoch.push(EpochStats { loss, val_auc });
        if val_auc > report.best_val_auc {
            report.best_val_auc = val_auc;
            report.best_epoch = epoch;
            report.fermi_dirac = fdp;
            report.test_auc = auc_of(
                &score_pairs(&emb, &splits.test_pos, &fdp),
                &score_pairs(&emb, &splits.test_neg, &fdp),
            )?;
        } else if epoch - report.best_epoch >= config.patience {
            break;
        }
    }
    Ok(report)
}
