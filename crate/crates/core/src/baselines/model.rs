//! MLP and GCN encoders with a Fermi-Dirac distance decoder, hand-written
//! backward pass and Adam.
//!
//! Layer `k` maps `H ↦ relu(H·W + b)` (MLP) or `H ↦ relu(Ã·H·W + b)` (GCN).
//! An optional final layer of the same form skips the relu. Embeddings are
//! never normalised.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BaselineError;
use crate::graph::Graph;

/// Dense materialisation limit for [`NormalizedAdjacency::to_dense`].
pub const DENSE_NODE_CAP: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoder {
    Mlp,
    Gcn,
}

impl std::str::FromStr for Encoder {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mlp" => Ok(Encoder::Mlp),
            "gcn" => Ok(Encoder::Gcn),
            other => Err(format!("unknown encoder '{other}', expected mlp or gcn")),
        }
    }
}

/// Activation is always relu.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: Encoder,
    /// Output width of each layer; the last entry is the embedding size.
    pub hidden_dims: Vec<usize>,
    /// Width of a final linear (unactivated) layer; `None` makes the last
    /// hidden layer the embedding.
    pub embed_dim: Option<usize>,
    pub dropout: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: Encoder::Mlp,
            hidden_dims: vec![256, 256],
            embed_dim: Some(256),
            dropout: 0.0,
            epochs: 300,
            learning_rate: 1e-2,
            weight_decay: 0.0,
            patience: 40,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        let bad = |m: &str| Err(BaselineError::InvalidConfig(m.to_string()));
        if self.hidden_dims.is_empty() || self.hidden_dims.contains(&0) || self.embed_dim == Some(0) {
            return bad("hidden_dims must be non-empty with widths >= 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad("weight_decay must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermiDiracParams {
    pub r: f64,
    pub t: f64,
    pub clamp_max: f64,
}

impl Default for FermiDiracParams {
    fn default() -> Self {
        Self {
            r: 2.0,
            t: 1.0,
            clamp_max: 20.0,
        }
    }
}

/// `1 / (exp(min((dist − r)/t, clamp_max)) + 1)`.
pub fn fermi_dirac(dist: f64, p: &FermiDiracParams) -> f64 {
    let z = ((dist - p.r) / p.t).min(p.clamp_max);
    1.0 / (z.exp() + 1.0)
}

/// `D̄^{-1/2} (A + I) D̄^{-1/2}` in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    /// Builds from an edge list that need not connect the graph.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, BaselineError> {
        let mut adj: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(BaselineError::ShapeMismatch(format!("edge ({u}, {v}) outside {n} nodes")));
            }
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        for row in adj.iter_mut() {
            row.sort_unstable();
            row.dedup();
        }
        let deg: Vec<f64> = adj.iter().map(|r| r.len() as f64).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for (i, row) in adj.iter().enumerate() {
            for &j in row {
                cols.push(j);
                vals.push(1.0 / (deg[i] * deg[j]).sqrt());
            }
            offsets.push(cols.len());
        }
        Ok(Self { n, offsets, cols, vals })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            offsets: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn to_dense(&self) -> Result<Array2<f64>, BaselineError> {
        if self.n > DENSE_NODE_CAP {
            return Err(BaselineError::SizeLimit(self.n));
        }
        let mut m = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                m[[i, self.cols[k]]] = self.vals[k];
            }
        }
        Ok(m)
    }

    /// `Ã · m`.
    pub fn apply(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(m.raw_dim());
        for i in 0..self.n {
            let mut row = out.row_mut(i);
            for k in self.offsets[i]..self.offsets[i + 1] {
                row.scaled_add(self.vals[k], &m.row(self.cols[k]));
            }
        }
        out
    }
}

/// Normalised adjacency of the whole graph.
pub fn normalized_adjacency(g: &Graph) -> NormalizedAdjacency {
    NormalizedAdjacency::from_edges(g.num_nodes(), g.edges()).expect("graph edges are in range")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `in × out`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub encoder: Encoder,
    pub layers: Vec<Layer>,
    pub r: f64,
    /// The temperature is optimised in log space so it stays positive.
    pub log_t: f64,
    pub clamp_max: f64,
    /// Skip the activation on the last layer.
    pub linear_output: bool,
}

/// Gradients laid out like [`Model::flat_params`].
pub type Gradient = Vec<f64>;

pub struct ForwardCache {
    /// Input of each layer after dropout.
    inputs: Vec<Array2<f64>>,
    /// Inverted-dropout scale per input entry, when dropout was applied.
    masks: Vec<Option<Array2<f64>>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
}

impl Model {
    /// Uniform `±1/√fan_in` initialisation for weights and biases.
    pub fn init<R: Rng>(encoder: Encoder, in_dim: usize, dims: &[usize], fd: &FermiDiracParams, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(dims.len());
        let mut fan_in = in_dim;
        for &out in dims {
            let s = 1.0 / (fan_in as f64).sqrt();
            let w = Array2::from_shape_simple_fn((fan_in, out), || rng.random_range(-s..s));
            let b = Array1::from_shape_simple_fn(out, || rng.random_range(-s..s));
            layers.push(Layer { w, b });
            fan_in = out;
        }
        Self {
            encoder,
            layers,
            r: fd.r,
            log_t: fd.t.ln(),
            clamp_max: fd.clamp_max,
            linear_output: false,
        }
    }

    /// Hidden layers from `hidden_dims`, plus a linear output layer when
    /// `embed_dim` is set, initialised from `config.seed`.
    pub fn for_config(config: &ModelConfig, in_dim: usize, fd: &FermiDiracParams) -> Self {
        let mut dims = config.hidden_dims.clone();
        dims.extend(config.embed_dim);
        let mut m = Self::init(config.encoder, in_dim, &dims, fd, &mut crate::rng::stream(config.seed, 1));
        m.linear_output = config.embed_dim.is_some();
        m
    }

    pub fn fermi_dirac_params(&self) -> FermiDiracParams {
        FermiDiracParams {
            r: self.r,
            t: self.log_t.exp(),
            clamp_max: self.clamp_max,
        }
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum::<usize>() + 2
    }

    /// Number of leading flat entries subject to weight decay (all layer
    /// weights and biases, not the decoder parameters).
    pub fn num_decayed(&self) -> usize {
        self.num_params() - 2
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(l.b.iter());
        }
        out.push(self.r);
        out.push(self.log_t);
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut k = 0;
        for l in &mut self.layers {
            for x in l.w.iter_mut().chain(l.b.iter_mut()) {
                *x = flat[k];
                k += 1;
            }
        }
        self.r = flat[k];
        self.log_t = flat[k + 1];
    }

    fn check_input(&self, x: &Array2<f64>, adj: Option<&NormalizedAdjacency>) -> Result<(), BaselineError> {
        let want = self.layers[0].w.nrows();
        if x.ncols() != want {
            return Err(BaselineError::ShapeMismatch(format!(
                "features have {} columns, first layer expects {want}",
                x.ncols()
            )));
        }
        if self.encoder == Encoder::Gcn {
            match adj {
                Some(a) if a.num_nodes() == x.nrows() => {}
                Some(a) => {
                    return Err(BaselineError::ShapeMismatch(format!(
                        "adjacency has {} nodes, features {}",
                        a.num_nodes(),
                        x.nrows()
                    )))
                }
                None => return Err(BaselineError::ShapeMismatch("gcn encoder needs an adjacency".into())),
            }
        }
        Ok(())
    }

    pub fn embed(&self, x: &Array2<f64>, adj: Option<&NormalizedAdjacency>) -> Result<Array2<f64>, BaselineError> {
        Ok(self.forward(x, adj, None::<(f64, &mut rand_chacha::ChaCha8Rng)>)?.0)
    }

    /// Returns the embeddings and what the backward pass needs. `dropout`
    /// carries the rate and the generator for the masks.
    pub fn forward<R: Rng>(
        &self,
        x: &Array2<f64>,
        adj: Option<&NormalizedAdjacency>,
        mut dropout: Option<(f64, &mut R)>,
    ) -> Result<(Array2<f64>, ForwardCache), BaselineError> {
        self.check_input(x, adj)?;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
            pre: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let mask = match dropout.as_mut() {
                Some((p, rng)) if *p > 0.0 => {
                    let keep = 1.0 / (1.0 - *p);
                    let m = Array2::from_shape_simple_fn(h.raw_dim(), || if rng.random::<f64>() < *p { 0.0 } else { keep });
                    h *= &m;
                    Some(m)
                }
                _ => None,
            };
            let mut z = h.dot(&layer.w);
            if self.encoder == Encoder::Gcn {
                z = adj.expect("checked").apply(&z);
            }
            z += &layer.b;
            let out = if li == last && self.linear_output {
                z.clone()
            } else {
                z.mapv(|v| v.max(0.0))
            };
            cache.inputs.push(h);
            cache.masks.push(mask);
            cache.pre.push(z);
            h = out;
        }
        Ok((h, cache))
    }

    /// Back-propagates `d_emb` (gradient w.r.t. the embeddings) into a flat
    /// gradient whose last two entries are left at zero.
    pub fn backward(&self, cache: &ForwardCache, adj: Option<&NormalizedAdjacency>, d_emb: Array2<f64>) -> Gradient {
        let mut per_layer: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        let mut dh = d_emb;
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let mut dz = dh;
            if !(self.linear_output && i + 1 == self.layers.len()) {
                dz.zip_mut_with(&cache.pre[i], |g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
            }
            let db = dz.sum_axis(Axis(0));
            let dy = if self.encoder == Encoder::Gcn {
                adj.expect("gcn forward had an adjacency").apply(&dz)
            } else {
                dz
            };
            let dw = cache.inputs[i].t().dot(&dy);
            if i > 0 {
                let mut d_in = dy.dot(&layer.w.t());
                if let Some(m) = &cache.masks[i] {
                    d_in *= m;
                }
                dh = d_in;
            } else {
                dh = Array2::zeros((0, 0));
            }
            per_layer.push((dw, db));
        }
        per_layer.reverse();
        let mut flat = Vec::with_capacity(self.num_params());
        for (dw, db) in &per_layer {
            flat.extend(dw.iter());
            flat.extend(db.iter());
        }
        flat.push(0.0);
        flat.push(0.0);
        flat
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Binary cross-entropy of the decoder on positive and negative pairs (each
/// class averaged separately and the two means summed), with the gradient
/// w.r.t. the embeddings and w.r.t. `(r, log t)`.
pub fn pair_loss(
    emb: &Array2<f64>,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
    r: f64,
    log_t: f64,
    clamp_max: f64,
) -> (f64, Array2<f64>, f64, f64) {
    let t = log_t.exp();
    let mut d_emb = Array2::zeros(emb.raw_dim());
    let (mut loss, mut dr, mut dlt) = (0.0, 0.0, 0.0);
    for (pairs, label) in [(pos, 1.0), (neg, 0.0)] {
        if pairs.is_empty() {
            continue;
        }
        let weight = 1.0 / pairs.len() as f64;
        for &(u, v) in pairs {
            let diff = &emb.row(u) - &emb.row(v);
            let dist = diff.dot(&diff);
            let raw = (dist - r) / t;
            let z = raw.min(clamp_max);
            // p = σ(−z); −log p = softplus(z), −log(1 − p) = softplus(−z)
            loss += weight * if label > 0.0 { softplus(z) } else { softplus(-z) };
            if raw >= clamp_max {
                continue;
            }
            let p = 1.0 / (z.exp() + 1.0);
            let dz = weight * (label - p);
            let dd = dz / t;
            d_emb.row_mut(u).scaled_add(2.0 * dd, &diff);
            d_emb.row_mut(v).scaled_add(-2.0 * dd, &diff);
            dr -= dz / t;
            dlt -= dz * z;
        }
    }
    (loss, d_emb, dr, dlt)
}

/// Loss and full flat gradient without dropout.
pub fn loss_and_grad(
    model: &Model,
    x: &Array2<f64>,
    adj: Option<&NormalizedAdjacency>,
    pos: &[(usize, usize)],
    neg: &[(usize, usize)],
) -> Result<(f64, Gradient), BaselineError> {
    let (emb, cache) = model.forward(x, adj, None::<(f64, &mut rand_chacha::ChaCha8Rng)>)?;
    let (loss, d_emb, dr, dlt) = pair_loss(&emb, pos, neg, model.r, model.log_t, model.clamp_max);
    let mut g = model.backward(&cache, adj, d_emb);
    let n = g.len();
    g[n - 2] = dr;
    g[n - 1] = dlt;
    Ok((loss, g))
}

/// Adam with L2 weight decay folded into the gradient of the first
/// `decayed` entries.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    decayed: usize,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(num_params: usize, decayed: usize, lr: f64, weight_decay: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            decayed,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for i in 0..params.len() {
            let mut g = grad[i];
            if i < self.decayed {
                g += self.weight_decay * params[i];
            }
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}
