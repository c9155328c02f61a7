//! Tree-likeness diagnostics and baselines for graph learning benchmarks.
//!
//! The crate is organised around a small number of pieces:
//!
//! - [`graph`]: validated undirected graphs and all-pairs hop distances.
//! - [`hyperbolicity`]: Gromov δ-hyperbolicity via the four-point condition.
//! - [`ricci`]: Ollivier-Ricci edge curvature with an exact transport solver.
//! - [`hyperboloid`]: Lorentz-model primitives, feature lifting and tree embeddings.
//! - [`treegen`]: the `Tree(b, ℓ, γ, δ)` dataset family, splits and on-disk format.
//! - [`baselines`]: from-scratch MLP/GCN link predictors, ROC-AUC and the γ sweep.

pub mod baselines;
pub mod graph;
pub mod hyperbolicity;
pub mod hyperboloid;
pub mod ricci;
pub mod rng;
pub mod treegen;

pub use graph::{DistanceMatrix, Graph, GraphError};
