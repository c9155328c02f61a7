//! Hyperboloid (Lorentz) model of hyperbolic space with curvature `K < 0`.
//!
//! Points live on the upper sheet `⟨x, x⟩_L = 1/K`, the origin is
//! `(1/√|K|, 0, …, 0)` and every formula is written in terms of `|K|`.

mod embed;

pub use embed::{average_distortion, average_distortion_with, tree_embed, TreeEmbedding};

use thiserror::Error;

/// Norms below this are treated as zero in the exp/log maps.
pub const SMALL_NORM: f64 = 1e-12;
/// Relative slack for manifold-membership and tangency checks.
pub const MANIFOLD_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum HyperbolicError {
    #[error("curvature must be finite and strictly negative, got {0}")]
    InvalidCurvature(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("vectors need at least two coordinates")]
    TooShort,
    #[error("vector is not tangent at the base point (⟨x, v⟩_L = {0})")]
    NotTangent(f64),
    #[error("point is off the hyperboloid (K⟨x, x⟩_L = {0})")]
    OffManifold(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("graph is not a tree")]
    NotATree,
    #[error("edge scale must be positive")]
    InvalidScale,
    #[error("embedding has {got} points for {expected} nodes")]
    MissingNode { expected: usize, got: usize },
}

/// Sectional curvature, strictly negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature(f64);

impl Curvature {
    pub fn new(k: f64) -> Result<Self, HyperbolicError> {
        if k.is_finite() && k < 0.0 {
            Ok(Self(k))
        } else {
            Err(HyperbolicError::InvalidCurvature(k))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn sqrt_abs(self) -> f64 {
        (-self.0).sqrt()
    }
}

/// Point on the hyperboloid, stored in ambient `n + 1` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    coords: Vec<f64>,
}

impl HPoint {
    /// Validates membership on the upper sheet for curvature `k`.
    pub fn new(coords: Vec<f64>, k: Curvature) -> Result<Self, HyperbolicError> {
        let p = Self { coords };
        p.check(k)?;
        Ok(p)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Intrinsic dimension `n` (ambient length minus one).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// `|K⟨x,x⟩_L + 1|` relative to the size of the largest term, so points
    /// far from the origin are judged at the precision they can carry.
    fn check(&self, k: Curvature) -> Result<(), HyperbolicError> {
        if self.coords.len() < 2 {
            return Err(HyperbolicError::TooShort);
        }
        if self.coords.iter().any(|c| !c.is_finite()) {
            return Err(HyperbolicError::NonFinite);
        }
        let kk = k.value();
        let q = kk * lorentz(&self.coords, &self.coords);
        let scale = (-kk * self.coords[0] * self.coords[0]).max(1.0);
        if self.coords[0] <= 0.0 || (q - 1.0).abs() > MANIFOLD_TOL * scale {
            return Err(HyperbolicError::OffManifold(q));
        }
        Ok(())
    }
}

/// Vector in the tangent space at `at`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    at: HPoint,
    v: Vec<f64>,
}

impl TangentVec {
    pub fn new(at: HPoint, v: Vec<f64>) -> Result<Self, HyperbolicError> {
        if v.len() != at.coords.len() {
            return Err(HyperbolicError::DimensionMismatch(at.coords.len(), v.len()));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(HyperbolicError::NonFinite);
        }
        let ip = lorentz(&at.coords, &v);
        let scale = euclid_norm(&at.coords) * euclid_norm(&v);
        if ip.abs() > MANIFOLD_TOL * scale.max(1.0) {
            return Err(HyperbolicError::NotTangent(ip));
        }
        Ok(Self { at, v })
    }

    pub fn at(&self) -> &HPoint {
        &self.at
    }

    pub fn components(&self) -> &[f64] {
        &self.v
    }

    /// `‖v‖_L = √⟨v, v⟩_L`; tangent vectors are spacelike, rounding below
    /// zero is clipped.
    pub fn norm(&self) -> f64 {
        lorentz(&self.v, &self.v).max(0.0).sqrt()
    }
}

#[inline]
fn lorentz(x: &[f64], y: &[f64]) -> f64 {
    -x[0] * y[0] + x[1..].iter().zip(&y[1..]).map(|(a, b)| a * b).sum::<f64>()
}

fn euclid_norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Minkowski inner product `−x₀y₀ + Σ_{i≥1} x_i y_i`.
pub fn minkowski_inner(x: &[f64], y: &[f64]) -> Result<f64, HyperbolicError> {
    if x.len() != y.len() {
        return Err(HyperbolicError::DimensionMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(HyperbolicError::TooShort);
    }
    Ok(lorentz(x, y))
}

/// Origin `(1/√|K|, 0, …, 0)` of the `n`-dimensional model.
pub fn origin(n: usize, k: Curvature) -> HPoint {
    let mut coords = vec![0.0; n + 1];
    coords[0] = 1.0 / k.sqrt_abs();
    HPoint { coords }
}

/// `exp_x(v) = cosh(√|K|‖v‖)·x + sinh(√|K|‖v‖)/(√|K|‖v‖)·v`, with `x₀`
/// then reset to `√(1/|K| + Σ x_i²)`.
pub fn exp_map(v: &TangentVec, k: Curvature) -> HPoint {
    let norm = v.norm();
    if norm < SMALL_NORM {
        return v.at.clone();
    }
    let theta = k.sqrt_abs() * norm;
    let (c, s) = (theta.cosh(), theta.sinh() / theta);
    let mut coords: Vec<f64> = v.at.coords.iter().zip(&v.v).map(|(x, t)| c * x + s * t).collect();
    // the time coordinate is recomputed from the spatial ones, so the result
    // lies on the sheet even when the terms above cancel heavily
    let spatial: f64 = coords[1..].iter().map(|a| a * a).sum();
    coords[0] = (1.0 / -k.value() + spatial).sqrt();
    HPoint { coords }
}

/// Inverse of [`exp_map`]: the tangent vector at `x` pointing to `y` with
/// Lorentz norm `d(x, y)`.
pub fn log_map(x: &HPoint, y: &HPoint, k: Curvature) -> Result<TangentVec, HyperbolicError> {
    let d = distance(x, y, k)?;
    let alpha = k.value() * lorentz(&x.coords, &y.coords);
    let mut dir: Vec<f64> = y.coords.iter().zip(&x.coords).map(|(b, a)| b - alpha * a).collect();
    let dir_norm = lorentz(&dir, &dir).max(0.0).sqrt();
    if d < SMALL_NORM || dir_norm == 0.0 {
        return Ok(TangentVec {
            at: x.clone(),
            v: vec![0.0; x.coords.len()],
        });
    }
    let scale = d / dir_norm;
    dir.iter_mut().for_each(|c| *c *= scale);
    Ok(TangentVec { at: x.clone(), v: dir })
}

/// Geodesic distance `(1/√|K|)·arccosh(K⟨x, y⟩_L)`.
///
/// Both quantities are rebuilt from the spatial coordinates as sums of
/// non-negative terms (Lagrange's identity), so neither far-apart points
/// nor nearby points lose precision to cancellation. Near the diagonal the
/// half-angle form `(2/√|K|)·asinh(√|K|·‖x − y‖_L / 2)` is used.
pub fn distance(x: &HPoint, y: &HPoint, k: Curvature) -> Result<f64, HyperbolicError> {
    if x.coords.len() != y.coords.len() {
        return Err(HyperbolicError::DimensionMismatch(x.coords.len(), y.coords.len()));
    }
    x.check(k)?;
    y.check(k)?;
    let sk = k.sqrt_abs();
    let c = 1.0 / -k.value();
    let (sx, sy) = (&x.coords[1..], &y.coords[1..]);
    let sxy = dot(sx, sy);
    let (nx, ny) = (dot_self(sx), dot_self(sy));
    let (x0, y0) = ((c + nx).sqrt(), (c + ny).sqrt());
    // p = x₀y₀ − ⟨s_x, s_y⟩ = α / |K|
    let p = if sxy <= 0.0 {
        x0 * y0 - sxy
    } else {
        let perp = if nx > 0.0 { perp_sq(sy, sx, sxy / nx) } else { ny };
        (c * c + c * (nx + ny) + nx * perp) / (x0 * y0 + sxy)
    };
    let alpha = p / c;
    if alpha < 2.0 {
        let diff: Vec<f64> = sx.iter().zip(sy).map(|(a, b)| a - b).collect();
        let sum: Vec<f64> = sx.iter().zip(sy).map(|(a, b)| a + b).collect();
        let nd = dot_self(&diff);
        if nd == 0.0 {
            return Ok(0.0);
        }
        let s_perp = perp_sq(&sum, &diff, dot(&sum, &diff) / nd);
        let chord_sq = nd * (s_perp + 2.0 * (c + p)) / (dot_self(&sum) + 2.0 * (c + p));
        Ok(2.0 / sk * (sk * chord_sq.sqrt() / 2.0).asinh())
    } else {
        Ok(alpha.acosh() / sk)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn dot_self(a: &[f64]) -> f64 {
    dot(a, a)
}

/// `‖a − t·b‖²`.
fn perp_sq(a: &[f64], b: &[f64], t: f64) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - t * q).powi(2)).sum()
}

/// Lifts a Euclidean feature vector to the hyperboloid as `exp_o((0, x))`.
pub fn lift_feature(xe: &[f64], k: Curvature) -> Result<HPoint, HyperbolicError> {
    if xe.iter().any(|c| !c.is_finite()) {
        return Err(HyperbolicError::NonFinite);
    }
    if xe.is_empty() {
        return Err(HyperbolicError::TooShort);
    }
    let o = origin(xe.len(), k);
    let mut v = Vec::with_capacity(xe.len() + 1);
    v.push(0.0);
    v.extend_from_slice(xe);
    Ok(exp_map(&TangentVec { at: o, v }, k))
}

/// The tripod `(μ, x₁, x₂, x₃)` in H²: μ at the origin and the leaves at the
/// images of the unit vectors at 0°, 120° and 240°.
pub fn tripod_embed(k: Curvature) -> [HPoint; 4] {
    let mu = origin(2, k);
    let h = 3f64.sqrt() / 2.0;
    let leaf = |a: f64, b: f64| {
        exp_map(
            &TangentVec {
                at: mu.clone(),
                v: vec![0.0, a, b],
            },
            k,
        )
    };
    [mu.clone(), leaf(1.0, 0.0), leaf(-0.5, h), leaf(-0.5, -h)]
}

/// Closed-form leaf-to-leaf distance of [`tripod_embed`]:
/// `(1/√|K|)·arccosh(cosh²√|K| + ½ sinh²√|K|)`.
pub fn tripod_leaf_distance(k: Curvature) -> f64 {
    let s = k.sqrt_abs();
    let arg = s.cosh().powi(2) + 0.5 * s.sinh().powi(2);
    arg.acosh() / s
}
