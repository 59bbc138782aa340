//! Regularized empirical risk: `f(w) = (1/n) Σ ℓ_j(wᵀx_j) + ½ wᵀMw`.
//!
//! Two losses are supported: quadratic `ℓ(z) = ½(z - y)²` and logistic
//! `ℓ(z) = log(1 + exp(-yz))` with `y ∈ {-1, +1}`. `M` is either `γI` or a
//! non-negative diagonal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};

/// Largest dimension for which dense Hessians may be formed.
pub const ORACLE_DIM_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Quadratic,
    Logistic,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LossKind {
    pub fn value(self, z: f64, y: f64) -> f64 {
        match self {
            LossKind::Quadratic => 0.5 * (z - y) * (z - y),
            LossKind::Logistic => {
                let margin = y * z;
                if margin >= 0.0 {
                    (-margin).exp().ln_1p()
                } else {
                    -margin + margin.exp().ln_1p()
                }
            }
        }
    }

    pub fn first_derivative(self, z: f64, y: f64) -> f64 {
        match self {
            LossKind::Quadratic => z - y,
            LossKind::Logistic => -y * sigmoid(-y * z),
        }
    }

    pub fn second_derivative(self, z: f64, y: f64) -> f64 {
        match self {
            LossKind::Quadratic => 1.0,
            LossKind::Logistic => sigmoid(y * z) * sigmoid(-y * z),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    /// `M = γI`
    ScaledIdentity(f64),
    /// `M = diag(m)`
    Diagonal(Vector),
}

impl Regularizer {
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Regularizer::ScaledIdentity(g) if !(*g >= 0.0 && g.is_finite()) => {
                Err(Error::Range(format!("regularization γ must be finite and >= 0, got {g}")))
            }
            Regularizer::Diagonal(m) if m.len() != d => Err(Error::Dimension(format!(
                "diagonal regularizer has length {}, expected {d}",
                m.len()
            ))),
            Regularizer::Diagonal(m) if m.iter().any(|v| !(*v >= 0.0 && v.is_finite())) => {
                Err(Error::Range("diagonal regularizer entries must be finite and >= 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// `M v`
    pub fn apply(&self, v: &[f64]) -> Vector {
        match self {
            Regularizer::ScaledIdentity(g) => v.iter().map(|x| g * x).collect(),
            Regularizer::Diagonal(m) => v.iter().zip(m.iter()).map(|(x, mi)| x * mi).collect(),
        }
    }

    /// `½ wᵀ M w`
    pub fn value(&self, w: &[f64]) -> f64 {
        0.5 * crate::linalg::dot(w, &self.apply(w))
    }

    pub fn diagonal(&self, d: usize) -> Vec<f64> {
        match self {
            Regularizer::ScaledIdentity(g) => vec![*g; d],
            Regularizer::Diagonal(m) => m.to_vec(),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match self {
            Regularizer::ScaledIdentity(g) => *g,
            Regularizer::Diagonal(m) => m.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub loss: LossKind,
    pub regularizer: Regularizer,
}

impl ObjectiveSpec {
    pub fn new(loss: LossKind, regularizer: Regularizer) -> Self {
        ObjectiveSpec { loss, regularizer }
    }

    pub fn ridge(gamma: f64) -> Self {
        Self::new(LossKind::Quadratic, Regularizer::ScaledIdentity(gamma))
    }

    pub fn logistic(gamma: f64) -> Self {
        Self::new(LossKind::Logistic, Regularizer::ScaledIdentity(gamma))
    }

    /// Checks the regularizer and that labels fit the loss.
    pub fn validate(&self, data: &LabeledDataset) -> Result<()> {
        self.regularizer.validate(data.dim())?;
        if self.loss == LossKind::Logistic {
            if let Some(bad) = data.labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
                return Err(Error::Range(format!(
                    "logistic loss needs labels in {{-1, +1}}, found {bad}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub features: DenseMatrix,
    pub labels: Vector,
}

impl LabeledDataset {
    pub fn new(features: DenseMatrix, labels: Vector) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::Range("dataset needs at least one sample".into()));
        }
        if features.rows() != labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if !labels.is_finite() {
            return Err(Error::NumericBreakdown("non-finite label".into()));
        }
        Ok(LabeledDataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows `indices` in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let picks: Vec<(usize, f64)> = indices.iter().map(|&i| (i, 1.0)).collect();
        LabeledDataset {
            features: self.features.select_rows(&picks),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

fn check_dim(data: &LabeledDataset, w: &[f64]) -> Result<()> {
    if w.len() != data.dim() {
        return Err(Error::Dimension(format!(
            "parameter has length {}, data has {} features",
            w.len(),
            data.dim()
        )));
    }
    Ok(())
}

/// `(1/n) Σ ℓ_j(wᵀx_j)` without the regularizer.
pub fn mean_loss(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<f64> {
    check_dim(data, w)?;
    let z = data.features.matvec(w);
    let total: f64 = z
        .iter()
        .zip(data.labels.iter())
        .map(|(zj, yj)| spec.loss.value(*zj, *yj))
        .sum();
    Ok(total / data.len() as f64)
}

pub fn objective_value(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<f64> {
    Ok(mean_loss(spec, data, w)? + spec.regularizer.value(w))
}

pub fn gradient(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<Vector> {
    let mut g = loss_gradient(spec, data, w)?;
    g.axpy(1.0, &spec.regularizer.apply(w));
    Ok(g)
}

/// `(1/n) Σ ℓ'_j(wᵀx_j) x_j`, the gradient of [`mean_loss`].
pub fn loss_gradient(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<Vector> {
    check_dim(data, w)?;
    let n = data.len() as f64;
    let z = data.features.matvec(w);
    let coef: Vec<f64> = z
        .iter()
        .zip(data.labels.iter())
        .map(|(zj, yj)| spec.loss.first_derivative(*zj, *yj) / n)
        .collect();
    Ok(data.features.matvec_t(&coef))
}

/// `ℓ''_j(wᵀx_j) / n` for every sample.
fn curvature_weights(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Vec<f64> {
    let n = data.len() as f64;
    let z = data.features.matvec(w);
    z.iter()
        .zip(data.labels.iter())
        .map(|(zj, yj)| spec.loss.second_derivative(*zj, *yj) / n)
        .collect()
}

/// Rows `sqrt(ℓ''_j / n) · x_j`, so that `AᵀA + M` is the Hessian at `w`.
pub fn scaled_rows(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<DenseMatrix> {
    check_dim(data, w)?;
    let picks: Vec<(usize, f64)> = curvature_weights(spec, data, w)
        .into_iter()
        .enumerate()
        .map(|(j, c)| (j, c.sqrt()))
        .collect();
    Ok(data.features.select_rows(&picks))
}

/// Hessian at a fixed point, applied matrix-free as `Xᵀ diag(ℓ''/n) X v + M v`.
#[derive(Debug, Clone)]
pub struct HessianOperator<'a> {
    features: &'a DenseMatrix,
    weights: Vec<f64>,
    regularizer: &'a Regularizer,
}

impl<'a> HessianOperator<'a> {
    pub fn at(spec: &'a ObjectiveSpec, data: &'a LabeledDataset, w: &[f64]) -> Result<Self> {
        check_dim(data, w)?;
        Ok(HessianOperator {
            features: &data.features,
            weights: curvature_weights(spec, data, w),
            regularizer: &spec.regularizer,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn apply(&self, v: &[f64]) -> Vector {
        let mut xv = self.features.matvec(v);
        for (x, c) in xv.iter_mut().zip(&self.weights) {
            *x *= c;
        }
        let mut out = self.features.matvec_t(&xv);
        out.axpy(1.0, &self.regularizer.apply(v));
        out
    }

    /// Dense `d x d` form; callers must respect [`ORACLE_DIM_LIMIT`].
    pub fn to_dense(&self) -> DenseMatrix {
        let picks: Vec<(usize, f64)> = self.weights.iter().enumerate().map(|(j, c)| (j, c.sqrt())).collect();
        let mut h = self.features.select_rows(&picks).gram();
        h.add_diagonal(&self.regularizer.diagonal(self.dim()));
        h
    }
}

pub fn hessian_vec(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64], v: &[f64]) -> Result<Vector> {
    check_dim(data, v)?;
    Ok(HessianOperator::at(spec, data, w)?.apply(v))
}

pub fn materialize_hessian(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<DenseMatrix> {
    materialize_hessian_with_limit(spec, data, w, ORACLE_DIM_LIMIT)
}

pub fn materialize_hessian_with_limit(
    spec: &ObjectiveSpec,
    data: &LabeledDataset,
    w: &[f64],
    limit: usize,
) -> Result<DenseMatrix> {
    if data.dim() > limit {
        return Err(Error::OracleSize { dim: data.dim(), limit });
    }
    Ok(HessianOperator::at(spec, data, w)?.to_dense())
}
