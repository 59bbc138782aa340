//! Seeded problem instances with a prescribed condition number.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use crate::objective::{LabeledDataset, LossKind, ObjectiveSpec};
use crate::rng;

fn default_gamma() -> f64 {
    1e-3
}

fn default_noise() -> f64 {
    0.1
}

fn default_flip() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub d: usize,
    /// Target condition number of `XᵀX/n + γI` (quadratic) or of the feature
    /// covariance (logistic).
    pub kappa: f64,
    pub loss: LossKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Standard deviation of the additive label noise (quadratic).
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Label flip probability (logistic).
    #[serde(default = "default_flip")]
    pub flip_prob: f64,
}

impl GeneratorSpec {
    pub fn objective(&self) -> ObjectiveSpec {
        match self.loss {
            LossKind::Quadratic => ObjectiveSpec::ridge(self.gamma),
            LossKind::Logistic => ObjectiveSpec::logistic(self.gamma),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Config("n and d must be positive".into()));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("condition number must be >= 1, got {}", self.kappa)));
        }
        if self.d == 1 && self.kappa > 1.0 {
            return Err(Error::Config("a single feature cannot have condition number above 1".into()));
        }
        if !(self.gamma >= 0.0) || !(self.noise >= 0.0) || !(0.0..=0.5).contains(&self.flip_prob) {
            return Err(Error::Config("gamma, noise and flip_prob out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: LabeledDataset,
    pub w_true: Vector,
}

/// Eigenvalues `λ_min·κ^{k/(d-1)}`, geometric from `λ_min` to `κ·λ_min`.
fn geometric_spectrum(d: usize, lo: f64, kappa: f64) -> Vec<f64> {
    (0..d)
        .map(|k| if d == 1 { lo } else { lo * kappa.powf(k as f64 / (d - 1) as f64) })
        .collect()
}

/// Quadratic: `X = U·diag(σ)·Vᵀ` with seeded orthonormal `U` (n×d) and `V`
/// (d×d), where `σ_k² / n + γ` runs geometrically from
/// `λ_min = max(1/κ, 2γ)` to `κ·λ_min`, and `y = X w_true + noise`.
///
/// Logistic: Gaussian features whose covariance has eigenvalues from `1/κ`
/// to `1` in a random basis, labels `sign(xᵀw_true)` flipped with
/// probability `flip_prob`.
pub fn generate_synthetic(spec: &GeneratorSpec, seed: u64) -> Result<Synthetic> {
    spec.validate()?;
    let (n, d) = (spec.n, spec.d);
    let mut r = rng::derived_rng(seed, "synthetic", 0);
    let v = rng::random_orthonormal(&mut r, d, d);
    let w_true = rng::gaussian_vector(&mut r, d);
    match spec.loss {
        LossKind::Quadratic => {
            if n < d {
                return Err(Error::Config(format!("quadratic generator needs n >= d, got {n} < {d}")));
            }
            let lo = (1.0 / spec.kappa).max(2.0 * spec.gamma);
            let sigma: Vec<f64> = geometric_spectrum(d, lo, spec.kappa)
                .into_iter()
                .map(|l| (n as f64 * (l - spec.gamma)).sqrt())
                .collect();
            let mut u = rng::random_orthonormal(&mut r, n, d);
            for i in 0..n {
                for (x, s) in u.row_mut(i).iter_mut().zip(&sigma) {
                    *x *= s;
                }
            }
            let x = u.matmul(&v.transpose())?;
            let mut y = x.matvec(&w_true);
            for yi in y.iter_mut() {
                *yi += spec.noise * rng::gaussian(&mut r);
            }
            Ok(Synthetic {
                data: LabeledDataset::new(x, y)?,
                w_true,
            })
        }
        LossKind::Logistic => {
            let scales: Vec<f64> = geometric_spectrum(d, 1.0 / spec.kappa, spec.kappa).into_iter().map(f64::sqrt).collect();
            let z = rng::gaussian_matrix(&mut r, n, d);
            let mut x = DenseMatrix::zeros(n, d);
            for i in 0..n {
                let scaled: Vec<f64> = z.row(i).iter().zip(&scales).map(|(a, s)| a * s).collect();
                x.row_mut(i).copy_from_slice(&v.matvec(&scaled));
            }
            let margins = x.matvec(&w_true);
            let labels: Vector = margins
                .iter()
                .map(|&m| {
                    let y = if m >= 0.0 { 1.0 } else { -1.0 };
                    if r.random::<f64>() < spec.flip_prob {
                        -y
                    } else {
                        y
                    }
                })
                .collect();
            Ok(Synthetic {
                data: LabeledDataset::new(x, labels)?,
                w_true,
            })
        }
    }
}
