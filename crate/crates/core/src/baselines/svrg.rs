use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// `F(u) = (1/N) Σ_j F_j(u)` with per-term gradients.
pub trait FiniteSum {
    fn dim(&self) -> usize;
    fn terms(&self) -> usize;
    fn term_gradient(&self, j: usize, u: &[f64]) -> Vector;

    fn full_gradient(&self, u: &[f64]) -> Vector {
        let mut g = Vector::zeros(self.dim());
        for j in 0..self.terms() {
            g.axpy(1.0, &self.term_gradient(j, u));
        }
        g.scale(1.0 / self.terms() as f64);
        g
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrgConfig {
    pub step: f64,
    pub max_epochs: usize,
    /// Inner updates per epoch; `None` means one pass (`N` updates).
    pub inner_loop_len: Option<usize>,
}

impl Default for SvrgConfig {
    fn default() -> Self {
        SvrgConfig {
            step: 0.1,
            max_epochs: 30,
            inner_loop_len: None,
        }
    }
}

impl SvrgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("svrg step must be positive, got {}", self.step)));
        }
        if self.max_epochs == 0 || self.inner_loop_len == Some(0) {
            return Err(Error::Config("svrg needs at least one epoch and one inner step".into()));
        }
        Ok(())
    }
}

/// Variance-reduced SGD with a full-gradient snapshot per epoch and
/// with-replacement sampling. Returns the last iterate.
pub fn svrg_minimize<F: FiniteSum + ?Sized>(objective: &F, config: &SvrgConfig, u0: &[f64], rng: &mut impl Rng) -> Result<Vector> {
    config.validate()?;
    let n = objective.terms();
    if n == 0 {
        return Err(Error::Config("finite sum has no terms".into()));
    }
    let inner = config.inner_loop_len.unwrap_or(n);
    let mut u = Vector::from(u0);
    for epoch in 0..config.max_epochs {
        let snapshot = u.clone();
        let mu = objective.full_gradient(&snapshot);
        if mu.norm() == 0.0 {
            break;
        }
        for _ in 0..inner {
            let j = rng.random_range(0..n);
            let mut est = objective.term_gradient(j, &u);
            est.axpy(-1.0, &objective.term_gradient(j, &snapshot));
            est.axpy(1.0, &mu);
            u.axpy(-config.step, &est);
        }
        if !u.is_finite() {
            return Err(Error::Divergence(format!("svrg iterate became non-finite in epoch {epoch}")));
        }
    }
    Ok(u)
}
