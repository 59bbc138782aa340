//! Per-shard computations run by each worker.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CgReport, Vector};
use crate::objective::{self, HessianOperator, LabeledDataset, ObjectiveSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgSettings {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings {
            max_iter: 100,
            rel_tol: 1e-8,
        }
    }
}

impl CgSettings {
    /// Fixed iteration budget with the residual early exit disabled.
    pub fn budget(iterations: usize) -> Self {
        CgSettings {
            max_iter: iterations.max(1),
            rel_tol: 0.0,
        }
    }
}

/// One worker's slice of the training set.
#[derive(Debug, Clone)]
pub struct WorkerShard {
    pub worker_id: usize,
    /// Global row indices held by this worker.
    pub local_indices: Vec<usize>,
    pub data: LabeledDataset,
    pub cg: CgSettings,
}

impl WorkerShard {
    pub fn new(worker_id: usize, local_indices: Vec<usize>, full: &LabeledDataset, cg: CgSettings) -> Result<Self> {
        if local_indices.is_empty() {
            return Err(Error::Config(format!("shard {worker_id} is empty")));
        }
        if let Some(j) = local_indices.iter().find(|&&j| j >= full.len()) {
            return Err(Error::Range(format!("shard index {j} outside [0, {})", full.len())));
        }
        let data = full.subset(&local_indices);
        Ok(WorkerShard {
            worker_id,
            local_indices,
            data,
            cg,
        })
    }

    pub fn sample_count(&self) -> usize {
        self.local_indices.len()
    }

    /// `(1/s) Σ_{j∈J_i} ℓ'_j(wᵀx_j) x_j + M w`
    pub fn local_gradient(&self, spec: &ObjectiveSpec, w: &[f64]) -> Result<Vector> {
        objective::gradient(spec, &self.data, w)
    }

    /// Additive share `(s/n)·∇(mean local loss) + (1/m)·Mw`; the plain sum
    /// over all workers is the global gradient, even for unequal shards.
    pub fn gradient_share(&self, spec: &ObjectiveSpec, w: &[f64], total_samples: usize, workers: usize) -> Result<Vector> {
        let mut g = objective::loss_gradient(spec, &self.data, w)?;
        g.scale(self.sample_count() as f64 / total_samples as f64);
        g.axpy(1.0 / workers as f64, &spec.regularizer.apply(w));
        Ok(g)
    }

    /// `(s/n)·(local mean loss) + r(w)/m`; shares of all workers sum to `f(w)`.
    pub fn objective_share(&self, spec: &ObjectiveSpec, w: &[f64], total_samples: usize, workers: usize) -> Result<f64> {
        let loss = objective::mean_loss(spec, &self.data, w)?;
        let weight = self.sample_count() as f64 / total_samples as f64;
        Ok(weight * loss + spec.regularizer.value(w) / workers as f64)
    }

    /// Local objective `f_i(w)` with the full regularizer.
    pub fn local_objective(&self, spec: &ObjectiveSpec, w: &[f64]) -> Result<f64> {
        objective::objective_value(spec, &self.data, w)
    }

    /// Solves `((1/s) A_iᵀA_i + M) p = g` by conjugate gradient from zero.
    pub fn local_ant_direction(&self, spec: &ObjectiveSpec, w: &[f64], g: &[f64]) -> Result<(Vector, CgReport)> {
        self.local_ant_direction_with(spec, w, g, self.cg)
    }

    pub fn local_ant_direction_with(&self, spec: &ObjectiveSpec, w: &[f64], g: &[f64], cg: CgSettings) -> Result<(Vector, CgReport)> {
        let h = HessianOperator::at(spec, &self.data, w)?;
        let report = linalg::cg_solve(|v| h.apply(v), g, cg.max_iter, cg.rel_tol)?;
        Ok((report.solution.clone(), report))
    }

    /// Same system as [`Self::local_ant_direction`], solved densely.
    pub fn exact_local_newton(&self, spec: &ObjectiveSpec, w: &[f64], g: &[f64]) -> Result<Vector> {
        let h = objective::materialize_hessian(spec, &self.data, w)?;
        linalg::direct_spd_solve(&h, g)
    }

    /// This worker's additive share of `f(w + α·direction)` for every
    /// candidate `α`: `(s/n)·(mean local loss) + (1/m)·½wᵀMw`. Summing the
    /// shares over all `m` workers gives the global objective exactly.
    pub fn local_linesearch_values(
        &self,
        spec: &ObjectiveSpec,
        w: &[f64],
        direction: &[f64],
        steps: &[f64],
        total_samples: usize,
        workers: usize,
    ) -> Result<Vec<f64>> {
        if let Some(a) = steps.iter().find(|a| !a.is_finite()) {
            return Err(Error::Range(format!("non-finite step candidate {a}")));
        }
        steps
            .iter()
            .map(|&alpha| {
                let mut trial = Vector::from(w);
                trial.axpy(alpha, direction);
                self.objective_share(spec, &trial, total_samples, workers)
            })
            .collect()
    }
}

/// CG iterations that guarantee the inexact-solve certificate
/// `||H^{1/2}(p' - p)|| <= (ε₀/2)||H^{1/2} p||` for condition number `κ̃`:
/// `⌈log(8/ε₀²) / log((√κ̃+1)/(√κ̃-1))⌉`.
pub fn cg_iteration_budget(kappa_tilde: f64, epsilon0: f64) -> Result<usize> {
    if !(epsilon0 > 0.0 && epsilon0 < 1.0) {
        return Err(Error::Range(format!("ε₀ must lie in (0, 1), got {epsilon0}")));
    }
    if !(kappa_tilde > 1.0) {
        return Ok(1);
    }
    let root = kappa_tilde.sqrt();
    let q = (8.0 / (epsilon0 * epsilon0)).ln() / ((root + 1.0) / (root - 1.0)).ln();
    Ok(q.ceil().max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    #[test]
    fn budget_examples() {
        assert_eq!(cg_iteration_budget(100.0, 0.1).unwrap(), 34);
        assert_eq!(cg_iteration_budget(1.0, 0.1).unwrap(), 1);
        assert_eq!(cg_iteration_budget(0.5, 0.1).unwrap(), 1);
        assert!(cg_iteration_budget(1.0 + 1e-12, 0.1).unwrap() >= 1);
        assert!(cg_iteration_budget(1000.0, 0.1).unwrap() > cg_iteration_budget(100.0, 0.1).unwrap());
        assert!(cg_iteration_budget(100.0, 0.01).unwrap() > cg_iteration_budget(100.0, 0.1).unwrap());
        assert!(cg_iteration_budget(100.0, 0.0).is_err());
    }

    fn identity_shard() -> (WorkerShard, ObjectiveSpec) {
        // XᵀX/s = I with s = 2 rows of √2
        let x = DenseMatrix::from_rows(&[vec![2f64.sqrt(), 0.0], vec![0.0, 2f64.sqrt()]]).unwrap();
        let data = LabeledDataset::new(x, vec![1.0, 1.0].into()).unwrap();
        (WorkerShard::new(0, vec![0, 1], &data, CgSettings::default()).unwrap(), ObjectiveSpec::ridge(0.0))
    }

    #[test]
    fn zero_gradient_gives_zero_direction() {
        let (shard, spec) = identity_shard();
        let (p, rep) = shard.local_ant_direction(&spec, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0]);
        assert_eq!(rep.iterations, 0);
    }

    #[test]
    fn identity_hessian_returns_gradient() {
        let (shard, spec) = identity_shard();
        let g = [0.3, -1.7];
        let p = shard.exact_local_newton(&spec, &[0.0, 0.0], &g).unwrap();
        assert!((p[0] - 0.3).abs() < 1e-15 && (p[1] + 1.7).abs() < 1e-15);
    }

    #[test]
    fn zero_direction_line_search_is_flat() {
        let (shard, spec) = identity_shard();
        let vals = shard
            .local_linesearch_values(&spec, &[0.5, 0.5], &[0.0, 0.0], &[1.0, 0.25, 0.0625], 2, 1)
            .unwrap();
        let f = shard.local_objective(&spec, &[0.5, 0.5]).unwrap();
        assert!(vals.iter().all(|v| *v == f));
    }

    #[test]
    fn shard_rejects_bad_indices() {
        let (shard, _) = identity_shard();
        assert!(WorkerShard::new(1, vec![], &shard.data, CgSettings::default()).is_err());
        assert!(WorkerShard::new(1, vec![5], &shard.data, CgSettings::default()).is_err());
    }
}
