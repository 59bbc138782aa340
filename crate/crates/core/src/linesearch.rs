//! Armijo backtracking over a fixed candidate set, evaluated in one
//! Broadcast/Reduce exchange.

use serde::{Deserialize, Serialize};

use crate::comms::Fabric;
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::solver::Problem;

/// `{4⁰, 4⁻¹, …, 4⁻⁹}`
pub fn default_candidates() -> Vec<f64> {
    (0..10).map(|k| 0.25f64.powi(k)).collect()
}

pub const DEFAULT_ARMIJO_C: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    pub armijo_c: f64,
    pub candidates: Vec<f64>,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig {
            armijo_c: DEFAULT_ARMIJO_C,
            candidates: default_candidates(),
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::Config(format!("armijo_c must lie in (0, 1), got {}", self.armijo_c)));
        }
        if self.candidates.is_empty() {
            return Err(Error::Config("step candidate list is empty".into()));
        }
        if self.candidates.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Config("step candidates must be finite and positive".into()));
        }
        if self.candidates.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("step candidates must be strictly decreasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepChoice {
    pub alpha: f64,
    /// The Armijo condition held for `alpha`.
    pub satisfied: bool,
    /// Not even the fallback decreased the objective.
    pub increased: bool,
}

/// Largest candidate with `f(w + α·dir) <= f(w) + α·c·⟨dir, ∇f(w)⟩`.
///
/// If none qualifies, falls back to the candidate with the smallest value, or
/// to the smallest candidate when every candidate increases `f`.
pub fn select_step(values: &[f64], f_w: f64, directional: f64, c: f64, candidates: &[f64]) -> StepChoice {
    debug_assert_eq!(values.len(), candidates.len());
    for (value, alpha) in values.iter().zip(candidates) {
        if *value <= f_w + alpha * c * directional {
            return StepChoice {
                alpha: *alpha,
                satisfied: true,
                increased: false,
            };
        }
    }
    let best = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1));
    match best {
        Some((k, v)) if *v <= f_w => StepChoice {
            alpha: candidates[k],
            satisfied: false,
            increased: false,
        },
        _ => StepChoice {
            alpha: candidates.iter().copied().fold(f64::INFINITY, f64::min),
            satisfied: false,
            increased: true,
        },
    }
}

/// Two rounds: broadcast `direction`, reduce the per-worker objective shares
/// at `α = 0` and every candidate, then select a step at the driver.
pub fn distributed_line_search(
    problem: &Problem<'_>,
    fabric: &mut Fabric,
    w: &Vector,
    direction: &Vector,
    gradient: &Vector,
    config: &LineSearchConfig,
) -> Result<StepChoice> {
    let delivered = fabric.broadcast(direction)?;
    let mut steps = Vec::with_capacity(config.candidates.len() + 1);
    steps.push(0.0);
    steps.extend_from_slice(&config.candidates);
    let n = problem.data.len();
    let m = fabric.workers();
    let shares = fabric.execute(problem.shards, |_, shard| {
        shard.local_linesearch_values(problem.spec, w, &delivered, &steps, n, m)
    })?;
    let totals = fabric.reduce_concat_scalars(&shares)?;
    let directional = linalg::dot(direction, gradient);
    Ok(select_step(&totals[1..], totals[0], directional, config.armijo_c, &config.candidates))
}
