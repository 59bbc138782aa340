use crate::error::{Error, Result};
use crate::solver::RunOutcome;

use super::agd::AgdConfig;

pub const AGD_STEP_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const AGD_MOMENTUM_GRID: [f64; 5] = [0.5, 0.9, 0.95, 0.99, 0.999];
pub const SVRG_STEP_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const SVRG_EPOCH_GRID: [usize; 3] = [30, 100, 300];

/// Every `(α, β)` pair of the given grids over a template configuration.
pub fn agd_grid(template: &AgdConfig, steps: &[f64], momenta: &[f64]) -> Vec<AgdConfig> {
    steps
        .iter()
        .flat_map(|&a| {
            momenta.iter().map(move |&b| AgdConfig {
                step_alpha: a,
                momentum_beta: b,
                ..template.clone()
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GridSearch<C> {
    pub results: Vec<(C, RunOutcome)>,
    pub best: usize,
}

impl<C> GridSearch<C> {
    pub fn best(&self) -> &(C, RunOutcome) {
        &self.results[self.best]
    }
}

/// Final objective, with failed or diverged runs ranked last.
pub fn by_final_objective(outcome: &RunOutcome) -> f64 {
    if outcome.termination.is_success() {
        outcome.final_objective()
    } else {
        f64::INFINITY
    }
}

/// Sequential sweep; the run with the smallest `score` wins, ties go to the
/// earliest configuration. Non-finite scores never win over finite ones.
pub fn grid_search<C: Clone>(
    configs: &[C],
    mut run: impl FnMut(&C) -> Result<RunOutcome>,
    score: impl Fn(&RunOutcome) -> f64,
) -> Result<GridSearch<C>> {
    if configs.is_empty() {
        return Err(Error::Config("empty parameter grid".into()));
    }
    let mut results = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, f64)> = None;
    for (k, c) in configs.iter().enumerate() {
        let outcome = run(c)?;
        let s = score(&outcome);
        let s = if s.is_nan() { f64::INFINITY } else { s };
        if best.is_none_or(|(_, b)| s < b) {
            best = Some((k, s));
        }
        results.push((c.clone(), outcome));
    }
    Ok(GridSearch {
        results,
        best: best.map_or(0, |(k, _)| k),
    })
}
