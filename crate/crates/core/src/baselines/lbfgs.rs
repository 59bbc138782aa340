use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::comms::{Fabric, NetworkStats};
use crate::error::{Error, Result};
use crate::giant::{check_start, distributed_gradient, is_runtime_failure};
use crate::linalg::{self, Vector};
use crate::linesearch::{self, LineSearchConfig, StepChoice};
use crate::solver::{schedule_cost, Problem, RunOptions, RunOutcome, Solver, Termination};
use crate::trace::Monitor;

/// Curvature pairs with `⟨s, y⟩` at or below this times `||s||·||y||` are dropped.
const CURVATURE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbfgsConfig {
    pub history_size: usize,
    pub max_iterations: usize,
    pub stop_tol: f64,
    pub armijo_c: f64,
    pub step_candidates: Vec<f64>,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        LbfgsConfig {
            history_size: 10,
            max_iterations: 200,
            stop_tol: 1e-10,
            armijo_c: linesearch::DEFAULT_ARMIJO_C,
            step_candidates: linesearch::default_candidates(),
        }
    }
}

impl LbfgsConfig {
    fn line_search_config(&self) -> LineSearchConfig {
        LineSearchConfig {
            armijo_c: self.armijo_c,
            candidates: self.step_candidates.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.line_search_config().validate()?;
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config("stop_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsSolver {
    config: LbfgsConfig,
}

impl LbfgsSolver {
    pub fn new(config: LbfgsConfig) -> Result<Self> {
        config.validate()?;
        Ok(LbfgsSolver { config })
    }
}

impl Solver for LbfgsSolver {
    fn name(&self) -> &'static str {
        "lbfgs"
    }

    fn rounds_per_iteration(&self) -> u64 {
        4
    }

    fn iteration_cost(&self, d: usize, m: usize) -> NetworkStats {
        schedule_cost(2, Some(self.config.step_candidates.len()), d, m)
    }

    fn run(&self, problem: &Problem<'_>, fabric: &mut Fabric, w0: &Vector, options: RunOptions<'_>) -> Result<RunOutcome> {
        run_lbfgs(problem, fabric, &self.config, w0, options)
    }
}

/// Two-loop recursion: returns `H_k g` for the inverse-Hessian estimate built
/// from `(s, y)` pairs (oldest first), with `H₀ = (⟨s,y⟩/⟨y,y⟩)·I` from the
/// newest pair. An empty history returns `g`.
pub fn two_loop_direction(history: &VecDeque<(Vector, Vector)>, g: &[f64]) -> Vector {
    let mut q = Vector::from(g);
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y) in history.iter().rev() {
        let rho = 1.0 / linalg::dot(s, y);
        let a = rho * linalg::dot(s, &q);
        q.axpy(-a, y);
        alphas.push((a, rho));
    }
    if let Some((s, y)) = history.back() {
        q.scale(linalg::dot(s, y) / linalg::dot(y, y));
    }
    for ((s, y), (a, rho)) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * linalg::dot(y, &q);
        q.axpy(a - b, s);
    }
    q
}

enum Step {
    Converged,
    Limit,
    /// Gradient, search direction, accepted step.
    Move(Vector, Vector, StepChoice),
}

pub fn run_lbfgs(
    problem: &Problem<'_>,
    fabric: &mut Fabric,
    config: &LbfgsConfig,
    w0: &Vector,
    options: RunOptions<'_>,
) -> Result<RunOutcome> {
    config.validate()?;
    check_start(problem, fabric, w0)?;
    let mut monitor = Monitor::new(problem, options);
    let ls = config.line_search_config();
    let mut w = w0.clone();
    monitor.push(&w, 0.0, fabric.stats(), true)?;
    let mut history: VecDeque<(Vector, Vector)> = VecDeque::new();
    // step taken and gradient before it, awaiting the new gradient
    let mut pending: Option<(Vector, Vector)> = None;
    let mut t = 0;
    let termination = loop {
        if monitor.target_reached() {
            break Termination::Converged;
        }
        let step = (|| -> Result<Step> {
            let g = distributed_gradient(problem, fabric, &w)?;
            if let Some((s, g_prev)) = pending.take() {
                let y = g.sub(&g_prev);
                if config.history_size > 0 && linalg::dot(&s, &y) > CURVATURE_EPS * s.norm() * y.norm() {
                    if history.len() == config.history_size {
                        history.pop_front();
                    }
                    history.push_back((s, y));
                }
            }
            if g.norm() <= config.stop_tol {
                return Ok(Step::Converged);
            }
            if t == config.max_iterations {
                return Ok(Step::Limit);
            }
            let mut direction = two_loop_direction(&history, &g).scaled(-1.0);
            if !(linalg::dot(&direction, &g) < 0.0) {
                history.clear();
                direction = g.scaled(-1.0);
            }
            let choice = linesearch::distributed_line_search(problem, fabric, &w, &direction, &g, &ls)?;
            Ok(Step::Move(g, direction, choice))
        })();
        match step {
            Ok(Step::Converged) => break Termination::Converged,
            Ok(Step::Limit) => break Termination::IterationLimit,
            Ok(Step::Move(g, direction, choice)) => {
                let s = direction.scaled(choice.alpha);
                w.axpy(1.0, &s);
                pending = Some((s, g));
                t += 1;
                let objective = monitor.push(&w, choice.alpha, fabric.stats(), choice.satisfied)?.objective;
                let bad = !objective.is_finite();
                if bad {
                    break Termination::Diverged(format!("non-finite objective at iteration {t}"));
                }
            }
            Err(e) if is_runtime_failure(&e) => break Termination::Failed(e.to_string()),
            Err(e) => return Err(e),
        }
    };
    Ok(RunOutcome {
        trace: monitor.trace,
        solution: w,
        termination,
        stats: fabric.stats(),
        iterates: monitor.iterates,
    })
}
