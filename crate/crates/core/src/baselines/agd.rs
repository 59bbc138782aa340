use serde::{Deserialize, Serialize};

use crate::comms::{Fabric, NetworkStats};
use crate::error::{Error, Result};
use crate::giant::{check_start, distributed_gradient, is_runtime_failure};
use crate::linalg::Vector;
use crate::solver::{schedule_cost, Problem, RunOptions, RunOutcome, Solver, Termination};
use crate::trace::Monitor;

/// Heavy-ball accelerated gradient: `v ← βv + g`, `w ← w - αv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgdConfig {
    pub step_alpha: f64,
    pub momentum_beta: f64,
    pub max_iterations: usize,
    pub stop_tol: f64,
}

impl Default for AgdConfig {
    fn default() -> Self {
        AgdConfig {
            step_alpha: 1.0,
            momentum_beta: 0.9,
            max_iterations: 500,
            stop_tol: 1e-10,
        }
    }
}

impl AgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_alpha > 0.0 && self.step_alpha.is_finite()) {
            return Err(Error::Config(format!("step_alpha must be positive, got {}", self.step_alpha)));
        }
        if !(0.0..1.0).contains(&self.momentum_beta) {
            return Err(Error::Config(format!("momentum_beta must lie in [0, 1), got {}", self.momentum_beta)));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config("stop_tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AgdSolver {
    config: AgdConfig,
}

impl AgdSolver {
    pub fn new(config: AgdConfig) -> Result<Self> {
        config.validate()?;
        Ok(AgdSolver { config })
    }
}

impl Solver for AgdSolver {
    fn name(&self) -> &'static str {
        "agd"
    }

    fn rounds_per_iteration(&self) -> u64 {
        2
    }

    fn iteration_cost(&self, d: usize, m: usize) -> NetworkStats {
        schedule_cost(2, None, d, m)
    }

    fn run(&self, problem: &Problem<'_>, fabric: &mut Fabric, w0: &Vector, options: RunOptions<'_>) -> Result<RunOutcome> {
        run_agd(problem, fabric, &self.config, w0, options)
    }
}

/// Aborts with [`Termination::Diverged`] once `f(w_t) > 10·f(w_0)`.
pub fn run_agd(
    problem: &Problem<'_>,
    fabric: &mut Fabric,
    config: &AgdConfig,
    w0: &Vector,
    options: RunOptions<'_>,
) -> Result<RunOutcome> {
    config.validate()?;
    check_start(problem, fabric, w0)?;
    let mut monitor = Monitor::new(problem, options);
    let mut w = w0.clone();
    let mut v = Vector::zeros(w.len());
    monitor.push(&w, 0.0, fabric.stats(), true)?;
    let f0 = monitor.trace[0].objective;
    let mut t = 0;
    let termination = loop {
        if monitor.target_reached() {
            break Termination::Converged;
        }
        let g = match distributed_gradient(problem, fabric, &w) {
            Ok(g) => g,
            Err(e) if is_runtime_failure(&e) => break Termination::Failed(e.to_string()),
            Err(e) => return Err(e),
        };
        if g.norm() <= config.stop_tol {
            break Termination::Converged;
        }
        if t == config.max_iterations {
            break Termination::IterationLimit;
        }
        v.scale(config.momentum_beta);
        v.axpy(1.0, &g);
        w.axpy(-config.step_alpha, &v);
        t += 1;
        let f = monitor.push(&w, config.step_alpha, fabric.stats(), true)?.objective;
        if !f.is_finite() || f > 10.0 * f0 {
            break Termination::Diverged(format!("objective {f:e} exceeds 10x the starting value {f0:e}"));
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
