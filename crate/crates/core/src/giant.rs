//! The GIANT outer loop and single-machine reference solvers.

use serde::{Deserialize, Serialize};

use crate::comms::{Fabric, NetworkStats};
use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::linesearch::{self, LineSearchConfig, StepChoice};
use crate::objective::{self, HessianOperator, LabeledDataset, ObjectiveSpec};
use crate::solver::{schedule_cost, Problem, RunOptions, RunOutcome, Solver, Termination};
use crate::trace::{IterationTrace, Monitor};
use crate::worker::{CgSettings, WorkerShard};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GiantConfig {
    pub max_iterations: usize,
    pub line_search: bool,
    pub armijo_c: f64,
    pub step_candidates: Vec<f64>,
    /// Overrides every shard's CG settings when present.
    pub cg: Option<CgSettings>,
    /// Solve local systems with a dense factorization instead of CG.
    pub exact_local_solves: bool,
    /// Stop once `||g_t||₂` is at most this.
    pub stop_tol: f64,
    pub seed: u64,
}

impl Default for GiantConfig {
    fn default() -> Self {
        GiantConfig {
            max_iterations: 50,
            line_search: true,
            armijo_c: linesearch::DEFAULT_ARMIJO_C,
            step_candidates: linesearch::default_candidates(),
            cg: None,
            exact_local_solves: false,
            stop_tol: 1e-10,
            seed: 0,
        }
    }
}

impl GiantConfig {
    pub fn line_search_config(&self) -> LineSearchConfig {
        LineSearchConfig {
            armijo_c: self.armijo_c,
            candidates: self.step_candidates.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.line_search_config().validate()?;
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config(format!("stop_tol must be non-negative, got {}", self.stop_tol)));
        }
        if let Some(cg) = &self.cg {
            if cg.max_iter == 0 || !(cg.rel_tol >= 0.0) {
                return Err(Error::Config("cg needs max_iter >= 1 and rel_tol >= 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GiantSolver {
    config: GiantConfig,
}

impl GiantSolver {
    pub fn new(config: GiantConfig) -> Result<Self> {
        config.validate()?;
        Ok(GiantSolver { config })
    }

    pub fn config(&self) -> &GiantConfig {
        &self.config
    }
}

impl Solver for GiantSolver {
    fn name(&self) -> &'static str {
        "giant"
    }

    fn rounds_per_iteration(&self) -> u64 {
        if self.config.line_search {
            6
        } else {
            4
        }
    }

    fn iteration_cost(&self, d: usize, m: usize) -> NetworkStats {
        let ls = self.config.line_search.then_some(self.config.step_candidates.len());
        schedule_cost(4, ls, d, m)
    }

    fn run(&self, problem: &Problem<'_>, fabric: &mut Fabric, w0: &Vector, options: RunOptions<'_>) -> Result<RunOutcome> {
        run_giant(problem, fabric, &self.config, w0, options)
    }
}

/// One worker's ANT direction under the configured local solver.
pub fn ant_direction(
    shard: &WorkerShard,
    spec: &ObjectiveSpec,
    w: &[f64],
    g: &[f64],
    config: &GiantConfig,
) -> Result<Vector> {
    if config.exact_local_solves {
        shard.exact_local_newton(spec, w, g)
    } else {
        let cg = config.cg.unwrap_or(shard.cg);
        Ok(shard.local_ant_direction_with(spec, w, g, cg)?.0)
    }
}

/// Mean of the per-shard ANT directions, computed without a fabric.
pub fn giant_direction(problem: &Problem<'_>, w: &[f64], g: &[f64], config: &GiantConfig) -> Result<Vector> {
    let mut p = Vector::zeros(w.len());
    for shard in problem.shards {
        p.axpy(1.0, &ant_direction(shard, problem.spec, w, g, config)?);
    }
    p.scale(1.0 / problem.shards.len() as f64);
    Ok(p)
}

pub(crate) fn check_start(problem: &Problem<'_>, fabric: &Fabric, w0: &Vector) -> Result<()> {
    if w0.len() != problem.dim() {
        return Err(Error::Dimension(format!("w0 has length {}, problem has {}", w0.len(), problem.dim())));
    }
    if fabric.workers() != problem.shards.len() {
        return Err(Error::Config(format!(
            "fabric has {} workers but there are {} shards",
            fabric.workers(),
            problem.shards.len()
        )));
    }
    Ok(())
}

/// Collective failures end the run but keep the partial trace.
pub(crate) fn is_runtime_failure(e: &Error) -> bool {
    matches!(e, Error::Worker { .. } | Error::FabricPoisoned { .. } | Error::Protocol(_))
}

/// R1 + R2: broadcast `w`, reduce the gradient shares.
pub(crate) fn distributed_gradient(problem: &Problem<'_>, fabric: &mut Fabric, w: &Vector) -> Result<Vector> {
    let wb = fabric.broadcast(w)?;
    let n = problem.data.len();
    let m = fabric.workers();
    let shares = fabric.execute(problem.shards, |_, shard| shard.gradient_share(problem.spec, &wb, n, m))?;
    fabric.reduce_sum(&shares)
}

enum Step {
    Converged,
    Limit,
    /// Averaged direction `p̃` and the step along `-p̃`.
    Move(Vector, StepChoice),
}

pub fn run_giant(
    problem: &Problem<'_>,
    fabric: &mut Fabric,
    config: &GiantConfig,
    w0: &Vector,
    options: RunOptions<'_>,
) -> Result<RunOutcome> {
    config.validate()?;
    check_start(problem, fabric, w0)?;
    let mut monitor = Monitor::new(problem, options);
    let ls = config.line_search_config();
    let m = fabric.workers() as f64;

    let mut w = w0.clone();
    monitor.push(&w, 0.0, fabric.stats(), true)?;
    let mut t = 0;
    let termination = loop {
        if monitor.target_reached() {
            break Termination::Converged;
        }
        let step = (|| -> Result<Step> {
            let g = distributed_gradient(problem, fabric, &w)?;
            if g.norm() <= config.stop_tol {
                return Ok(Step::Converged);
            }
            if t == config.max_iterations {
                return Ok(Step::Limit);
            }
            let gb = fabric.broadcast(&g)?;
            let dirs = fabric.execute(problem.shards, |_, shard| ant_direction(shard, problem.spec, &w, &gb, config))?;
            let mut p = fabric.reduce_sum(&dirs)?;
            p.scale(1.0 / m);
            let choice = if config.line_search {
                let descent = p.scaled(-1.0);
                linesearch::distributed_line_search(problem, fabric, &w, &descent, &g, &ls)?
            } else {
                StepChoice {
                    alpha: 1.0,
                    satisfied: true,
                    increased: false,
                }
            };
            Ok(Step::Move(p, choice))
        })();
        match step {
            Ok(Step::Converged) => break Termination::Converged,
            Ok(Step::Limit) => break Termination::IterationLimit,
            Ok(Step::Move(p, choice)) => {
                w.axpy(-choice.alpha, &p);
                t += 1;
                let objective = monitor.push(&w, choice.alpha, fabric.stats(), choice.satisfied)?.objective;
                let bad = !w.is_finite() || !objective.is_finite();
                if bad {
                    break Termination::Diverged(format!("non-finite iterate at iteration {t}"));
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

/// Exact `H⁻¹g` at `w` from the materialized global Hessian.
pub fn newton_direction_oracle(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<Vector> {
    let h = objective::materialize_hessian(spec, data, w)?;
    let g = objective::gradient(spec, data, w)?;
    linalg::direct_spd_solve(&h, &g)
}

pub const REFERENCE_TOL: f64 = 1e-14;
const REFERENCE_MAX_ITER: usize = 100;
/// Accept a stalled reference solve only below this relative gradient norm.
const REFERENCE_FLOOR: f64 = 1e-9;

/// High-precision single-machine Newton solve. Stops when
/// `||∇f(w)|| <= tol·max(1, ||∇f(0)||)`, or when Newton steps stop reducing the
/// gradient below `1e-9` relative (round-off floor).
pub fn solve_reference(spec: &ObjectiveSpec, data: &LabeledDataset, tol: f64) -> Result<Vector> {
    spec.validate(data)?;
    if !(spec.regularizer.min_eigenvalue() > 0.0) {
        return Err(Error::Precondition("reference solve needs a positive definite regularizer".into()));
    }
    let d = data.dim();
    let mut w = Vector::zeros(d);
    let mut g = objective::gradient(spec, data, &w)?;
    let scale = g.norm().max(1.0);
    let mut f = objective::objective_value(spec, data, &w)?;
    let mut stalls = 0;
    for _ in 0..REFERENCE_MAX_ITER {
        let gn = g.norm();
        if gn <= tol * scale {
            return Ok(w);
        }
        let p = if d <= objective::ORACLE_DIM_LIMIT {
            linalg::direct_spd_solve(&objective::materialize_hessian(spec, data, &w)?, &g)?
        } else {
            let h = HessianOperator::at(spec, data, &w)?;
            linalg::cg_solve(|v| h.apply(v), &g, 10 * d, 1e-15)?.solution
        };
        // full step when it decreases f or the gradient norm, else backtrack on f
        let directional = linalg::dot(&p, &g);
        let mut alpha = 1.0;
        let mut trial = w.sub(&p);
        let mut f_trial = objective::objective_value(spec, data, &trial)?;
        let mut g_trial = objective::gradient(spec, data, &trial)?;
        if f_trial > f - 1e-4 * directional && g_trial.norm() >= gn {
            while f_trial > f - 1e-4 * alpha * directional && alpha > 1e-10 {
                alpha *= 0.5;
                trial = w.clone();
                trial.axpy(-alpha, &p);
                f_trial = objective::objective_value(spec, data, &trial)?;
            }
            g_trial = objective::gradient(spec, data, &trial)?;
        }
        if g_trial.norm() < gn || f_trial < f {
            stalls = if g_trial.norm() < gn { 0 } else { stalls + 1 };
            w = trial;
            g = g_trial;
            f = f_trial;
        } else {
            stalls += 1;
        }
        if stalls >= 3 && g.norm() <= REFERENCE_FLOOR * scale {
            return Ok(w);
        }
    }
    if g.norm() <= REFERENCE_FLOOR * scale {
        return Ok(w);
    }
    Err(Error::ReferenceFailure {
        iterations: REFERENCE_MAX_ITER,
        grad_norm: g.norm(),
    })
}

/// Shorthand for iterating a trace's error norms.
pub fn error_norms(trace: &[IterationTrace]) -> Vec<f64> {
    trace.iter().filter_map(|t| t.error_norm).collect()
}
