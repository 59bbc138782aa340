use serde::{Deserialize, Serialize};

use crate::comms::{Fabric, NetworkStats};
use crate::error::{Error, Result};
use crate::giant::{check_start, distributed_gradient, is_runtime_failure};
use crate::linalg::{self, Vector};
use crate::linesearch::{self, LineSearchConfig, StepChoice};
use crate::objective::{self, LabeledDataset, ObjectiveSpec};
use crate::rng;
use crate::solver::{schedule_cost, Problem, RunOptions, RunOutcome, Solver, Termination};
use crate::trace::Monitor;
use crate::worker::WorkerShard;

use super::svrg::{svrg_minimize, FiniteSum, SvrgConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DaneLocalSolver {
    #[default]
    Svrg,
    /// Damped Newton with dense solves, to round-off.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaneConfig {
    pub dane_step_eta: f64,
    pub local_solver: DaneLocalSolver,
    pub svrg: SvrgConfig,
    pub line_search: bool,
    pub armijo_c: f64,
    pub step_candidates: Vec<f64>,
    pub max_iterations: usize,
    pub stop_tol: f64,
    pub seed: u64,
}

impl Default for DaneConfig {
    fn default() -> Self {
        DaneConfig {
            dane_step_eta: 1.0,
            local_solver: DaneLocalSolver::Svrg,
            svrg: SvrgConfig::default(),
            line_search: true,
            armijo_c: linesearch::DEFAULT_ARMIJO_C,
            step_candidates: linesearch::default_candidates(),
            max_iterations: 50,
            stop_tol: 1e-10,
            seed: 0,
        }
    }
}

impl DaneConfig {
    fn line_search_config(&self) -> LineSearchConfig {
        LineSearchConfig {
            armijo_c: self.armijo_c,
            candidates: self.step_candidates.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dane_step_eta > 0.0 && self.dane_step_eta.is_finite()) {
            return Err(Error::Config(format!("dane_step_eta must be positive, got {}", self.dane_step_eta)));
        }
        self.svrg.validate()?;
        self.line_search_config().validate()?;
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Config("stop_tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Worker sub-problem `min_u f_i(u) - ⟨b, u⟩` with `b = ∇f_i(w) - η·g`.
#[derive(Debug, Clone)]
pub struct DaneSubproblem<'a> {
    pub spec: &'a ObjectiveSpec,
    pub data: &'a LabeledDataset,
    pub shift: Vector,
}

impl<'a> DaneSubproblem<'a> {
    pub fn new(spec: &'a ObjectiveSpec, data: &'a LabeledDataset, w: &[f64], g: &[f64], eta: f64) -> Result<Self> {
        let mut shift = objective::gradient(spec, data, w)?;
        shift.axpy(-eta, g);
        Ok(DaneSubproblem { spec, data, shift })
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        Ok(objective::objective_value(self.spec, self.data, u)? - linalg::dot(&self.shift, u))
    }

    pub fn gradient(&self, u: &[f64]) -> Result<Vector> {
        Ok(objective::gradient(self.spec, self.data, u)?.sub(&self.shift))
    }

    /// Damped Newton from `u0` until the gradient stops shrinking or falls
    /// below `tol` relative to its starting norm.
    pub fn solve_exact(&self, u0: &[f64], tol: f64) -> Result<Vector> {
        let mut u = Vector::from(u0);
        let mut grad = self.gradient(&u)?;
        let start = grad.norm().max(f64::MIN_POSITIVE);
        for _ in 0..100 {
            let gn = grad.norm();
            if gn <= tol * start {
                break;
            }
            let h = objective::materialize_hessian(self.spec, self.data, &u)?;
            let step = linalg::direct_spd_solve(&h, &grad)?;
            let full = u.sub(&step);
            let full_grad = self.gradient(&full)?;
            // near the optimum value differences drown in round-off; a full step
            // that shrinks the gradient is accepted without the value test
            let (trial, next, alpha) = if full_grad.norm() < gn {
                (full, full_grad, 1.0)
            } else {
                let f = self.value(&u)?;
                let mut alpha = 1.0;
                let mut trial = full;
                while self.value(&trial)? > f - 1e-4 * alpha * linalg::dot(&step, &grad) && alpha > 1e-10 {
                    alpha *= 0.5;
                    trial = u.clone();
                    trial.axpy(-alpha, &step);
                }
                let next = self.gradient(&trial)?;
                (trial, next, alpha)
            };
            if next.norm() >= gn && alpha < 1.0 {
                break;
            }
            u = trial;
            grad = next;
            if grad.norm() >= gn {
                break;
            }
        }
        Ok(u)
    }
}

impl FiniteSum for DaneSubproblem<'_> {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn terms(&self) -> usize {
        self.data.len()
    }

    /// `ℓ'_j(x_jᵀu) x_j + Mu - b`
    fn term_gradient(&self, j: usize, u: &[f64]) -> Vector {
        let x = self.data.features.row(j);
        let coef = self.spec.loss.first_derivative(linalg::dot(x, u), self.data.labels[j]);
        let mut g = self.spec.regularizer.apply(u);
        g.axpy(coef, x);
        g.axpy(-1.0, &self.shift);
        g
    }
}

#[derive(Debug, Clone)]
pub struct DaneSolver {
    config: DaneConfig,
}

impl DaneSolver {
    pub fn new(config: DaneConfig) -> Result<Self> {
        config.validate()?;
        Ok(DaneSolver { config })
    }
}

impl Solver for DaneSolver {
    fn name(&self) -> &'static str {
        "dane"
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
        run_dane(problem, fabric, &self.config, w0, options)
    }
}

fn local_dane_solution(
    shard: &WorkerShard,
    spec: &ObjectiveSpec,
    w: &[f64],
    g: &[f64],
    config: &DaneConfig,
    iteration: usize,
) -> Result<Vector> {
    let sub = DaneSubproblem::new(spec, &shard.data, w, g, config.dane_step_eta)?;
    match config.local_solver {
        DaneLocalSolver::Exact => sub.solve_exact(w, 1e-14),
        DaneLocalSolver::Svrg => {
            let index = ((iteration as u64) << 32) | shard.worker_id as u64;
            let mut r = rng::derived_rng(config.seed, "dane-svrg", index);
            svrg_minimize(&sub, &config.svrg, w, &mut r)
        }
    }
}

enum Step {
    Converged,
    Limit,
    /// Direction `ū - w` and the step along it.
    Move(Vector, StepChoice),
}

/// Per iteration: gradient (2 rounds), broadcast `g`, reduce local solutions,
/// then optionally a line search along `ū - w` (2 rounds).
pub fn run_dane(
    problem: &Problem<'_>,
    fabric: &mut Fabric,
    config: &DaneConfig,
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
            let sols = fabric.execute(problem.shards, |_, shard| local_dane_solution(shard, problem.spec, &w, &gb, config, t))?;
            let mut u = fabric.reduce_sum(&sols)?;
            u.scale(1.0 / m);
            let direction = u.sub(&w);
            let choice = if config.line_search {
                linesearch::distributed_line_search(problem, fabric, &w, &direction, &g, &ls)?
            } else {
                StepChoice {
                    alpha: 1.0,
                    satisfied: true,
                    increased: false,
                }
            };
            Ok(Step::Move(direction, choice))
        })();
        match step {
            Ok(Step::Converged) => break Termination::Converged,
            Ok(Step::Limit) => break Termination::IterationLimit,
            Ok(Step::Move(direction, choice)) => {
                w.axpy(choice.alpha, &direction);
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
