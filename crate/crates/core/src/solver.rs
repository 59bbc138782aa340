//! The solver abstraction and the by-name registry the CLI selects from.

use std::collections::BTreeMap;
use std::fmt;

use serde::de::DeserializeOwned;

use crate::baselines::{AgdConfig, AgdSolver, DaneConfig, DaneSolver, LbfgsConfig, LbfgsSolver};
use crate::comms::{Fabric, NetworkStats};
use crate::error::{Error, Result};
use crate::giant::{GiantConfig, GiantSolver};
use crate::linalg::Vector;
use crate::objective::{LabeledDataset, ObjectiveSpec};
use crate::trace::IterationTrace;
use crate::worker::WorkerShard;

/// Everything a solver needs to know about the problem instance.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    pub spec: &'a ObjectiveSpec,
    /// Full training set; only used for diagnostics outside the fabric.
    pub data: &'a LabeledDataset,
    pub shards: &'a [WorkerShard],
}

impl<'a> Problem<'a> {
    pub fn new(spec: &'a ObjectiveSpec, data: &'a LabeledDataset, shards: &'a [WorkerShard]) -> Result<Self> {
        spec.validate(data)?;
        if shards.is_empty() {
            return Err(Error::Config("no worker shards".into()));
        }
        if shards.iter().any(|s| s.data.dim() != data.dim()) {
            return Err(Error::Dimension("shard feature dimension differs from dataset".into()));
        }
        Ok(Problem { spec, data, shards })
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    /// Gradient norm fell below the stopping tolerance.
    Converged,
    IterationLimit,
    Diverged(String),
    /// A worker or collective failed; the trace is partial.
    Failed(String),
}

impl Termination {
    pub fn is_success(&self) -> bool {
        matches!(self, Termination::Converged | Termination::IterationLimit)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Converged => write!(f, "converged"),
            Termination::IterationLimit => write!(f, "iteration-limit"),
            Termination::Diverged(why) => write!(f, "diverged: {why}"),
            Termination::Failed(why) => write!(f, "failed: {why}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Vec<IterationTrace>,
    pub solution: Vector,
    pub termination: Termination,
    /// Fabric counters at exit, including any final gradient check.
    pub stats: NetworkStats,
    /// `w_0, w_1, …` when requested through [`RunOptions::record_iterates`].
    pub iterates: Vec<Vector>,
}

impl RunOutcome {
    pub fn final_objective(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |t| t.objective)
    }

    /// Cumulative rounds at the first recorded iterate whose error norm is at
    /// most `target`.
    pub fn rounds_to_error(&self, target: f64) -> Option<u64> {
        self.trace
            .iter()
            .find(|t| t.error_norm.is_some_and(|e| e <= target))
            .map(|t| t.stats.rounds)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub reference: Option<&'a Vector>,
    /// Record elapsed wall time in traces; off yields byte-reproducible output.
    pub wall_clock: bool,
    pub record_iterates: bool,
    /// Stop as converged once `||w_t - w*|| <= target` (needs `reference`).
    pub error_target: Option<f64>,
}

pub trait Solver: Send + Sync {
    fn name(&self) -> &'static str;

    /// Fabric rounds consumed by one full iteration.
    fn rounds_per_iteration(&self) -> u64;

    /// Counter increments of one full iteration on `d` features and `m` workers.
    fn iteration_cost(&self, d: usize, m: usize) -> NetworkStats;

    fn run(&self, problem: &Problem<'_>, fabric: &mut Fabric, w0: &Vector, options: RunOptions<'_>) -> Result<RunOutcome>;
}

/// Cost of `gradient_rounds / 2` distributed gradients (broadcast `w`,
/// reduce `g`), optionally followed by a line search over `candidates`
/// step sizes. A GIANT-style iteration is two such round pairs.
pub fn schedule_cost(gradient_rounds: u64, line_search_candidates: Option<usize>, d: usize, m: usize) -> NetworkStats {
    let (d, m) = (d as u64, m as u64);
    let pairs = gradient_rounds / 2;
    let mut cost = NetworkStats {
        rounds: gradient_rounds,
        driver_to_worker_words: pairs * d * m,
        worker_to_driver_words: pairs * d * m,
    };
    if let Some(c) = line_search_candidates {
        cost.rounds += 2;
        cost.driver_to_worker_words += d * m;
        cost.worker_to_driver_words += (c as u64 + 1) * m;
    }
    cost
}

pub type SolverFactory = fn(&toml::Table) -> Result<Box<dyn Solver>>;

fn parse_block<C: DeserializeOwned>(name: &str, block: &toml::Table) -> Result<C> {
    C::deserialize(toml::Value::Table(block.clone()))
        .map_err(|e| Error::Config(format!("[{name}] block: {e}")))
}

fn giant_factory(block: &toml::Table) -> Result<Box<dyn Solver>> {
    let config: GiantConfig = parse_block("giant", block)?;
    Ok(Box::new(GiantSolver::new(config)?))
}

fn agd_factory(block: &toml::Table) -> Result<Box<dyn Solver>> {
    let config: AgdConfig = parse_block("agd", block)?;
    Ok(Box::new(AgdSolver::new(config)?))
}

fn lbfgs_factory(block: &toml::Table) -> Result<Box<dyn Solver>> {
    let config: LbfgsConfig = parse_block("lbfgs", block)?;
    Ok(Box::new(LbfgsSolver::new(config)?))
}

fn dane_factory(block: &toml::Table) -> Result<Box<dyn Solver>> {
    let config: DaneConfig = parse_block("dane", block)?;
    Ok(Box::new(DaneSolver::new(config)?))
}

/// Name → factory map; each factory parses its own configuration block.
#[derive(Debug, Clone)]
pub struct SolverRegistry {
    factories: BTreeMap<String, SolverFactory>,
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut registry = SolverRegistry::empty();
        registry.register("giant", giant_factory);
        registry.register("agd", agd_factory);
        registry.register("lbfgs", lbfgs_factory);
        registry.register("dane", dane_factory);
        registry
    }
}

impl SolverRegistry {
    pub fn empty() -> Self {
        SolverRegistry {
            factories: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &str, factory: SolverFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, name: &str, block: &toml::Table) -> Result<Box<dyn Solver>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownSolver(name.to_string()))?;
        factory(block)
    }
}
