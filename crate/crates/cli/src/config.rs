use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use giant_core::synthetic::GeneratorSpec;
use giant_core::{ExecutionMode, LossKind, ObjectiveSpec};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Giant,
    Agd,
    Lbfgs,
    Dane,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Giant => "giant",
            SolverKind::Agd => "agd",
            SolverKind::Lbfgs => "lbfgs",
            SolverKind::Dane => "dane",
        }
    }

    fn takes_seed(self) -> bool {
        matches!(self, SolverKind::Giant | SolverKind::Dane)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DatasetSource {
    Libsvm { path: PathBuf },
    Synthetic(GeneratorSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveBlock {
    pub loss: LossKind,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RffBlock {
    pub target_dim: usize,
    /// Estimated from the data when absent.
    pub sigma: Option<f64>,
    #[serde(default = "default_sigma_pairs")]
    pub sigma_pairs: usize,
}

fn default_sigma_pairs() -> usize {
    10_000
}

fn default_true() -> bool {
    true
}

/// One experiment: a dataset, an objective, a solver and where to put the
/// trace. Solver settings live in a table named after the solver; tables for
/// other solvers are ignored so one file can be switched between them.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub solver: SolverKind,
    pub seed: u64,
    pub workers: usize,
    pub dataset: DatasetSource,
    pub objective: ObjectiveBlock,
    pub rff: Option<RffBlock>,
    /// Hold out `1 - train_fraction` of the rows and report their objective.
    pub train_fraction: Option<f64>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub execution: ExecutionMode,
    #[serde(default)]
    pub wall_clock: bool,
    /// Solve for `w*` first so the trace carries `||w_t - w*||`.
    #[serde(default = "default_true")]
    pub reference: bool,
    pub giant: Option<toml::Table>,
    pub agd: Option<toml::Table>,
    pub lbfgs: Option<toml::Table>,
    pub dane: Option<toml::Table>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).context("parsing experiment config")?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config = Self::parse(&text).with_context(|| format!("in {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let DatasetSource::Libsvm { path: p } = &mut config.dataset {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(out) = &mut config.output {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            bail!("workers must be at least 1");
        }
        if !(self.objective.gamma > 0.0 && self.objective.gamma.is_finite()) {
            bail!("objective.gamma must be positive, got {}", self.objective.gamma);
        }
        if let DatasetSource::Synthetic(g) = &self.dataset {
            if g.loss != self.objective.loss {
                bail!("synthetic dataset loss {:?} differs from objective loss {:?}", g.loss, self.objective.loss);
            }
        }
        if let Some(f) = self.train_fraction {
            if !(f > 0.0 && f < 1.0) {
                bail!("train_fraction must lie in (0, 1), got {f}");
            }
        }
        Ok(())
    }

    pub fn objective_spec(&self) -> ObjectiveSpec {
        match self.objective.loss {
            LossKind::Quadratic => ObjectiveSpec::ridge(self.objective.gamma),
            LossKind::Logistic => ObjectiveSpec::logistic(self.objective.gamma),
        }
    }

    /// The selected solver's table. A missing `seed` is filled from the root
    /// seed for solvers that draw random numbers.
    pub fn solver_block(&self) -> toml::Table {
        let block = match self.solver {
            SolverKind::Giant => &self.giant,
            SolverKind::Agd => &self.agd,
            SolverKind::Lbfgs => &self.lbfgs,
            SolverKind::Dane => &self.dane,
        };
        let mut block = block.clone().unwrap_or_default();
        if self.solver.takes_seed() && !block.contains_key("seed") {
            let seed = giant_core::rng::derive_seed(self.seed, "solver", 0);
            // toml integers are signed; keep the bit pattern in range
            block.insert("seed".into(), toml::Value::Integer((seed >> 1) as i64));
        }
        block
    }
}

/// `gen --spec`: a generator spec plus seed and destination.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub generator: GeneratorSpec,
}

impl GenConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut config: GenConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(out) = &mut config.output {
            if out.is_relative() {
                *out = path.parent().unwrap_or(Path::new("")).join(&*out);
            }
        }
        Ok(config)
    }
}
