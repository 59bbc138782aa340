//! Experiment runner for `giant-core`: builds the dataset, shards and fabric
//! from a config file, runs one solver and writes its trace.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use giant_core::data::{self, RffConfig};
use giant_core::giant::solve_reference;
use giant_core::synthetic::generate_synthetic;
use giant_core::theory::{self, SuiteConfig, SuiteReport};
use giant_core::{objective, rng, trace, CgSettings, Fabric, LabeledDataset, Problem, RunOptions, RunOutcome, SolverRegistry, Vector};

pub use config::{DatasetSource, ExperimentConfig, GenConfig, SolverKind};

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

/// Relative tolerance of the reference solve.
const REFERENCE_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub outcome: RunOutcome,
    /// Trace rows whose counter increments differ from the solver's schedule.
    pub accounting_violations: usize,
    pub test_objective: Option<f64>,
    pub output_dir: PathBuf,
}

impl ExperimentReport {
    pub fn success(&self) -> bool {
        self.outcome.termination.is_success() && self.accounting_violations == 0
    }

    pub fn summary(&self, solver: &str) -> String {
        let o = &self.outcome;
        let mut s = String::new();
        let _ = writeln!(s, "solver = {solver}");
        let _ = writeln!(s, "termination = {}", o.termination);
        let _ = writeln!(s, "converged = {}", o.termination == giant_core::Termination::Converged);
        let _ = writeln!(s, "iterations = {}", o.trace.len().saturating_sub(1));
        let _ = writeln!(s, "final_objective = {}", o.final_objective());
        if let Some(e) = o.trace.last().and_then(|t| t.error_norm) {
            let _ = writeln!(s, "final_error_norm = {e}");
        }
        if let Some(t) = self.test_objective {
            let _ = writeln!(s, "test_objective = {t}");
        }
        let _ = writeln!(s, "total_rounds = {}", o.stats.rounds);
        let _ = writeln!(s, "d2w_words = {}", o.stats.driver_to_worker_words);
        let _ = writeln!(s, "w2d_words = {}", o.stats.worker_to_driver_words);
        let _ = writeln!(s, "accounting_violations = {}", self.accounting_violations);
        s
    }
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<LabeledDataset> {
    let data = match &config.dataset {
        DatasetSource::Libsvm { path } => data::read_libsvm_file(path).with_context(|| format!("reading {}", path.display()))?,
        DatasetSource::Synthetic(spec) => generate_synthetic(spec, rng::derive_seed(config.seed, "dataset", 0))?.data,
    };
    let Some(rff) = &config.rff else {
        return Ok(data);
    };
    let sigma = match rff.sigma {
        Some(s) => s,
        None => data::estimate_sigma(&data.features, rff.sigma_pairs, rng::derive_seed(config.seed, "sigma", 0))?,
    };
    let mapped = data::rff_map(
        &data.features,
        &RffConfig {
            target_dim: rff.target_dim,
            sigma,
            seed: rng::derive_seed(config.seed, "rff", 0),
        },
    )?;
    Ok(LabeledDataset::new(mapped, data.labels)?)
}

/// Rows `1..` of the trace whose counter deltas differ from `expected`.
pub fn accounting_violations(outcome: &RunOutcome, expected: giant_core::NetworkStats) -> usize {
    outcome
        .trace
        .windows(2)
        .filter(|w| {
            let (a, b) = (w[0].stats, w[1].stats);
            b.rounds - a.rounds != expected.rounds
                || b.driver_to_worker_words - a.driver_to_worker_words != expected.driver_to_worker_words
                || b.worker_to_driver_words - a.worker_to_driver_words != expected.worker_to_driver_words
        })
        .count()
}

/// Runs one experiment and writes `trace.csv` and `summary.txt` into the
/// output directory. Solver failures still write both files; the report
/// says whether the run succeeded.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let output_dir = config.output.clone().context("no output directory (set `output` or pass --output)")?;
    let registry = SolverRegistry::default();
    let solver = registry.build(config.solver.name(), &config.solver_block())?;
    let spec = config.objective_spec();
    let full = load_dataset(config)?;
    let (train, test) = match config.train_fraction {
        Some(f) => {
            let (a, b) = data::train_test_split(&full, f, rng::derive_seed(config.seed, "split", 0))?;
            (a, Some(b))
        }
        None => (full, None),
    };
    let shards = data::partition_shards(&train, config.workers, rng::derive_seed(config.seed, "partition", 0), CgSettings::default())?;
    let problem = Problem::new(&spec, &train, &shards)?;
    let reference = if config.reference {
        Some(solve_reference(&spec, &train, REFERENCE_TOL).context("computing the reference solution")?)
    } else {
        None
    };
    let mut fabric = Fabric::with_mode(config.workers, config.execution)?;
    let options = RunOptions {
        reference: reference.as_ref(),
        wall_clock: config.wall_clock,
        ..RunOptions::default()
    };
    let outcome = solver.run(&problem, &mut fabric, &Vector::zeros(train.dim()), options)?;
    let test_objective = match &test {
        Some(t) => Some(objective::objective_value(&spec, t, &outcome.solution)?),
        None => None,
    };
    let report = ExperimentReport {
        accounting_violations: accounting_violations(&outcome, solver.iteration_cost(train.dim(), config.workers)),
        outcome,
        test_objective,
        output_dir,
    };
    write_outputs(&report, solver.name())?;
    Ok(report)
}

fn write_outputs(report: &ExperimentReport, solver: &str) -> Result<()> {
    let dir = &report.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(TRACE_FILE);
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    trace::write_csv(BufWriter::new(file), &report.outcome.trace)?;
    fs::write(dir.join(SUMMARY_FILE), report.summary(solver))?;
    Ok(())
}

/// Parses a suite config; an empty file runs every check with defaults.
pub fn load_suite_config(path: &Path) -> Result<SuiteConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: SuiteConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    config.validate()?;
    Ok(config)
}

pub fn run_theory_suite(config: &SuiteConfig, output: Option<&Path>) -> Result<SuiteReport> {
    let report = theory::run_suite(config)?;
    if let Some(path) = output {
        if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, report.to_text()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}

/// Writes the generated dataset in LIBSVM format and returns its path.
pub fn generate(config: &GenConfig, output: Option<&Path>) -> Result<PathBuf> {
    let Some(path) = output.map(Path::to_path_buf).or_else(|| config.output.clone()) else {
        bail!("no output file (set `output` or pass --output)");
    };
    let synth = generate_synthetic(&config.generator, config.seed)?;
    let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    data::write_libsvm(BufWriter::new(file), &synth.data)?;
    Ok(path)
}
