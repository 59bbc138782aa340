//! Named numerical checks of the convergence and sketching guarantees.
//!
//! Each check builds seeded instances, measures the relevant constants
//! (spectral deviation `η`, `ϑ`, condition numbers) and compares observed
//! behaviour against the bound. Checks whose preconditions do not hold on
//! the measured instance are reported as vacuous rather than failed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::baselines::{self, AgdConfig, DaneConfig, DaneLocalSolver, LbfgsConfig};
use crate::comms::Fabric;
use crate::data;
use crate::error::{Error, Result};
use crate::giant::{self, GiantConfig};
use crate::linalg::{self, DenseMatrix, Vector};
use crate::objective::{self, LabeledDataset, LossKind, ObjectiveSpec};
use crate::rng;
use crate::sketch::{self, SamplingMatrixView, SpectralDeviation};
use crate::solver::{Problem, RunOptions, RunOutcome, Solver};
use crate::synthetic::{self, GeneratorSpec};
use crate::worker::{self, CgSettings, WorkerShard};

pub const CHECK_NAMES: [&str; 12] = [
    "quadratic_contraction",
    "phi_bound_exact",
    "phi_bound_inexact",
    "sampling_concentration",
    "cg_budget",
    "local_convergence",
    "inexact_contraction",
    "dane_equivalence",
    "comm_accounting",
    "calculus",
    "agd_gap",
    "monotone_descent",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The precondition did not hold on the measured instance.
    Vacuous,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Vacuous => "VACUOUS",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub measured: Vec<(String, f64)>,
    pub note: Option<String>,
}

impl CheckResult {
    fn new(name: &str) -> Self {
        CheckResult {
            name: name.to_string(),
            status: CheckStatus::Pass,
            measured: Vec::new(),
            note: None,
        }
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.measured.push((key.to_string(), value));
        self
    }

    fn status(mut self, status: CheckStatus) -> Self {
        self.status = status;
        self
    }

    fn pass_if(self, ok: bool) -> Self {
        self.status(if ok { CheckStatus::Pass } else { CheckStatus::Fail })
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.measured.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    /// `name<TAB>STATUS<TAB>k=v k=v ...[<TAB># note]`
    pub fn report_line(&self) -> String {
        let values: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={}", format_value(*v))).collect();
        let mut line = format!("{}\t{}\t{}", self.name, self.status, values.join(" "));
        if let Some(note) = &self.note {
            line.push_str("\t# ");
            line.push_str(note);
        }
        line
    }
}

/// Shortest round-trip form, switching to exponent notation outside `[1e-4, 1e9)`.
fn format_value(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e9).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        self.checks.iter().map(|c| c.report_line() + "\n").collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RidgeSettings {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub gamma: f64,
    pub kappa: f64,
}

impl Default for RidgeSettings {
    fn default() -> Self {
        RidgeSettings {
            n: 16384,
            d: 32,
            m: 8,
            gamma: 1e-3,
            kappa: 100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhiBoundSettings {
    pub instances: usize,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub gamma: f64,
    pub kappa: f64,
    pub epsilon0: f64,
}

impl Default for PhiBoundSettings {
    fn default() -> Self {
        PhiBoundSettings {
            instances: 50,
            n: 512,
            d: 8,
            m: 4,
            gamma: 1e-3,
            kappa: 10.0,
            epsilon0: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcentrationSettings {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub eta: f64,
    pub delta: f64,
    pub trials: usize,
    pub max_failure_fraction: f64,
}

impl Default for ConcentrationSettings {
    fn default() -> Self {
        ConcentrationSettings {
            n: 4096,
            d: 8,
            m: 4,
            eta: 0.5,
            delta: 0.1,
            trials: 200,
            max_failure_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CgBudgetSettings {
    pub d: usize,
    pub kappas: Vec<f64>,
    pub trials: usize,
    pub epsilon0: f64,
}

impl Default for CgBudgetSettings {
    fn default() -> Self {
        CgBudgetSettings {
            d: 16,
            kappas: vec![10.0, 100.0, 1000.0],
            trials: 50,
            epsilon0: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSettings {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub gamma: f64,
    /// Feature covariance condition number.
    pub kappa: f64,
    pub start_distance: f64,
    pub min_steps: usize,
    pub margin: f64,
    /// Errors at or below this are treated as round-off.
    pub noise_floor: f64,
}

impl Default for LocalSettings {
    fn default() -> Self {
        LocalSettings {
            n: 8192,
            d: 16,
            m: 4,
            gamma: 1e-3,
            kappa: 10.0,
            start_distance: 1e-3,
            min_steps: 5,
            margin: 0.1,
            noise_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaneEquivalenceSettings {
    pub instances: usize,
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub gamma: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub tol: f64,
}

impl Default for DaneEquivalenceSettings {
    fn default() -> Self {
        DaneEquivalenceSettings {
            instances: 20,
            n: 512,
            d: 8,
            m: 4,
            gamma: 1e-3,
            kappa: 100.0,
            iterations: 10,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalculusSettings {
    pub pairs: usize,
    pub n: usize,
    pub d: usize,
    pub gradient_tol: f64,
    pub hessian_vec_tol: f64,
    pub factor_tol: f64,
}

impl Default for CalculusSettings {
    fn default() -> Self {
        CalculusSettings {
            pairs: 20,
            n: 64,
            d: 6,
            gradient_tol: 1e-5,
            hessian_vec_tol: 1e-4,
            factor_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgdGapSettings {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub gamma: f64,
    pub kappa: f64,
    pub target: f64,
    pub min_ratio: f64,
    pub steps: Vec<f64>,
    pub momenta: Vec<f64>,
    pub max_agd_iterations: usize,
}

impl Default for AgdGapSettings {
    fn default() -> Self {
        AgdGapSettings {
            n: 4096,
            d: 16,
            m: 4,
            gamma: 1e-3,
            kappa: 1e3,
            target: 1e-6,
            min_ratio: 3.0,
            steps: baselines::AGD_STEP_GRID.to_vec(),
            momenta: baselines::AGD_MOMENTUM_GRID.to_vec(),
            max_agd_iterations: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Use this `η` instead of the measured spectral deviation.
    pub eta_override: Option<f64>,
    /// Run only these checks (all when absent).
    pub checks: Option<Vec<String>>,
    pub ridge: RidgeSettings,
    pub phi_bound: PhiBoundSettings,
    pub concentration: ConcentrationSettings,
    pub cg_budget: CgBudgetSettings,
    pub local: LocalSettings,
    pub dane: DaneEquivalenceSettings,
    pub calculus: CalculusSettings,
    pub agd_gap: AgdGapSettings,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 2017,
            eta_override: None,
            checks: None,
            ridge: RidgeSettings::default(),
            phi_bound: PhiBoundSettings::default(),
            concentration: ConcentrationSettings::default(),
            cg_budget: CgBudgetSettings::default(),
            local: LocalSettings::default(),
            dane: DaneEquivalenceSettings::default(),
            calculus: CalculusSettings::default(),
            agd_gap: AgdGapSettings::default(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(list) = &self.checks {
            if let Some(bad) = list.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
                return Err(Error::Config(format!("unknown check `{bad}`")));
            }
        }
        Ok(())
    }

    fn wants(&self, name: &str) -> bool {
        self.checks.as_ref().is_none_or(|list| list.iter().any(|c| c == name))
    }
}

pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    let mut checks = Vec::new();
    for name in CHECK_NAMES {
        if !config.wants(name) {
            continue;
        }
        let outcome = match name {
            "quadratic_contraction" => check_quadratic_contraction(config),
            "phi_bound_exact" => check_phi_exact(config),
            "phi_bound_inexact" => check_phi_inexact(config),
            "sampling_concentration" => check_sampling_concentration(config),
            "cg_budget" => check_cg_budget(config),
            "local_convergence" => check_local_convergence(config),
            "inexact_contraction" => check_inexact_contraction(config),
            "dane_equivalence" => check_dane_equivalence(config),
            "comm_accounting" => check_comm_accounting(config),
            "calculus" => check_calculus(config),
            "agd_gap" => check_agd_gap(config),
            "monotone_descent" => check_monotone_descent(config),
            _ => unreachable!("names come from CHECK_NAMES"),
        };
        checks.push(outcome.unwrap_or_else(|e| CheckResult::new(name).status(CheckStatus::Fail).note(e.to_string())));
    }
    Ok(SuiteReport { checks })
}

/// One sketch per shard: its rows, rescaled by `√(n/s_i)`.
pub fn partition_views(n: usize, shards: &[WorkerShard]) -> Result<Vec<SamplingMatrixView>> {
    shards.iter().map(|s| SamplingMatrixView::from_indices(n, &s.local_indices)).collect()
}

/// Spectral deviation of the shard sketches on the column space of
/// `A_t` at `w`.
pub fn measured_deviation(spec: &ObjectiveSpec, data: &LabeledDataset, shards: &[WorkerShard], w: &[f64]) -> Result<SpectralDeviation> {
    let a = objective::scaled_rows(spec, data, w)?;
    let u = linalg::thin_orthonormal_basis(&a);
    sketch::spectral_deviation(&u, &partition_views(data.len(), shards)?)
}

/// `η` used in the bounds, whether the sketches satisfy the deviation
/// condition with it, and `ϑ` at `w`.
struct MeasuredConstants {
    eta: f64,
    holds: bool,
    alpha: f64,
    vartheta: f64,
    deviation: SpectralDeviation,
}

fn measure_constants(
    config: &SuiteConfig,
    spec: &ObjectiveSpec,
    data: &LabeledDataset,
    shards: &[WorkerShard],
    w: &[f64],
    epsilon0: f64,
) -> Result<MeasuredConstants> {
    let deviation = measured_deviation(spec, data, shards, w)?;
    let eta = config.eta_override.unwrap_or_else(|| deviation.max_per_view());
    let m = shards.len();
    let holds = eta > 0.0 && eta < 1.0 && deviation.satisfies(eta);
    let (alpha, vartheta) = if eta > 0.0 && eta < 1.0 {
        let a = objective::scaled_rows(spec, data, w)?;
        let c = sketch::alpha_bound(&a, &spec.regularizer, eta, m, epsilon0)?;
        (c.alpha(), c.vartheta)
    } else {
        (f64::INFINITY, f64::NAN)
    };
    Ok(MeasuredConstants {
        eta,
        holds,
        alpha,
        vartheta,
        deviation,
    })
}

fn ridge_problem(settings: &RidgeSettings, seed: u64) -> Result<(ObjectiveSpec, LabeledDataset, Vec<WorkerShard>)> {
    let gen = GeneratorSpec {
        n: settings.n,
        d: settings.d,
        kappa: settings.kappa,
        loss: LossKind::Quadratic,
        gamma: settings.gamma,
        noise: 0.1,
        flip_prob: 0.0,
    };
    let s = synthetic::generate_synthetic(&gen, rng::derive_seed(seed, "ridge", 0))?;
    let shards = data::partition_shards(&s.data, settings.m, rng::derive_seed(seed, "ridge-partition", 0), CgSettings::default())?;
    Ok((gen.objective(), s.data, shards))
}

fn exact_newton_config(iterations: usize) -> GiantConfig {
    GiantConfig {
        max_iterations: iterations,
        line_search: false,
        exact_local_solves: true,
        stop_tol: 0.0,
        ..Default::default()
    }
}

fn run_with_reference(solver: &dyn Solver, problem: &Problem<'_>, w0: &Vector, reference: &Vector) -> Result<RunOutcome> {
    let mut fabric = Fabric::new(problem.shards.len())?;
    solver.run(
        problem,
        &mut fabric,
        w0,
        RunOptions {
            reference: Some(reference),
            record_iterates: true,
            ..Default::default()
        },
    )
}

/// Per-step ratios `||Δ_{t+1}|| / ||Δ_t||` while `||Δ_t||` exceeds `floor`.
pub fn contraction_ratios(errors: &[f64], floor: f64) -> Vec<f64> {
    errors
        .windows(2)
        .take_while(|w| w[0] > floor)
        .map(|w| w[1] / w[0])
        .collect()
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Quadratic global convergence: every step contracts by at most `α`
/// (5% slack) and the iteration count respects the `α^t √κ` envelope.
fn check_quadratic_contraction(config: &SuiteConfig) -> Result<CheckResult> {
    let (spec, data, shards) = ridge_problem(&config.ridge, config.seed)?;
    let problem = Problem::new(&spec, &data, &shards)?;
    let d = data.dim();
    let c = measure_constants(config, &spec, &data, &shards, &vec![0.0; d], 0.0)?;
    let kappa = linalg::condition_number(&objective::materialize_hessian(&spec, &data, &vec![0.0; d])?)?;
    let result = CheckResult::new("quadratic_contraction")
        .with("eta", c.eta)
        .with("pooled_deviation", c.deviation.pooled)
        .with("vartheta", c.vartheta)
        .with("alpha_formula", c.alpha)
        .with("kappa", kappa);
    if !c.holds || c.alpha >= 1.0 {
        return Ok(result.status(CheckStatus::Vacuous).note("deviation condition does not give alpha < 1"));
    }
    let wstar = giant::solve_reference(&spec, &data, giant::REFERENCE_TOL)?;
    let solver = giant::GiantSolver::new(exact_newton_config(40))?;
    let out = run_with_reference(&solver, &problem, &Vector::zeros(d), &wstar)?;
    let errors = giant::error_norms(&out.trace);
    let ratios = contraction_ratios(&errors, 1e-12 * errors[0]);
    let measured = max_of(&ratios);
    let reached = errors.iter().position(|e| *e <= 1e-10 * errors[0]);
    let bound = ((1e-10 / kappa.sqrt()).ln() / c.alpha.ln()).ceil() + 1.0;
    let ok = !ratios.is_empty() && measured <= 1.05 * c.alpha && reached.is_some_and(|t| t as f64 <= bound);
    Ok(result
        .with("alpha_measured", measured)
        .with("steps_checked", ratios.len() as f64)
        .with("iterations_to_1e-10", reached.map_or(f64::INFINITY, |t| t as f64))
        .with("iteration_bound", bound)
        .pass_if(ok))
}

struct PhiInstance {
    spec: ObjectiveSpec,
    data: LabeledDataset,
    shards: Vec<WorkerShard>,
    w: Vector,
    g: Vector,
    hessian: DenseMatrix,
    min_phi: f64,
}

fn phi_instance(settings: &PhiBoundSettings, seed: u64, k: usize) -> Result<PhiInstance> {
    let gen = GeneratorSpec {
        n: settings.n,
        d: settings.d,
        kappa: settings.kappa,
        loss: LossKind::Quadratic,
        gamma: settings.gamma,
        noise: 0.1,
        flip_prob: 0.0,
    };
    let s = synthetic::generate_synthetic(&gen, rng::derive_seed(seed, "phi", k as u64))?;
    let spec = gen.objective();
    let shards = data::partition_shards(&s.data, settings.m, rng::derive_seed(seed, "phi-partition", k as u64), CgSettings::default())?;
    let w = rng::gaussian_vector(&mut rng::derived_rng(seed, "phi-w", k as u64), settings.d);
    let g = objective::gradient(&spec, &s.data, &w)?;
    let hessian = objective::materialize_hessian(&spec, &s.data, &w)?;
    let pstar = linalg::direct_spd_solve(&hessian, &g)?;
    let min_phi = sketch::phi_value(|v| hessian.matvec(v), &g, &pstar);
    Ok(PhiInstance {
        spec,
        data: s.data,
        shards,
        w,
        g,
        hessian,
        min_phi,
    })
}

/// `min φ <= φ(p) <= (1 - α²)·min φ`, with round-off slack on both sides.
fn phi_within(phi: f64, min_phi: f64, alpha: f64) -> bool {
    let slack = 1e-10 * min_phi.abs();
    phi >= min_phi - slack && phi <= (1.0 - alpha * alpha) * min_phi + slack
}

fn phi_check(config: &SuiteConfig, name: &str, inexact: bool) -> Result<CheckResult> {
    let settings = &config.phi_bound;
    let eps0 = if inexact { settings.epsilon0 } else { 0.0 };
    let (mut in_condition, mut informative, mut passed) = (0usize, 0usize, 0usize);
    let mut worst_alpha = 0.0f64;
    let mut worst_ratio = f64::NEG_INFINITY;
    for k in 0..settings.instances {
        let inst = phi_instance(settings, config.seed, k)?;
        let c = measure_constants(config, &inst.spec, &inst.data, &inst.shards, &inst.w, eps0)?;
        if !c.holds {
            continue;
        }
        in_condition += 1;
        // with α >= 1 the upper bound is implied by the lower one
        if c.alpha >= 1.0 {
            continue;
        }
        informative += 1;
        worst_alpha = worst_alpha.max(c.alpha);
        let mut p = Vector::zeros(inst.w.len());
        for shard in &inst.shards {
            let h_local = objective::materialize_hessian(&inst.spec, &shard.data, &inst.w)?;
            let mut p_i = linalg::direct_spd_solve(&h_local, &inst.g)?;
            if inexact {
                p_i.axpy(1.0, &inexact_perturbation(&h_local, &p_i, eps0, config.seed, k, shard.worker_id));
            }
            p.axpy(1.0, &p_i);
        }
        p.scale(1.0 / inst.shards.len() as f64);
        let phi = sketch::phi_value(|v| inst.hessian.matvec(v), &inst.g, &p);
        worst_ratio = worst_ratio.max(1.0 - phi / inst.min_phi);
        if phi_within(phi, inst.min_phi, c.alpha) {
            passed += 1;
        }
    }
    let result = CheckResult::new(name)
        .with("instances", settings.instances as f64)
        .with("in_condition", in_condition as f64)
        .with("informative", informative as f64)
        .with("passed", passed as f64)
        .with("max_alpha", worst_alpha)
        .with("max_suboptimality", worst_ratio);
    if informative == 0 {
        return Ok(result.status(CheckStatus::Vacuous).note("no instance met the deviation condition with alpha < 1"));
    }
    Ok(result.pass_if(passed == informative))
}

/// A perturbation `e` of `p` with `||e||_H = ε₀·||p||_H` in a seeded random
/// direction, the largest error the inexact-solve condition admits.
pub fn inexact_perturbation(h: &DenseMatrix, p: &[f64], epsilon0: f64, seed: u64, instance: usize, worker: usize) -> Vector {
    let mut r = rng::derived_rng(seed, "phi-perturb", ((instance as u64) << 16) | worker as u64);
    let v = rng::gaussian_vector(&mut r, p.len());
    let h_norm = |x: &[f64]| linalg::dot(x, &h.matvec(x)).max(0.0).sqrt();
    let target = epsilon0 * h_norm(p);
    let nv = h_norm(&v);
    if nv == 0.0 {
        return Vector::zeros(p.len());
    }
    v.scaled(target / nv)
}

fn check_phi_exact(config: &SuiteConfig) -> Result<CheckResult> {
    phi_check(config, "phi_bound_exact", false)
}

fn check_phi_inexact(config: &SuiteConfig) -> Result<CheckResult> {
    phi_check(config, "phi_bound_inexact", true)
}

/// Uniform sampling with the prescribed `s` meets both deviation bounds with
/// probability about `1 - δ`.
fn check_sampling_concentration(config: &SuiteConfig) -> Result<CheckResult> {
    let c = &config.concentration;
    let mut r = rng::derived_rng(config.seed, "concentration-matrix", 0);
    let a = rng::gaussian_matrix(&mut r, c.n, c.d);
    let u = linalg::thin_orthonormal_basis(&a);
    let mu = sketch::coherence_of_basis(&u);
    let s = sketch::uniform_sample_size(mu, u.cols(), c.m, c.eta, c.delta)?;
    let mut failures = 0usize;
    let mut worst = 0.0f64;
    let mut worst_pooled = 0.0f64;
    for trial in 0..c.trials {
        let views = (0..c.m)
            .map(|i| sketch::uniform_sample(c.n, s, rng::derive_seed(config.seed, "sampling_concentration", (trial * c.m + i) as u64)))
            .collect::<Result<Vec<_>>>()?;
        let dev = sketch::spectral_deviation(&u, &views)?;
        worst = worst.max(dev.max_per_view());
        worst_pooled = worst_pooled.max(dev.pooled);
        if !dev.satisfies(c.eta) {
            failures += 1;
        }
    }
    let fraction = failures as f64 / c.trials as f64;
    Ok(CheckResult::new("sampling_concentration")
        .with("coherence", mu)
        .with("sample_size", s as f64)
        .with("failure_fraction", fraction)
        .with("max_per_view", worst)
        .with("max_pooled", worst_pooled)
        .pass_if(fraction <= c.max_failure_fraction))
}

/// SPD matrix `Q diag(λ) Qᵀ` with eigenvalues geometric in `[1, κ]`.
pub fn spd_with_condition(d: usize, kappa: f64, r: &mut rng::SeededRng) -> DenseMatrix {
    let q = rng::random_orthonormal(r, d, d);
    let lambdas: Vec<f64> = (0..d)
        .map(|k| if d == 1 { 1.0 } else { kappa.powf(k as f64 / (d - 1) as f64) })
        .collect();
    let mut h = DenseMatrix::from_fn(d, d, |i, j| (0..d).map(|k| q.get(i, k) * lambdas[k] * q.get(j, k)).sum());
    // exact symmetry
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (h.get(i, j) + h.get(j, i));
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }
    h
}

fn energy_norm(h: &DenseMatrix, x: &[f64]) -> f64 {
    linalg::dot(x, &h.matvec(x)).max(0.0).sqrt()
}

/// CG truncated at the budget meets `||p' - p||_H <= (ε₀/2)||p||_H`.
fn check_cg_budget(config: &SuiteConfig) -> Result<CheckResult> {
    let c = &config.cg_budget;
    let mut result = CheckResult::new("cg_budget");
    let mut all = true;
    for (ki, &kappa) in c.kappas.iter().enumerate() {
        let q = worker::cg_iteration_budget(kappa, c.epsilon0)?;
        let mut ok = 0usize;
        let mut worst = 0.0f64;
        for trial in 0..c.trials {
            let mut r = rng::derived_rng(config.seed, "cg_budget", ((ki as u64) << 32) | trial as u64);
            let h = spd_with_condition(c.d, kappa, &mut r);
            let b = rng::gaussian_vector(&mut r, c.d);
            let exact = linalg::direct_spd_solve(&h, &b)?;
            let approx = linalg::cg_solve(|v| h.matvec(v), &b, q, 0.0)?.solution;
            let ratio = energy_norm(&h, &approx.sub(&exact)) / energy_norm(&h, &exact);
            worst = worst.max(ratio);
            if ratio <= c.epsilon0 / 2.0 {
                ok += 1;
            }
        }
        all &= ok == c.trials;
        result = result
            .with(&format!("q@{kappa}"), q as f64)
            .with(&format!("passed@{kappa}"), ok as f64)
            .with(&format!("worst_ratio@{kappa}"), worst);
    }
    Ok(result.pass_if(all))
}

fn logistic_instance(settings: &LocalSettings, seed: u64) -> Result<(ObjectiveSpec, LabeledDataset, Vec<WorkerShard>)> {
    let gen = GeneratorSpec {
        n: settings.n,
        d: settings.d,
        kappa: settings.kappa,
        loss: LossKind::Logistic,
        gamma: settings.gamma,
        noise: 0.0,
        flip_prob: 0.05,
    };
    let s = synthetic::generate_synthetic(&gen, rng::derive_seed(seed, "local", 0))?;
    let shards = data::partition_shards(&s.data, settings.m, rng::derive_seed(seed, "local-partition", 0), CgSettings::default())?;
    Ok((gen.objective(), s.data, shards))
}

/// Local linear convergence for logistic loss: starting at `w* + δ`, each
/// step contracts by at most `2α√κ(H*)` plus margin.
fn check_local_convergence(config: &SuiteConfig) -> Result<CheckResult> {
    let settings = &config.local;
    let (spec, data, shards) = logistic_instance(settings, config.seed)?;
    let problem = Problem::new(&spec, &data, &shards)?;
    let wstar = giant::solve_reference(&spec, &data, giant::REFERENCE_TOL)?;
    let c = measure_constants(config, &spec, &data, &shards, &wstar, 0.0)?;
    let kappa = linalg::condition_number(&objective::materialize_hessian(&spec, &data, &wstar)?)?;
    let factor = 2.0 * c.alpha * kappa.sqrt();
    let result = CheckResult::new("local_convergence")
        .with("eta", c.eta)
        .with("alpha_formula", c.alpha)
        .with("kappa_hstar", kappa)
        .with("bound_factor", factor);
    if !c.holds || c.alpha >= 1.0 {
        return Ok(result.status(CheckStatus::Vacuous).note("deviation condition does not give alpha < 1"));
    }
    let mut delta = rng::gaussian_vector(&mut rng::derived_rng(config.seed, "local-start", 0), data.dim());
    delta.scale(settings.start_distance / delta.norm());
    let w0 = wstar.add(&delta);
    let solver = giant::GiantSolver::new(exact_newton_config(settings.min_steps + 4))?;
    let out = run_with_reference(&solver, &problem, &w0, &wstar)?;
    let ratios = contraction_ratios(&giant::error_norms(&out.trace), settings.noise_floor);
    let measured = max_of(&ratios);
    let ok = ratios.len() >= settings.min_steps && ratios.iter().all(|r| *r < 1.0) && measured <= factor * (1.0 + settings.margin);
    Ok(result
        .with("steps_checked", ratios.len() as f64)
        .with("max_ratio", measured)
        .pass_if(ok))
}

/// The quadratic check again with CG cut at the budget for `ε₀ = α`.
fn check_inexact_contraction(config: &SuiteConfig) -> Result<CheckResult> {
    let (spec, data, shards) = ridge_problem(&config.ridge, config.seed)?;
    let problem = Problem::new(&spec, &data, &shards)?;
    let d = data.dim();
    let zero = vec![0.0; d];
    let c = measure_constants(config, &spec, &data, &shards, &zero, 0.0)?;
    let result = CheckResult::new("inexact_contraction").with("eta", c.eta).with("alpha_exact", c.alpha);
    if !c.holds || c.alpha >= 1.0 {
        return Ok(result.status(CheckStatus::Vacuous).note("deviation condition does not give alpha < 1"));
    }
    let eps0 = c.alpha;
    let inexact_alpha = c.alpha + eps0 / (1.0 - c.eta);
    let mut kappa_local = 1.0f64;
    for shard in &shards {
        kappa_local = kappa_local.max(linalg::condition_number(&objective::materialize_hessian(&spec, &shard.data, &zero)?)?);
    }
    let q = worker::cg_iteration_budget(kappa_local, eps0)?;
    let result = result
        .with("epsilon0", eps0)
        .with("alpha_inexact", inexact_alpha)
        .with("kappa_local", kappa_local)
        .with("cg_budget", q as f64);
    if inexact_alpha >= 1.0 {
        return Ok(result.status(CheckStatus::Vacuous).note("inexact alpha is not below 1"));
    }
    let wstar = giant::solve_reference(&spec, &data, giant::REFERENCE_TOL)?;
    let solver = giant::GiantSolver::new(GiantConfig {
        max_iterations: 40,
        line_search: false,
        cg: Some(CgSettings::budget(q)),
        stop_tol: 0.0,
        ..Default::default()
    })?;
    let out = run_with_reference(&solver, &problem, &Vector::zeros(d), &wstar)?;
    let errors = giant::error_norms(&out.trace);
    let ratios = contraction_ratios(&errors, 1e-12 * errors[0]);
    let measured = max_of(&ratios);
    Ok(result
        .with("steps_checked", ratios.len() as f64)
        .with("max_ratio", measured)
        .pass_if(!ratios.is_empty() && measured <= 1.10 * inexact_alpha))
}

/// With exact local solves and unit steps, DANE and GIANT produce the same
/// iterates on quadratics.
fn check_dane_equivalence(config: &SuiteConfig) -> Result<CheckResult> {
    let s = &config.dane;
    let mut worst = 0.0f64;
    for k in 0..s.instances {
        let ridge = RidgeSettings {
            n: s.n,
            d: s.d,
            m: s.m,
            gamma: s.gamma,
            kappa: s.kappa,
        };
        let (spec, data, shards) = ridge_problem(&ridge, rng::derive_seed(config.seed, "dane-instance", k as u64))?;
        let problem = Problem::new(&spec, &data, &shards)?;
        let w0 = Vector::zeros(s.d);
        let options = RunOptions {
            record_iterates: true,
            ..Default::default()
        };
        let g = giant::run_giant(&problem, &mut Fabric::new(s.m)?, &exact_newton_config(s.iterations), &w0, options)?;
        let dane_config = DaneConfig {
            local_solver: DaneLocalSolver::Exact,
            line_search: false,
            max_iterations: s.iterations,
            stop_tol: 0.0,
            ..Default::default()
        };
        let dn = baselines::run_dane(&problem, &mut Fabric::new(s.m)?, &dane_config, &w0, options)?;
        if g.iterates.len() != dn.iterates.len() {
            return Ok(CheckResult::new("dane_equivalence")
                .status(CheckStatus::Fail)
                .note(format!("instance {k}: {} vs {} iterates", g.iterates.len(), dn.iterates.len())));
        }
        for (a, b) in g.iterates.iter().zip(&dn.iterates) {
            worst = worst.max(a.sub(b).norm() / a.norm().max(1.0));
        }
    }
    Ok(CheckResult::new("dane_equivalence")
        .with("instances", s.instances as f64)
        .with("max_iterate_gap", worst)
        .pass_if(worst <= s.tol))
}

/// Expected per-iteration `(rounds, d2w words, w2d words)`.
pub fn expected_costs(solver: &str, line_search: bool, d: u64, m: u64, candidates: u64) -> (u64, u64, u64) {
    let ls = if line_search { (2, d * m, (candidates + 1) * m) } else { (0, 0, 0) };
    let base = match solver {
        "agd" => (2, d * m, d * m),
        "lbfgs" => (2, d * m, d * m),
        _ => (4, 2 * d * m, 2 * d * m),
    };
    (base.0 + ls.0, base.1 + ls.1, base.2 + ls.2)
}

/// Every row-to-row delta of every solver matches the collective schedule.
pub fn accounting_violations(outcome: &RunOutcome, expected: (u64, u64, u64)) -> usize {
    outcome
        .trace
        .windows(2)
        .filter(|w| {
            let (a, b) = (&w[0].stats, &w[1].stats);
            (b.rounds - a.rounds, b.driver_to_worker_words - a.driver_to_worker_words, b.worker_to_driver_words - a.worker_to_driver_words) != expected
        })
        .count()
}

fn check_comm_accounting(config: &SuiteConfig) -> Result<CheckResult> {
    let ridge = RidgeSettings {
        n: 1024,
        d: 8,
        m: 4,
        gamma: 1e-3,
        kappa: 100.0,
    };
    let (spec, data, shards) = ridge_problem(&ridge, rng::derive_seed(config.seed, "accounting", 0))?;
    let problem = Problem::new(&spec, &data, &shards)?;
    let w0 = Vector::zeros(ridge.d);
    let cands = crate::linesearch::default_candidates().len() as u64;
    let (d, m) = (ridge.d as u64, ridge.m as u64);
    let runs: Vec<(&str, bool, Box<dyn Solver>)> = vec![
        ("giant", true, Box::new(giant::GiantSolver::new(GiantConfig { max_iterations: 5, stop_tol: 0.0, ..Default::default() })?)),
        ("giant", false, Box::new(giant::GiantSolver::new(GiantConfig { max_iterations: 5, stop_tol: 0.0, line_search: false, ..Default::default() })?)),
        ("agd", false, Box::new(baselines::AgdSolver::new(AgdConfig { max_iterations: 5, stop_tol: 0.0, step_alpha: 0.1, ..Default::default() })?)),
        ("lbfgs", true, Box::new(baselines::LbfgsSolver::new(LbfgsConfig { max_iterations: 5, stop_tol: 0.0, ..Default::default() })?)),
        ("dane", true, Box::new(baselines::DaneSolver::new(DaneConfig { max_iterations: 3, stop_tol: 0.0, ..Default::default() })?)),
    ];
    let mut result = CheckResult::new("comm_accounting");
    let mut bad = 0;
    for (name, ls, solver) in &runs {
        let out = solver.run(&problem, &mut Fabric::new(ridge.m)?, &w0, RunOptions::default())?;
        let expected = expected_costs(name, *ls, d, m, cands);
        let v = accounting_violations(&out, expected) + usize::from(out.trace.len() < 2);
        bad += v;
        let label = if *ls { format!("{name}+ls") } else { name.to_string() };
        result = result.with(&format!("{label}_rounds_per_iter"), expected.0 as f64).with(&format!("{label}_violations"), v as f64);
    }
    Ok(result.pass_if(bad == 0))
}

/// Central differences of `f` along coordinate axes.
pub fn finite_difference_gradient(spec: &ObjectiveSpec, data: &LabeledDataset, w: &[f64]) -> Result<Vector> {
    let mut g = Vector::zeros(w.len());
    for k in 0..w.len() {
        let h = 1e-6 * w[k].abs().max(1.0);
        let mut plus = w.to_vec();
        let mut minus = w.to_vec();
        plus[k] += h;
        minus[k] -= h;
        g[k] = (objective::objective_value(spec, data, &plus)? - objective::objective_value(spec, data, &minus)?) / (2.0 * h);
    }
    Ok(g)
}

fn check_calculus(config: &SuiteConfig) -> Result<CheckResult> {
    let c = &config.calculus;
    let (mut grad_err, mut hv_err, mut factor_err) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..c.pairs {
        let mut r = rng::derived_rng(config.seed, "calculus", k as u64);
        let x = rng::gaussian_matrix(&mut r, c.n, c.d);
        let loss = if k % 2 == 0 { LossKind::Quadratic } else { LossKind::Logistic };
        let labels: Vector = match loss {
            LossKind::Quadratic => rng::gaussian_vector(&mut r, c.n),
            LossKind::Logistic => (0..c.n).map(|_| if rng::gaussian(&mut r) >= 0.0 { 1.0 } else { -1.0 }).collect(),
        };
        let data = LabeledDataset::new(x, labels)?;
        let spec = match loss {
            LossKind::Quadratic => ObjectiveSpec::ridge(1e-2),
            LossKind::Logistic => ObjectiveSpec::logistic(1e-2),
        };
        let w = rng::gaussian_vector(&mut r, c.d);
        let g = objective::gradient(&spec, &data, &w)?;
        let fd = finite_difference_gradient(&spec, &data, &w)?;
        grad_err = grad_err.max(fd.sub(&g).norm() / g.norm());

        let v = rng::gaussian_vector(&mut r, c.d);
        let eps = 1e-5;
        let mut wp = w.clone();
        wp.axpy(eps, &v);
        let mut wm = w.clone();
        wm.axpy(-eps, &v);
        let mut hv_fd = objective::gradient(&spec, &data, &wp)?.sub(&objective::gradient(&spec, &data, &wm)?);
        hv_fd.scale(0.5 / eps);
        let hv = objective::hessian_vec(&spec, &data, &w, &v)?;
        hv_err = hv_err.max(hv_fd.sub(&hv).norm() / hv.norm());

        let a = objective::scaled_rows(&spec, &data, &w)?;
        let mut from_rows = a.gram();
        from_rows.add_diagonal(&spec.regularizer.diagonal(c.d));
        let columns = (0..c.d)
            .map(|j| {
                let e: Vec<f64> = (0..c.d).map(|i| if i == j { 1.0 } else { 0.0 }).collect();
                objective::hessian_vec(&spec, &data, &w, &e)
            })
            .collect::<Result<Vec<_>>>()?;
        let by_columns = DenseMatrix::from_columns(&columns)?;
        factor_err = factor_err.max(from_rows.max_abs_diff(&by_columns) / by_columns.frobenius_norm().max(1.0));
    }
    Ok(CheckResult::new("calculus")
        .with("pairs", c.pairs as f64)
        .with("gradient_rel_err", grad_err)
        .with("hessian_vec_rel_err", hv_err)
        .with("factor_err", factor_err)
        .pass_if(grad_err <= c.gradient_tol && hv_err <= c.hessian_vec_tol && factor_err <= c.factor_tol))
}

/// Grid-tuned AGD needs several times the rounds GIANT needs to reach
/// `||Δ|| <= target` on an ill-conditioned quadratic.
fn check_agd_gap(config: &SuiteConfig) -> Result<CheckResult> {
    let s = &config.agd_gap;
    let ridge = RidgeSettings {
        n: s.n,
        d: s.d,
        m: s.m,
        gamma: s.gamma,
        kappa: s.kappa,
    };
    let (spec, data, shards) = ridge_problem(&ridge, rng::derive_seed(config.seed, "agd-gap", 0))?;
    let problem = Problem::new(&spec, &data, &shards)?;
    let wstar = giant::solve_reference(&spec, &data, giant::REFERENCE_TOL)?;
    let w0 = Vector::zeros(s.d);
    let options = RunOptions {
        reference: Some(&wstar),
        error_target: Some(s.target),
        ..Default::default()
    };
    let giant_out = giant::run_giant(
        &problem,
        &mut Fabric::new(s.m)?,
        &GiantConfig {
            max_iterations: 100,
            stop_tol: 0.0,
            ..Default::default()
        },
        &w0,
        options,
    )?;
    let giant_rounds = giant_out.rounds_to_error(s.target);
    let template = AgdConfig {
        max_iterations: s.max_agd_iterations,
        stop_tol: 0.0,
        ..Default::default()
    };
    let grid = baselines::agd_grid(&template, &s.steps, &s.momenta);
    let search = baselines::grid_search(
        &grid,
        |c| baselines::run_agd(&problem, &mut Fabric::new(s.m)?, c, &w0, options),
        |o| o.rounds_to_error(s.target).map_or(f64::INFINITY, |r| r as f64),
    )?;
    let (best_config, best) = search.best();
    let agd_rounds = best.rounds_to_error(s.target).map_or(f64::INFINITY, |r| r as f64);
    let Some(giant_rounds) = giant_rounds else {
        return Ok(CheckResult::new("agd_gap").status(CheckStatus::Fail).note("GIANT did not reach the target"));
    };
    let ratio = agd_rounds / giant_rounds as f64;
    Ok(CheckResult::new("agd_gap")
        .with("giant_rounds", giant_rounds as f64)
        .with("agd_rounds", agd_rounds)
        .with("agd_alpha", best_config.step_alpha)
        .with("agd_beta", best_config.momentum_beta)
        .with("ratio", ratio)
        .pass_if(ratio >= s.min_ratio))
}

/// With line search, every accepted GIANT step is non-increasing in `f`.
fn check_monotone_descent(config: &SuiteConfig) -> Result<CheckResult> {
    let (spec, data, shards) = logistic_instance(
        &LocalSettings {
            n: 2048,
            ..config.local.clone()
        },
        rng::derive_seed(config.seed, "descent", 0),
    )?;
    let problem = Problem::new(&spec, &data, &shards)?;
    let out = giant::run_giant(
        &problem,
        &mut Fabric::new(shards.len())?,
        &GiantConfig {
            max_iterations: 20,
            ..Default::default()
        },
        &Vector::zeros(data.dim()),
        RunOptions::default(),
    )?;
    let increases = out
        .trace
        .windows(2)
        .filter(|w| w[1].armijo_satisfied && w[1].objective > w[0].objective)
        .count();
    Ok(CheckResult::new("monotone_descent")
        .with("iterations", (out.trace.len() - 1) as f64)
        .with("increases", increases as f64)
        .pass_if(increases == 0))
}
