//! Row sampling sketches and the quantities used to certify them: row
//! coherence, spectral deviation `||UᵀSSᵀU - I||₂`, the uniform-sampling
//! sample size, the quadratic model `φ`, and the averaging error constant `α`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix, Vector};
use crate::objective::Regularizer;
use crate::rng;

/// A row-sampling matrix `S` stored as the rows it picks. Applying it to a
/// matrix `A` yields rows `scale_k · a_{j_k}`; for uniform sampling
/// `scale = 1/sqrt(s·(1/n)) = sqrt(n/s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMatrixView {
    source_rows: usize,
    selected: Vec<(usize, f64)>,
}

impl SamplingMatrixView {
    pub fn new(source_rows: usize, selected: Vec<(usize, f64)>) -> Result<Self> {
        if let Some((j, _)) = selected.iter().find(|(j, _)| *j >= source_rows) {
            return Err(Error::Range(format!("row index {j} outside [0, {source_rows})")));
        }
        Ok(SamplingMatrixView { source_rows, selected })
    }

    /// Each listed row once, scaled by `sqrt(n/s)`. A disjoint partition of
    /// `0..n` produces one of these per block.
    pub fn from_indices(source_rows: usize, indices: &[usize]) -> Result<Self> {
        let scale = (source_rows as f64 / indices.len() as f64).sqrt();
        Self::new(source_rows, indices.iter().map(|&j| (j, scale)).collect())
    }

    pub fn source_rows(&self) -> usize {
        self.source_rows
    }

    pub fn selected(&self) -> &[(usize, f64)] {
        &self.selected
    }

    pub fn sample_size(&self) -> usize {
        self.selected.len()
    }

    /// `Sᵀ A`
    pub fn apply(&self, a: &DenseMatrix) -> DenseMatrix {
        a.select_rows(&self.selected)
    }

    /// `Aᵀ S Sᵀ A`
    pub fn sketched_gram(&self, a: &DenseMatrix) -> DenseMatrix {
        self.apply(a).gram()
    }
}

/// `s` i.i.d. uniform draws with replacement from `0..n`.
pub fn uniform_sample(n: usize, s: usize, seed: u64) -> Result<SamplingMatrixView> {
    if s == 0 || n == 0 {
        return Err(Error::Range("uniform sampling needs n >= 1 and s >= 1".into()));
    }
    let mut r = rng::rng(seed);
    let scale = (n as f64 / s as f64).sqrt();
    let selected = (0..s).map(|_| (r.random_range(0..n), scale)).collect();
    SamplingMatrixView::new(n, selected)
}

/// `μ(A) = (n/ρ) max_j ||u_j||²` with `U` an orthonormal basis of `A`'s
/// column space and `ρ` its rank.
pub fn row_coherence(a: &DenseMatrix) -> Result<f64> {
    if a.rows() < a.cols() || a.cols() == 0 {
        return Err(Error::Precondition(format!(
            "row coherence needs n >= d >= 1, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let u = linalg::thin_orthonormal_basis(a);
    if u.cols() == 0 {
        return Err(Error::Precondition("row coherence of a zero matrix".into()));
    }
    Ok(coherence_of_basis(&u))
}

pub fn coherence_of_basis(u: &DenseMatrix) -> f64 {
    let max_sq = (0..u.rows())
        .map(|j| u.row(j).iter().map(|v| v * v).sum::<f64>())
        .fold(0.0, f64::max);
    u.rows() as f64 / u.cols() as f64 * max_sq
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDeviation {
    /// `||UᵀS_iS_iᵀU - I||₂` per view.
    pub per_view: Vec<f64>,
    /// Same for `S = (1/√m)[S_1, …, S_m]`.
    pub pooled: f64,
}

impl SpectralDeviation {
    pub fn max_per_view(&self) -> f64 {
        self.per_view.iter().copied().fold(0.0, f64::max)
    }

    /// Whether the sketches satisfy the two-sided spectral condition with
    /// parameter `eta` (per view `<= eta`, pooled `<= eta/√m`).
    pub fn satisfies(&self, eta: f64) -> bool {
        let m = self.per_view.len() as f64;
        eta > 0.0 && eta < 1.0 && self.max_per_view() <= eta && self.pooled <= eta / m.sqrt()
    }
}

pub fn spectral_deviation(u: &DenseMatrix, views: &[SamplingMatrixView]) -> Result<SpectralDeviation> {
    if views.is_empty() {
        return Err(Error::Precondition("no sketches supplied".into()));
    }
    let rho = u.cols();
    let identity = DenseMatrix::identity(rho);
    let ortho_err = u.gram().max_abs_diff(&identity);
    if ortho_err > 1e-8 {
        return Err(Error::Precondition(format!(
            "basis columns are not orthonormal (max |UᵀU - I| = {ortho_err:e})"
        )));
    }
    let mut pooled = DenseMatrix::zeros(rho, rho);
    let mut per_view = Vec::with_capacity(views.len());
    for view in views {
        if view.source_rows() != u.rows() {
            return Err(Error::Dimension(format!(
                "sketch samples from {} rows, basis has {}",
                view.source_rows(),
                u.rows()
            )));
        }
        let g = view.sketched_gram(u);
        per_view.push(linalg::symmetric_spectral_norm(&g.sub(&identity))?);
        pooled = pooled_add(pooled, &g);
    }
    pooled.scale(1.0 / views.len() as f64);
    let pooled = linalg::symmetric_spectral_norm(&pooled.sub(&identity))?;
    Ok(SpectralDeviation { per_view, pooled })
}

fn pooled_add(acc: DenseMatrix, g: &DenseMatrix) -> DenseMatrix {
    let mut out = acc;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            out.set(i, j, out.get(i, j) + g.get(i, j));
        }
    }
    out
}

/// `⌈(3μd/η²)·log(dm/δ)⌉`, the per-worker sample size that makes `m`
/// independent uniform sketches spectral approximations with probability
/// at least `1 - δ`.
pub fn uniform_sample_size(mu: f64, d: usize, m: usize, eta: f64, delta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Range(format!("η must lie in (0, 1), got {eta}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Range(format!("δ must lie in (0, 1), got {delta}")));
    }
    if !(mu >= 1.0) || d == 0 || m == 0 {
        return Err(Error::Range(format!("need μ >= 1, d >= 1, m >= 1 (μ = {mu}, d = {d}, m = {m})")));
    }
    let s = 3.0 * mu * d as f64 / (eta * eta) * ((d * m) as f64 / delta).ln();
    Ok(s.ceil().max(1.0) as usize)
}

/// `φ(p) = ½ pᵀHp - pᵀg`
pub fn phi_value<F>(hessian_apply: F, g: &[f64], p: &[f64]) -> f64
where
    F: Fn(&[f64]) -> Vector,
{
    0.5 * linalg::dot(p, &hessian_apply(p)) - linalg::dot(p, g)
}

/// Constants of the averaged-direction error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaConstants {
    pub eta: f64,
    pub m: usize,
    /// `σ_max(AᵀA) / (σ_max(AᵀA) + σ_min(M))`
    pub vartheta: f64,
    pub epsilon0: f64,
}

impl AlphaConstants {
    /// `ϑ(η/√m + η²/(1-η)) + ε₀/(1-η)`
    pub fn alpha(&self) -> f64 {
        let eta = self.eta;
        let base = self.vartheta * (eta / (self.m as f64).sqrt() + eta * eta / (1.0 - eta));
        if self.epsilon0 > 0.0 {
            base + self.epsilon0 / (1.0 - eta)
        } else {
            base
        }
    }

    /// The exact-solve constant, ignoring `ε₀`.
    pub fn exact_alpha(&self) -> f64 {
        AlphaConstants { epsilon0: 0.0, ..*self }.alpha()
    }
}

pub fn alpha_bound(
    a_t: &DenseMatrix,
    regularizer: &Regularizer,
    eta: f64,
    m: usize,
    epsilon0: f64,
) -> Result<AlphaConstants> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Range(format!("η must lie in (0, 1), got {eta}")));
    }
    if !(0.0..1.0).contains(&epsilon0) {
        return Err(Error::Range(format!("ε₀ must lie in [0, 1), got {epsilon0}")));
    }
    if m == 0 {
        return Err(Error::Range("m must be >= 1".into()));
    }
    let top = linalg::spectral_norm(a_t, linalg::SPECTRAL_TOL).powi(2);
    Ok(AlphaConstants {
        eta,
        m,
        vartheta: vartheta(top, regularizer.min_eigenvalue()),
        epsilon0,
    })
}

pub fn vartheta(sigma_max_gram: f64, sigma_min_reg: f64) -> f64 {
    if sigma_max_gram + sigma_min_reg == 0.0 {
        return 1.0;
    }
    sigma_max_gram / (sigma_max_gram + sigma_min_reg)
}
