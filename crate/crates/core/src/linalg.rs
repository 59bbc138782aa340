//! Dense vectors and matrices, conjugate gradient, LDLᵀ solves and
//! spectral quantities.
//!
//! Data matrices are tall `n x d` and only used through products; dense
//! factorizations are for `d x d` systems.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Default relative tolerance for [`spectral_norm`].
pub const SPECTRAL_TOL: f64 = 1e-9;
const SPECTRAL_MAX_ITER: usize = 10_000;
/// Columns whose residual falls below this fraction of `||a||_F` are dropped
/// by [`thin_orthonormal_basis`].
pub const RANK_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn zeros(len: usize) -> Self {
        Vector(vec![0.0; len])
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Vector(data)
    }

    pub fn filled(len: usize, value: f64) -> Self {
        Vector(vec![value; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &[f64]) {
        debug_assert_eq!(self.len(), x.len());
        for (s, xi) in self.0.iter_mut().zip(x) {
            *s += a * xi;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.0.iter_mut().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Vector {
        self.0.iter().map(|v| v * a).collect()
    }

    pub fn add(&self, other: &[f64]) -> Vector {
        self.0.iter().zip(other).map(|(a, b)| a + b).collect()
    }

    pub fn sub(&self, other: &[f64]) -> Vector {
        self.0.iter().zip(other).map(|(a, b)| a - b).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Vector {
    fn from(v: Vec<f64>) -> Self {
        Vector(v)
    }
}

impl From<&[f64]> for Vector {
    fn from(v: &[f64]) -> Self {
        Vector(v.to_vec())
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Vector(iter.into_iter().collect())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense real matrix. Storage order is private; use the indexed accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    // row-major
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericBreakdown("non-finite matrix entry".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in diag.iter().enumerate() {
            m.set(i, i, *v);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_columns(columns: &[Vector]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("ragged columns".into()));
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vector {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ y`
    pub fn matvec_t(&self, y: &[f64]) -> Vector {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = Vector::zeros(self.cols);
        for (i, yi) in y.iter().enumerate() {
            if *yi != 0.0 {
                out.axpy(*yi, self.row(i));
            }
        }
        out
    }

    /// `AᵀA`
    pub fn gram(&self) -> DenseMatrix {
        let d = self.cols;
        let mut g = DenseMatrix::zeros(d, d);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..d {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let grow = &mut g.data[a * d..(a + 1) * d];
                for b in a..d {
                    grow[b] += ra * r[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                g.data[a * d + b] = g.data[b * d + a];
            }
        }
        g
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = out.row_mut(i);
                for (d, o) in dst.iter_mut().zip(orow) {
                    *d += a * o;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        debug_assert_eq!(self.rows, self.cols);
        for (i, v) in diag.iter().enumerate() {
            self.data[i * self.cols + i] += v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// New matrix whose k-th row is `scale_k * self.row(index_k)`.
    pub fn select_rows(&self, picks: &[(usize, f64)]) -> DenseMatrix {
        let mut data = Vec::with_capacity(picks.len() * self.cols);
        for &(i, s) in picks {
            data.extend(self.row(i).iter().map(|v| v * s));
        }
        DenseMatrix {
            rows: picks.len(),
            cols: self.cols,
            data,
        }
    }

    /// Stacks `blocks` vertically.
    pub fn vstack(blocks: &[&DenseMatrix]) -> Result<DenseMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(Error::Dimension("vstack column mismatch".into()));
        }
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgReport {
    pub solution: Vector,
    pub iterations: usize,
    /// `||b - H x||₂` evaluated explicitly at the returned solution.
    pub final_residual_norm: f64,
}

/// Conjugate gradient for `H x = b`, started at `x = 0`.
///
/// Stops after `max_iter` iterations or as soon as the recurrence residual
/// satisfies `||r|| <= rel_tol * ||b||`. With `rel_tol = 0` it only stops
/// early on an exactly zero residual.
pub fn cg_solve<F>(mut apply_h: F, b: &[f64], max_iter: usize, rel_tol: f64) -> Result<CgReport>
where
    F: FnMut(&[f64]) -> Vector,
{
    if max_iter == 0 {
        return Err(Error::Range("cg max_iter must be >= 1".into()));
    }
    if !(rel_tol >= 0.0) {
        return Err(Error::Range(format!("cg rel_tol must be >= 0, got {rel_tol}")));
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericBreakdown("non-finite right-hand side".into()));
    }
    let d = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(CgReport {
            solution: Vector::zeros(d),
            iterations: 0,
            final_residual_norm: 0.0,
        });
    }

    let mut x = Vector::zeros(d);
    let mut r = Vector::from(b);
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let threshold = rel_tol * b_norm;
    let mut iterations = 0;

    while iterations < max_iter {
        if rr.sqrt() <= threshold || rr == 0.0 {
            break;
        }
        let hp = apply_h(&p);
        let php = p.dot(&hp);
        if !php.is_finite() || php <= 0.0 {
            return Err(Error::NumericBreakdown(format!(
                "non-positive curvature pᵀHp = {php:e} at CG iteration {iterations}"
            )));
        }
        let alpha = rr / php;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &hp);
        let rr_next = r.dot(&r);
        iterations += 1;
        if !rr_next.is_finite() || !x.is_finite() {
            return Err(Error::NumericBreakdown(format!(
                "non-finite iterate at CG iteration {iterations}"
            )));
        }
        let beta = rr_next / rr;
        for (pi, ri) in p.iter_mut().zip(r.iter()) {
            *pi = ri + beta * *pi;
        }
        rr = rr_next;
    }

    let hx = apply_h(&x);
    let final_residual_norm = norm(&Vector::from(b).sub(&hx));
    Ok(CgReport {
        solution: x,
        iterations,
        final_residual_norm,
    })
}

/// Square-root-free Cholesky `H = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    lower: DenseMatrix,
    diag: Vec<f64>,
}

impl Ldlt {
    /// Fails with [`Error::NotPositiveDefinite`] on the first pivot `<= 0`.
    pub fn factor(h: &DenseMatrix) -> Result<Self> {
        let n = h.rows();
        if h.cols() != n {
            return Err(Error::Dimension(format!(
                "factorization needs a square matrix, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        let mut l = DenseMatrix::identity(n);
        let mut diag = vec![0.0; n];
        for j in 0..n {
            let mut pivot = h.get(j, j);
            for k in 0..j {
                pivot -= l.get(j, k).powi(2) * diag[k];
            }
            if !(pivot > 0.0) {
                return Err(Error::NotPositiveDefinite { index: j, pivot });
            }
            diag[j] = pivot;
            for i in j + 1..n {
                let mut v = h.get(i, j);
                for k in 0..j {
                    v -= l.get(i, k) * l.get(j, k) * diag[k];
                }
                l.set(i, j, v / pivot);
            }
        }
        Ok(Ldlt { lower: l, diag })
    }

    pub fn solve(&self, b: &[f64]) -> Vector {
        let n = self.lower.rows();
        let l = &self.lower;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= l.get(i, k) * y[k];
            }
            y[i] = v;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut v = y[i] / self.diag[i];
            for k in i + 1..n {
                v -= l.get(k, i) * x[k];
            }
            x[i] = v;
        }
        Vector::from(x)
    }
}

pub fn direct_spd_solve(h: &DenseMatrix, b: &[f64]) -> Result<Vector> {
    if h.rows() != b.len() {
        return Err(Error::Dimension(format!(
            "system matrix is {}x{}, right-hand side has length {}",
            h.rows(),
            h.cols(),
            b.len()
        )));
    }
    Ok(Ldlt::factor(h)?.solve(b))
}

/// Largest singular value by power iteration on `aᵀa`.
pub fn spectral_norm(a: &DenseMatrix, tol: f64) -> f64 {
    let d = a.cols();
    if d == 0 || a.rows() == 0 {
        return 0.0;
    }
    // fixed, non-symmetric start so it is unlikely to be orthogonal to the top vector
    let mut v: Vector = (0..d).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7 + 0.3).sin()).collect();
    let n0 = v.norm();
    v.scale(1.0 / n0);
    let mut estimate = 0.0;
    for _ in 0..SPECTRAL_MAX_ITER {
        let av = a.matvec(&v);
        let rayleigh = av.dot(&av);
        let mut w = a.matvec_t(&av);
        let wn = w.norm();
        if wn == 0.0 {
            return rayleigh.sqrt();
        }
        w.scale(1.0 / wn);
        v = w;
        if (rayleigh - estimate).abs() <= tol * rayleigh {
            estimate = rayleigh;
            break;
        }
        estimate = rayleigh;
    }
    estimate.sqrt()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascend; eigenvectors are the matching columns.
pub fn symmetric_eigen(h: &DenseMatrix) -> Result<(Vector, DenseMatrix)> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::Dimension("eigen-decomposition needs a square matrix".into()));
    }
    let mut a = h.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = h.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(i, i).total_cmp(&a.get(j, j)));
    let values: Vector = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok((values, vectors))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn extreme_eigenvalues(h: &DenseMatrix) -> Result<(f64, f64)> {
    let (vals, _) = symmetric_eigen(h)?;
    Ok((vals[0], vals[vals.len() - 1]))
}

/// `λ_max / λ_min` of a symmetric positive definite matrix.
pub fn condition_number(h: &DenseMatrix) -> Result<f64> {
    let (lo, hi) = extreme_eigenvalues(h)?;
    if !(lo > 0.0) {
        return Err(Error::NotPositiveDefinite { index: 0, pivot: lo });
    }
    Ok(hi / lo)
}

/// `max |λ|` of a symmetric matrix, i.e. its spectral norm.
pub fn symmetric_spectral_norm(h: &DenseMatrix) -> Result<f64> {
    let (lo, hi) = extreme_eigenvalues(h)?;
    Ok(lo.abs().max(hi.abs()))
}

/// Orthonormal basis of the column space of `a` by twice-iterated modified
/// Gram-Schmidt. Columns whose residual drops below `RANK_CUTOFF * ||a||_F`
/// are discarded.
pub fn thin_orthonormal_basis(a: &DenseMatrix) -> DenseMatrix {
    let cutoff = RANK_CUTOFF * a.frobenius_norm();
    let mut basis: Vec<Vector> = Vec::with_capacity(a.cols());
    for j in 0..a.cols() {
        let mut v = a.column(j);
        for _pass in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q);
            }
        }
        let nv = v.norm();
        if nv > cutoff && nv > 0.0 {
            v.scale(1.0 / nv);
            basis.push(v);
        }
    }
    if basis.is_empty() {
        return DenseMatrix::zeros(a.rows(), 0);
    }
    DenseMatrix::from_columns(&basis).expect("basis columns share a length")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd_from_seed(d: usize, seed: u64) -> DenseMatrix {
        let g = crate::rng::gaussian_matrix(&mut crate::rng::rng(seed), d + 3, d);
        let mut h = g.gram();
        h.add_diagonal(&vec![0.5; d]);
        h
    }

    #[test]
    fn cg_scaled_identity_one_step() {
        let r = cg_solve(|v| v.iter().map(|x| 2.0 * x).collect(), &[2.0, 4.0], 10, 1e-12).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.solution[0] - 1.0).abs() < 1e-15);
        assert!((r.solution[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cg_identity() {
        let b: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
        let r = cg_solve(|v| Vector::from(v), &b, 8, 1e-12).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.solution.as_slice(), &b[..]);
    }

    #[test]
    fn cg_zero_rhs() {
        let r = cg_solve(|v| Vector::from(v), &[0.0; 3], 5, 1e-8).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.solution.as_slice(), &[0.0; 3]);
    }

    #[test]
    fn cg_rejects_indefinite() {
        let h = DenseMatrix::from_diagonal(&[1.0, -1.0]);
        let err = cg_solve(|v| h.matvec(v), &[1.0, 1.0], 5, 0.0).unwrap_err();
        assert!(matches!(err, Error::NumericBreakdown(_)));
    }

    #[test]
    fn cg_matches_direct_on_random_spd() {
        let h = spd_from_seed(8, 11);
        let b: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let cg = cg_solve(|v| h.matvec(v), &b, 100, 1e-14).unwrap();
        let direct = direct_spd_solve(&h, &b).unwrap();
        let rel = cg.solution.sub(&direct).norm() / direct.norm();
        assert!(rel <= 1e-10, "rel error {rel}");
    }

    #[test]
    fn direct_solve_examples() {
        let x = direct_spd_solve(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 2.0, 3.0]);
        let x = direct_spd_solve(&DenseMatrix::from_diagonal(&[2.0, 4.0]), &[2.0, 4.0]).unwrap();
        assert_eq!(x.as_slice(), &[1.0, 1.0]);
        let h = spd_from_seed(12, 3);
        let b: Vec<f64> = (0..12).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let x = direct_spd_solve(&h, &b).unwrap();
        let res = h.matvec(&x).sub(&b).norm();
        assert!(res <= 1e-12 * norm(&b));
    }

    #[test]
    fn direct_solve_rejects_non_spd() {
        let h = DenseMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(
            direct_spd_solve(&h, &[1.0, 1.0]),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        assert!(matches!(
            direct_spd_solve(&DenseMatrix::identity(2), &[1.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&DenseMatrix::identity(4), SPECTRAL_TOL) - 1.0).abs() < 1e-12);
        let a = DenseMatrix::from_diagonal(&[3.0, 1.0]);
        assert!((spectral_norm(&a, SPECTRAL_TOL) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn orthonormal_basis_of_identity_and_rank_one() {
        let u = thin_orthonormal_basis(&DenseMatrix::identity(3));
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u.get(i, j).abs() - expect).abs() < 1e-15);
            }
        }
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let u = thin_orthonormal_basis(&a);
        assert_eq!(u.cols(), 1);
        assert!((u.get(0, 0).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_eigen_reconstructs() {
        let h = spd_from_seed(6, 9);
        let (vals, vecs) = symmetric_eigen(&h).unwrap();
        for w in vals.windows(2) {
            assert!(w[0] <= w[1]);
        }
        let recon = vecs
            .matmul(&DenseMatrix::from_diagonal(&vals))
            .unwrap()
            .matmul(&vecs.transpose())
            .unwrap();
        assert!(recon.max_abs_diff(&h) < 1e-10 * h.frobenius_norm());
    }

    #[test]
    fn matrix_shape_is_checked() {
        assert!(DenseMatrix::from_row_major(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::from_row_major(1, 1, vec![f64::NAN]).is_err());
    }
}
