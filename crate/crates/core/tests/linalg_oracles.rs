mod common;

use common::{random_spd, to_na};
use giant_core::linalg::{self, cg_solve, direct_spd_solve, spectral_norm, thin_orthonormal_basis, Ldlt};
use giant_core::{rng, DenseMatrix, Vector};

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    Vector::from(a).sub(b).norm() / linalg::norm(b)
}

#[test]
fn cg_matches_nalgebra_solve() {
    for seed in 0..10 {
        let h = random_spd(8, seed);
        let b = rng::gaussian_vector(&mut rng::rng(100 + seed), 8);
        let x = cg_solve(|v| h.matvec(v), &b, 100, 1e-14).unwrap().solution;
        let oracle = to_na(&h).lu().solve(&nalgebra::DVector::from_column_slice(&b)).unwrap();
        assert!(rel_err(&x, oracle.as_slice()) <= 1e-10);
    }
}

#[test]
fn cg_with_d_iterations_matches_direct() {
    // finite-precision CG loses orthogonality on spread spectra, so the
    // d-step property is checked on moderately conditioned systems
    for seed in 0..20 {
        let d = 2 + (seed as usize % 11);
        let h = random_spd(d, seed);
        let b = rng::gaussian_vector(&mut rng::rng(seed + 7), d);
        let cg = cg_solve(|v| h.matvec(v), &b, d, 0.0).unwrap();
        assert!(cg.iterations <= d);
        assert!(rel_err(&cg.solution, &direct_spd_solve(&h, &b).unwrap()) <= 1e-8);
    }
    for seed in 0..20 {
        for d in [4, 8, 16, 32] {
            let mut r = rng::rng(seed);
            let h = giant_core::theory::spd_with_condition(d, 10.0, &mut r);
            let b = rng::gaussian_vector(&mut r, d);
            let cg = cg_solve(|v| h.matvec(v), &b, d, 0.0).unwrap();
            assert!(rel_err(&cg.solution, &direct_spd_solve(&h, &b).unwrap()) <= 1e-8);
        }
    }
}

#[test]
fn cg_error_shrinks_with_budget() {
    let h = random_spd(12, 3);
    let b = rng::gaussian_vector(&mut rng::rng(4), 12);
    let exact = direct_spd_solve(&h, &b).unwrap();
    // CG minimizes the energy-norm error over growing Krylov spaces
    let energy = |x: &Vector| {
        let e = x.sub(&exact);
        linalg::dot(&e, &h.matvec(&e)).sqrt()
    };
    let mut last = f64::INFINITY;
    for k in 1..=12 {
        let x = cg_solve(|v| h.matvec(v), &b, k, 0.0).unwrap().solution;
        let e = energy(&x);
        assert!(e <= last * (1.0 + 1e-9) + 1e-12, "k={k}: {e} > {last}");
        last = e;
    }
}

#[test]
fn direct_solve_residual() {
    for seed in 0..10 {
        let h = random_spd(16, seed);
        let b = rng::gaussian_vector(&mut rng::rng(seed + 50), 16);
        let x = direct_spd_solve(&h, &b).unwrap();
        let r = Vector::from(b.as_slice()).sub(&h.matvec(&x));
        assert!(r.norm() <= 1e-12 * b.norm() * 10.0f64.max(1.0), "residual {}", r.norm());
    }
}

#[test]
fn ldlt_reconstructs_and_matches_nalgebra_cholesky() {
    let h = random_spd(6, 9);
    let b = rng::gaussian_vector(&mut rng::rng(10), 6);
    let ours = Ldlt::factor(&h).unwrap().solve(&b);
    let chol = to_na(&h).cholesky().unwrap();
    let theirs = chol.solve(&nalgebra::DVector::from_column_slice(&b));
    assert!(rel_err(&ours, theirs.as_slice()) <= 1e-12);
}

#[test]
fn spectral_norm_matches_svd() {
    for seed in 0..10 {
        let a = rng::gaussian_matrix(&mut rng::rng(seed), 20, 5);
        let oracle = to_na(&a).singular_values().max();
        let ours = spectral_norm(&a, linalg::SPECTRAL_TOL);
        assert!((ours - oracle).abs() / oracle <= 1e-6);
    }
}

#[test]
fn spectral_norm_bounds_every_probe() {
    let a = rng::gaussian_matrix(&mut rng::rng(1), 30, 7);
    let s = spectral_norm(&a, linalg::SPECTRAL_TOL);
    let mut r = rng::rng(2);
    for _ in 0..100 {
        let v = rng::gaussian_vector(&mut r, 7);
        assert!(a.matvec(&v).norm() / v.norm() <= s * (1.0 + 1e-9));
    }
}

#[test]
fn jacobi_eigenvalues_match_nalgebra() {
    for seed in 0..5 {
        let h = random_spd(10, seed);
        let (vals, _) = linalg::symmetric_eigen(&h).unwrap();
        let mut ours: Vec<f64> = vals.to_vec();
        let mut theirs: Vec<f64> = to_na(&h).symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
        }
        let kappa = linalg::condition_number(&h).unwrap();
        assert!((kappa - theirs[9] / theirs[0]).abs() / kappa <= 1e-9);
    }
}

#[test]
fn orthonormal_basis_of_random_matrix() {
    let a = rng::gaussian_matrix(&mut rng::rng(5), 50, 6);
    let u = thin_orthonormal_basis(&a);
    assert_eq!(u.cols(), 6);
    let gram = u.gram();
    assert!(gram.max_abs_diff(&DenseMatrix::identity(6)) <= 1e-12);
    // U Uᵀ a = a
    let ut_a = u.transpose().matmul(&a).unwrap();
    let proj = u.matmul(&ut_a).unwrap();
    assert!(proj.max_abs_diff(&a) <= 1e-10);
}

#[test]
fn orthonormal_basis_drops_dependent_columns() {
    let mut r = rng::rng(6);
    let base = rng::gaussian_matrix(&mut r, 40, 3);
    // fourth column = first + second
    let a = DenseMatrix::from_fn(40, 4, |i, j| if j < 3 { base.get(i, j) } else { base.get(i, 0) + base.get(i, 1) });
    let u = thin_orthonormal_basis(&a);
    assert_eq!(u.cols(), 3);
    let rank = to_na(&a).rank(1e-10);
    assert_eq!(rank, 3);
}

