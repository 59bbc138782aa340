mod common;

use giant_core::giant::{self, GiantConfig, GiantSolver};
use giant_core::linesearch::select_step;
use giant_core::objective;
use giant_core::{linalg, rng, sketch, theory, CgSettings, Fabric, Problem, RunOptions, Solver, Termination, Vector};

fn exact(iterations: usize) -> GiantConfig {
    GiantConfig {
        max_iterations: iterations,
        line_search: false,
        exact_local_solves: true,
        stop_tol: 0.0,
        ..Default::default()
    }
}

#[test]
fn reference_solution_matches_nalgebra_normal_equations() {
    let inst = common::ridge(300, 6, 1, 50.0, 1);
    let x = common::to_na(&inst.data.features);
    let y = nalgebra::DVector::from_column_slice(&inst.data.labels);
    let n = 300.0;
    let lhs = x.transpose() * &x / n + nalgebra::DMatrix::identity(6, 6) * 1e-3;
    let rhs = x.transpose() * y / n;
    let oracle = lhs.lu().solve(&rhs).unwrap();
    let ours = giant::solve_reference(&inst.spec, &inst.data, giant::REFERENCE_TOL).unwrap();
    let diff = (0..6).map(|i| (ours[i] - oracle[i]).abs()).fold(0.0, f64::max);
    assert!(diff <= 1e-10);
    let g0 = objective::gradient(&inst.spec, &inst.data, &[0.0; 6]).unwrap().norm();
    assert!(objective::gradient(&inst.spec, &inst.data, &ours).unwrap().norm() <= giant::REFERENCE_TOL * g0 * 10.0);
}

#[test]
fn reference_converges_on_separable_logistic_data() {
    let mut r = rng::rng(2);
    let x = rng::gaussian_matrix(&mut r, 100, 3);
    let labels: Vector = (0..100).map(|i| if x.get(i, 0) > 0.0 { 1.0 } else { -1.0 }).collect();
    let data = giant_core::LabeledDataset::new(x, labels).unwrap();
    let spec = giant_core::ObjectiveSpec::logistic(1e-3);
    let w = giant::solve_reference(&spec, &data, giant::REFERENCE_TOL).unwrap();
    assert!(w.is_finite());
    assert!(objective::gradient(&spec, &data, &w).unwrap().norm() <= 1e-10);
}

#[test]
fn four_shard_quadratic_contracts_every_step() {
    let inst = common::ridge(4096, 8, 4, 100.0, 3);
    let problem = Problem::new(&inst.spec, &inst.data, &inst.shards).unwrap();
    let wstar = giant::solve_reference(&inst.spec, &inst.data, giant::REFERENCE_TOL).unwrap();
    let out = giant::run_giant(
        &problem,
        &mut Fabric::new(4).unwrap(),
        &exact(30),
        &Vector::zeros(8),
        RunOptions {
            reference: Some(&wstar),
            ..Default::default()
        },
    )
    .unwrap();
    let errors = giant::error_norms(&out.trace);
    let dev = theory::measured_deviation(&inst.spec, &inst.data, &inst.shards, &[0.0; 8]).unwrap();
    let a = objective::scaled_rows(&inst.spec, &inst.data, &[0.0; 8]).unwrap();
    let alpha = sketch::alpha_bound(&a, &inst.spec.regularizer, dev.max_per_view(), 4, 0.0).unwrap().alpha();
    assert!(alpha < 1.0);
    let ratios = theory::contraction_ratios(&errors, 1e-12 * errors[0]);
    assert!(ratios.len() >= 3);
    assert!(ratios.iter().all(|r| *r <= 1.05 * alpha), "{ratios:?} vs {alpha}");
}

#[test]
fn worker_failure_ends_run_with_partial_trace() {
    let mut inst = common::ridge(200, 4, 2, 10.0, 4);
    // zero iteration budget makes the second worker's CG reject the call
    inst.shards[1].cg = CgSettings { max_iter: 0, rel_tol: 0.0 };
    let problem = Problem::new(&inst.spec, &inst.data, &inst.shards).unwrap();
    let out = GiantSolver::new(GiantConfig::default())
        .unwrap()
        .run(&problem, &mut Fabric::new(2).unwrap(), &Vector::zeros(4), RunOptions::default())
        .unwrap();
    assert!(matches!(out.termination, Termination::Failed(ref why) if why.contains("worker 1")), "{:?}", out.termination);
    assert_eq!(out.trace.len(), 1);
    assert_eq!(out.stats.rounds, 3);
}

#[test]
fn threaded_run_matches_sequential_run() {
    let inst = common::logistic(1000, 6, 4, 10.0, 5);
    let problem = Problem::new(&inst.spec, &inst.data, &inst.shards).unwrap();
    let run = |mode| {
        giant::run_giant(
            &problem,
            &mut Fabric::with_mode(4, mode).unwrap(),
            &GiantConfig::default(),
            &Vector::zeros(6),
            RunOptions::default(),
        )
        .unwrap()
    };
    let a = run(giant_core::ExecutionMode::Sequential);
    let b = run(giant_core::ExecutionMode::Threaded);
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.solution, b.solution);
}

#[test]
fn line_search_never_increases_the_objective() {
    for seed in 0..5 {
        let inst = common::logistic(800, 8, 4, 100.0, 10 + seed);
        let problem = Problem::new(&inst.spec, &inst.data, &inst.shards).unwrap();
        let out = giant::run_giant(
            &problem,
            &mut Fabric::new(4).unwrap(),
            &GiantConfig {
                max_iterations: 25,
                ..Default::default()
            },
            &Vector::zeros(8),
            RunOptions::default(),
        )
        .unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective);
        }
        for w in out.trace.windows(2) {
            assert_eq!(w[1].stats.rounds - w[0].stats.rounds, 6);
        }
    }
}

#[test]
fn step_selection_matches_enumeration() {
    let candidates = giant_core::linesearch::default_candidates();
    let mut r = rng::rng(6);
    for _ in 0..200 {
        let values: Vec<f64> = (0..10).map(|_| 1.0 + rng::gaussian(&mut r)).collect();
        let directional = -rng::gaussian(&mut r).abs();
        let choice = select_step(&values, 1.0, directional, 0.1, &candidates);
        let first = (0..10).find(|&k| values[k] <= 1.0 + 0.1 * candidates[k] * directional);
        match first {
            Some(k) => {
                assert!(choice.satisfied);
                assert_eq!(choice.alpha, candidates[k]);
            }
            None => assert!(!choice.satisfied),
        }
    }
}

/// Larger perturbations: the error obeys the linear-plus-quadratic envelope
/// with `L` estimated from Hessian differences along the trajectory.
#[test]
fn local_error_obeys_linear_quadratic_envelope() {
    let inst = common::logistic(4096, 8, 4, 10.0, 20);
    let problem = Problem::new(&inst.spec, &inst.data, &inst.shards).unwrap();
    let wstar = giant::solve_reference(&inst.spec, &inst.data, giant::REFERENCE_TOL).unwrap();
    let hstar = objective::materialize_hessian(&inst.spec, &inst.data, &wstar).unwrap();
    let (smin, smax) = linalg::extreme_eigenvalues(&hstar).unwrap();
    let dev = theory::measured_deviation(&inst.spec, &inst.data, &inst.shards, &wstar).unwrap();
    let a = objective::scaled_rows(&inst.spec, &inst.data, &wstar).unwrap();
    let alpha = sketch::alpha_bound(&a, &inst.spec.regularizer, dev.max_per_view(), 4, 0.0).unwrap().alpha();
    let linear = 2.0 * alpha * (smax / smin).sqrt();
    assert!(linear < 1.0);

    let mut delta = rng::gaussian_vector(&mut rng::rng(21), 8);
    delta.scale(1.0 / delta.norm());
    let w0 = wstar.add(&delta);
    let out = giant::run_giant(
        &problem,
        &mut Fabric::new(4).unwrap(),
        &exact(8),
        &w0,
        RunOptions {
            reference: Some(&wstar),
            record_iterates: true,
            ..Default::default()
        },
    )
    .unwrap();
    // Hessian Lipschitz estimate from consecutive iterates
    let mut lip = 0.0f64;
    for pair in out.iterates.windows(2) {
        let step = pair[1].sub(&pair[0]).norm();
        if step < 1e-8 {
            continue;
        }
        let h0 = objective::materialize_hessian(&inst.spec, &inst.data, &pair[0]).unwrap();
        let h1 = objective::materialize_hessian(&inst.spec, &inst.data, &pair[1]).unwrap();
        lip = lip.max(linalg::symmetric_spectral_norm(&h1.sub(&h0)).unwrap() / step);
    }
    let errors = giant::error_norms(&out.trace);
    for w in errors.windows(2).take_while(|w| w[0] > 1e-12) {
        let bound = (linear * w[0]).max(3.0 * lip / smin * w[0] * w[0]);
        assert!(w[1] <= bound * 1.1, "{} > {}", w[1], bound);
    }
}
