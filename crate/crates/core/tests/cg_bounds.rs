mod common;

use common::{dense, jump, problem, random_vec, rng, to_vec};
use inexact_mg::analysis::{estimate_a0_inv_norm, estimate_a_norm, estimate_t_norm};
use inexact_mg::fem::Coefficient;
use inexact_mg::krylov::{
    cg_solve, estimate_mu, gamma_from_tau, CgCoarseSolver, CgOptions, Estimator, StopRule,
};
use inexact_mg::linalg::{PowerOptions, SparseMatrix};
use inexact_mg::multigrid::{reference_solution, run_lockstep, FinestStop, ReferenceOptions};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// SPD matrix with eigenvalues spread over `[1, cond]`, random eigenvectors.
fn random_spd(seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let n = r.gen_range(5..=200);
    let cond = 10f64.powf(r.gen_range(1.0..5.0));
    let g = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let eig = DVector::from_fn(n, |i, _| cond.powf(i as f64 / (n - 1) as f64));
    let a = &q * DMatrix::from_diagonal(&eig) * q.transpose();
    (&a + a.transpose()) * 0.5
}

struct Tally {
    steps: usize,
    gr_sharper: usize,
}

/// Runs CG to relative residual 1e-10 and checks both bounds at every step.
fn check_bounds(
    a: &SparseMatrix,
    lambda_min: f64,
    mu: f64,
    f: &[f64],
    exact: &[f64],
    tally: &mut Tally,
) {
    assert!(mu <= lambda_min, "μ={mu:e} above λ_min={lambda_min:e}");
    let opts = CgOptions {
        mu: Some(mu),
        oracle: Some(exact),
        record_history: true,
        ..Default::default()
    };
    let out = cg_solve(
        a,
        f,
        &vec![0.0; f.len()],
        StopRule::RelResidual(1e-10),
        &opts,
    )
    .unwrap();
    assert!(out.report.converged);
    let mut prev_err = f64::INFINITY;
    for step in &out.history {
        let err = step.error_anorm.unwrap();
        let res = step.eta_residual.unwrap();
        let gr = step.eta_gauss_radau.unwrap();
        assert!(
            res >= err,
            "RES {res:e} < err {err:e} at {}",
            step.iteration
        );
        assert!(gr >= err, "GR {gr:e} < err {err:e} at {}", step.iteration);
        assert!(
            err < prev_err,
            "CG error not decreasing at {}",
            step.iteration
        );
        prev_err = err;
        if step.iteration > 0 {
            tally.steps += 1;
            if gr <= res {
                tally.gr_sharper += 1;
            }
        }
    }
}

#[test]
fn error_bounds_on_random_spd_matrices() {
    let mut tally = Tally {
        steps: 0,
        gr_sharper: 0,
    };
    for seed in 0..50 {
        let d = random_spd(1000 + seed);
        let n = d.nrows();
        let a = SparseMatrix::from_dense(
            &(0..n)
                .map(|i| d.row(i).iter().copied().collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let lambda_min = d.clone().symmetric_eigen().eigenvalues.min();
        let f = random_vec(&mut rng(seed), n);
        let exact = to_vec(
            d.clone()
                .cholesky()
                .unwrap()
                .solve(&DVector::from_vec(f.clone())),
        );
        check_bounds(&a, lambda_min, 0.999 * lambda_min, &f, &exact, &mut tally);
    }
    let share = tally.gr_sharper as f64 / tally.steps as f64;
    assert!(share >= 0.95, "Gauss-Radau sharper in {share:.3} of steps");
}

#[test]
fn error_bounds_on_model_coarse_matrices() {
    let mut tally = Tally {
        steps: 0,
        gr_sharper: 0,
    };
    for coeff in [Coefficient::poisson(), jump()] {
        let mp = problem(coeff, 1, 40);
        let h = &mp.hierarchy;
        let a0 = h.coarse_matrix();
        let mu = estimate_mu(a0, h.coarse_factor(), &PowerOptions::default()).unwrap();
        let lambda_min = dense(a0).symmetric_eigen().eigenvalues.min();
        let f = random_vec(&mut rng(9), a0.nrows());
        let exact = h.coarse_factor().solve(&f).unwrap();
        check_bounds(a0, lambda_min, mu, &f, &exact, &mut tally);
    }
    assert!(tally.gr_sharper as f64 >= 0.95 * tally.steps as f64);
}

#[test]
fn eta_stopping_implies_error_stopping() {
    let mp = problem(jump(), 1, 40);
    let h = &mp.hierarchy;
    let a0 = h.coarse_matrix();
    let mu = estimate_mu(a0, h.coarse_factor(), &PowerOptions::default()).unwrap();
    let f = random_vec(&mut rng(4), a0.nrows());
    let exact = h.coarse_factor().solve(&f).unwrap();
    for estimator in [Estimator::Residual, Estimator::GaussRadau] {
        for eps in [1e-2, 1e-5, 1e-8] {
            let opts = CgOptions {
                mu: Some(mu),
                oracle: Some(&exact),
                ..Default::default()
            };
            let rule = StopRule::AbsEta { eps, estimator };
            let out = cg_solve(a0, &f, &vec![0.0; f.len()], rule, &opts).unwrap();
            assert!(out.report.final_bound_eta.unwrap() <= eps);
            assert!(out.report.oracle_error_a0norm.unwrap() <= eps);
        }
    }
}

#[test]
fn relative_residual_rule_meets_the_relative_error_hypothesis() {
    let mp = problem(Coefficient::poisson(), 3, 8);
    let h = &mp.hierarchy;
    let opts = PowerOptions::default();
    let t = estimate_t_norm(h, &opts).unwrap().value;
    let a = estimate_a_norm(h, &opts).unwrap().value;
    let ai = estimate_a0_inv_norm(h, &opts).unwrap().value;
    let xs = reference_solution(h, &mp.rhs, &ReferenceOptions::default()).unwrap();
    for tau in [0.5, 1e-2, 1e-4] {
        let gamma = gamma_from_tau(tau, t, a, ai);
        let solver = CgCoarseSolver::new(StopRule::RelResidual(tau));
        let x0 = vec![0.0; xs.len()];
        let trace = run_lockstep(h, &mp.rhs, &x0, FinestStop::MaxCycles(8), &solver, &xs).unwrap();
        let mut prev = trace.initial_err_anorm.unwrap();
        for rec in &trace.records {
            let coarse_err = rec.coarse.oracle_error_a0norm.unwrap();
            assert!(
                coarse_err <= gamma * prev,
                "τ={tau}: {coarse_err:e} > {gamma:e}·{prev:e}"
            );
            prev = rec.err_anorm.unwrap();
        }
    }
}
