mod common;

use common::{
    a_symmetrized, dense, dense_sgs, jump, max_eig, problem, random_vec, rel_diff, rng, to_vec,
};
use inexact_mg::analysis::{
    apply_s, apply_s_transpose, apply_t, estimate_e_norm, estimate_s_norm, estimate_t_norm,
    smoother_contraction, SmootherSide,
};
use inexact_mg::fem::Coefficient;
use inexact_mg::linalg::{dot, norm2, PowerOptions};
use inexact_mg::multigrid::{Hierarchy, SmootherSpec};
use inexact_mg::Error;
use nalgebra::{DMatrix, DVector};

struct DenseTwoLevel {
    a: DMatrix<f64>,
    a0: DMatrix<f64>,
    p: DMatrix<f64>,
    m: DMatrix<f64>,
}

fn two_level(h: &Hierarchy) -> DenseTwoLevel {
    let a = dense(h.matrix(1));
    DenseTwoLevel {
        m: dense_sgs(&a),
        a0: dense(h.coarse_matrix()),
        p: dense(h.prolongation(1)),
        a,
    }
}

fn opts() -> PowerOptions {
    PowerOptions {
        tol: 1e-12,
        ..Default::default()
    }
}

#[test]
fn s_and_t_match_dense_operators() {
    for coeff in [Coefficient::poisson(), jump()] {
        let mp = problem(coeff, 2, 4);
        let h = &mp.hierarchy;
        let d = two_level(h);
        let n = d.a.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let s = (&id - &d.m * &d.a) * &d.p;
        let t = d.p.transpose() * (&id - &d.a * &d.m);
        let mut r = rng(3);
        for _ in 0..5 {
            let w = random_vec(&mut r, h.dim(0));
            let y = random_vec(&mut r, n);
            let s_dense = to_vec(&s * DVector::from_vec(w.clone()));
            assert!(rel_diff(&apply_s(h, &w).unwrap(), &s_dense) <= 1e-12);
            let st_dense = to_vec(s.transpose() * DVector::from_vec(y.clone()));
            assert!(rel_diff(&apply_s_transpose(h, &y).unwrap(), &st_dense) <= 1e-12);
            let t_dense = to_vec(&t * DVector::from_vec(y.clone()));
            assert!(rel_diff(&apply_t(h, &y).unwrap(), &t_dense) <= 1e-12);
        }

        // ‖S‖_{A₀,A}: largest eigenvalue of A₀⁻¹ SᵀAS, symmetrized with A₀'s factor.
        let g = s.transpose() * &d.a * &s;
        let l = d.a0.clone().cholesky().unwrap().l();
        let li = l.try_inverse().unwrap();
        let sym = &li * g * li.transpose();
        let s_norm = max_eig((&sym + sym.transpose()) * 0.5).sqrt();
        let est = estimate_s_norm(h, &opts()).unwrap();
        assert!(
            (est.value - s_norm).abs() <= 1e-8,
            "{} vs {s_norm}",
            est.value
        );

        let t_norm = t.singular_values().max();
        let est = estimate_t_norm(h, &opts()).unwrap();
        assert!((est.value - t_norm).abs() <= 1e-8 * t_norm);

        // E = (I - MA)(I - P A₀⁻¹ Pᵀ A)(I - MA)
        let smooth = &id - &d.m * &d.a;
        let coarse = &id - &d.p * d.a0.clone().try_inverse().unwrap() * d.p.transpose() * &d.a;
        let e = &smooth * coarse * &smooth;
        let e_norm = max_eig(a_symmetrized(&d.a, &e));
        let est = estimate_e_norm(h, &opts()).unwrap();
        assert!(
            (est.value - e_norm).abs() <= 1e-8,
            "{} vs {e_norm}",
            est.value
        );
    }
}

#[test]
fn without_post_smoothing_s_is_prolongation() {
    let mp = problem(Coefficient::poisson(), 3, 4);
    let h = mp.hierarchy.with_post_smoother(None);
    let w = random_vec(&mut rng(8), h.dim(0));
    let direct = h
        .prolongation(2)
        .spmv(&h.prolongation(1).spmv(&w).unwrap())
        .unwrap();
    assert_eq!(apply_s(&h, &w).unwrap(), direct);
    let est = estimate_s_norm(&h, &PowerOptions::default()).unwrap();
    assert!((est.value - 1.0).abs() <= 1e-8, "{}", est.value);
}

#[test]
fn without_pre_smoothing_t_is_restriction() {
    let mp = problem(Coefficient::poisson(), 2, 4);
    let h = mp.hierarchy.with_pre_smoother(None);
    let r = random_vec(&mut rng(8), h.dim(1));
    assert_eq!(
        apply_t(&h, &r).unwrap(),
        h.prolongation(1).spmv_transpose(&r).unwrap()
    );
    let sigma = dense(h.prolongation(1)).singular_values().max();
    let est = estimate_t_norm(&h, &opts()).unwrap();
    assert!((est.value - sigma).abs() <= 1e-8 * sigma);
}

#[test]
fn t_norm_follows_sweep_count() {
    let mp = problem(Coefficient::poisson(), 2, 4);
    let two = SmootherSpec::symmetric_gauss_seidel(2).unwrap();
    let h = mp.hierarchy.with_pre_smoother(Some(two));
    let d = two_level(&h);
    let n = d.a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let step = &id - &d.a * &d.m;
    let t = d.p.transpose() * &step * &step;
    let t_norm = t.singular_values().max();
    let est = estimate_t_norm(&h, &opts()).unwrap();
    assert!((est.value - t_norm).abs() <= 1e-8 * t_norm);
    let single = estimate_t_norm(&mp.hierarchy, &opts()).unwrap();
    assert!((est.value - single.value).abs() > 1e-6);
}

#[test]
fn operator_norms_bound_applications() {
    let mp = problem(jump(), 3, 4);
    let h = &mp.hierarchy;
    let t = estimate_t_norm(h, &opts()).unwrap().value;
    let mut r = rng(17);
    for _ in 0..100 {
        let x = random_vec(&mut r, h.dim(2));
        assert!(norm2(&apply_t(h, &x).unwrap()) <= t * norm2(&x) * (1.0 + 1e-9));
    }
}

#[test]
fn s_norm_bounded_by_smoother_contractions() {
    for coeff in [Coefficient::poisson(), jump()] {
        let mp = problem(coeff, 3, 4);
        let h = &mp.hierarchy;
        let mut product = 1.0;
        for j in 1..h.num_levels() {
            for side in [SmootherSide::Pre, SmootherSide::Post] {
                let c = smoother_contraction(h, j, side, &opts()).unwrap().value;
                assert!(c < 1.0, "level {j}: {c}");
                if side == SmootherSide::Post {
                    product *= c;
                }
            }
        }
        let s = estimate_s_norm(h, &opts()).unwrap().value;
        assert!(s <= product + 1e-6, "{s} > {product}");
        assert!(s <= 1.0 + 1e-8);
    }
}

#[test]
fn s_and_t_are_linear() {
    let mp = problem(Coefficient::poisson(), 3, 4);
    let h = &mp.hierarchy;
    let mut r = rng(1);
    let (u, v) = (random_vec(&mut r, h.dim(0)), random_vec(&mut r, h.dim(0)));
    let comb: Vec<f64> = u.iter().zip(&v).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    let su = apply_s(h, &u).unwrap();
    let sv = apply_s(h, &v).unwrap();
    let expect: Vec<f64> = su.iter().zip(&sv).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    assert!(rel_diff(&apply_s(h, &comb).unwrap(), &expect) <= 1e-12);

    let n = h.dim(2);
    let (x, y) = (random_vec(&mut r, n), random_vec(&mut r, n));
    let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| -a + 3.0 * b).collect();
    let tx = apply_t(h, &x).unwrap();
    let ty = apply_t(h, &y).unwrap();
    let expect: Vec<f64> = tx.iter().zip(&ty).map(|(a, b)| -a + 3.0 * b).collect();
    assert!(rel_diff(&apply_t(h, &comb).unwrap(), &expect) <= 1e-12);

    // adjointness of the transposed application
    let w = random_vec(&mut r, h.dim(0));
    let lhs = dot(&apply_s(h, &w).unwrap(), &x);
    let rhs = dot(&w, &apply_s_transpose(h, &x).unwrap());
    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
}

#[test]
fn e_norm_does_not_depend_on_the_seed() {
    let mp = problem(Coefficient::poisson(), 3, 4);
    let values: Vec<f64> = (0..5)
        .map(|s| {
            let o = PowerOptions {
                seed: 100 + s,
                ..Default::default()
            };
            estimate_e_norm(&mp.hierarchy, &o).unwrap().value
        })
        .collect();
    let (lo, hi) = values
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi - lo <= 1e-6, "{values:?}");
    assert!(hi < 1.0);
}

#[test]
fn e_norm_needs_a_symmetric_cycle() {
    let mp = problem(Coefficient::poisson(), 2, 4);
    let h = mp.hierarchy.with_post_smoother(None);
    assert!(matches!(
        estimate_e_norm(&h, &PowerOptions::default()),
        Err(Error::NotSelfAdjoint(_))
    ));
}
