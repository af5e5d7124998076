#![allow(dead_code)]

use inexact_mg::fem::{build_hierarchy, Coefficient, ModelProblem, ProblemSpec};
use inexact_mg::linalg::{SparseMatrix, DEFAULT_DIRECT_CAP};
use inexact_mg::multigrid::SmootherSpec;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn problem(coeff: Coefficient, levels: usize, coarsest_m: usize) -> ModelProblem {
    build_hierarchy(
        ProblemSpec::new(coeff, levels, coarsest_m).unwrap(),
        Some(SmootherSpec::default()),
        DEFAULT_DIRECT_CAP,
    )
    .unwrap()
}

pub fn jump() -> Coefficient {
    Coefficient::FourQuadrantJump { k_high: 1024.0 }
}

pub fn dense(m: &SparseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.get(i, j))
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `M = (D+L)⁻ᵀ D (D+L)⁻¹` of one symmetric Gauss-Seidel sweep.
pub fn dense_sgs(a: &DMatrix<f64>) -> DMatrix<f64> {
    let lower = a.lower_triangle();
    let d = DMatrix::from_diagonal(&a.diagonal());
    let inv = lower.try_inverse().unwrap();
    inv.transpose() * d * inv
}

/// `A^{1/2}`-similarity via the Cholesky factor: eigenvalues of `Lᵀ X L⁻ᵀ`
/// for an `A`-self-adjoint `X`.
pub fn a_symmetrized(a: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let l = a.clone().cholesky().unwrap().l();
    let linv_t = l.clone().try_inverse().unwrap().transpose();
    let s = l.transpose() * x * linv_t;
    (&s + s.transpose()) * 0.5
}

pub fn max_eig(sym: DMatrix<f64>) -> f64 {
    sym.symmetric_eigen().eigenvalues.max()
}

pub fn to_vec(v: DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn rel_diff(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}
