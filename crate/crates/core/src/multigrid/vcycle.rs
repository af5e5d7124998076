use super::{smooth_in_place, Hierarchy};
use crate::error::{Error, Result};
use crate::linalg::{norm2, DenseCholesky, SparseMatrix};

/// What a coarsest-level solver did during one V-cycle.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoarseSolveReport {
    pub iterations: usize,
    /// Error bound the stopping rule was evaluated with, when it uses one.
    pub final_bound_eta: Option<f64>,
    /// `‖v₀ - v₀,in‖_{A₀}` measured against the direct solution, when computed.
    pub oracle_error_a0norm: Option<f64>,
    pub residual_norm: f64,
    /// False when an iteration cap ended the solve before its stopping rule fired.
    pub converged: bool,
    pub bound_comparison: Option<BoundComparison>,
}

/// Tally of iterations at which the Gauss-Radau bound did not exceed the
/// residual bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BoundComparison {
    pub iterations: usize,
    pub gauss_radau_sharper: usize,
}

impl BoundComparison {
    pub fn merge(self, other: Self) -> Self {
        Self {
            iterations: self.iterations + other.iterations,
            gauss_radau_sharper: self.gauss_radau_sharper + other.gauss_radau_sharper,
        }
    }
}

/// Inputs available to a coarsest-level solver.
pub struct CoarseProblem<'a> {
    pub matrix: &'a SparseMatrix,
    pub factor: &'a DenseCholesky,
    pub rhs: &'a [f64],
    /// `‖x - x^prev‖_A` on the finest level; only oracle stopping rules read it.
    pub finest_err_anorm: Option<f64>,
}

/// Solves (possibly approximately) `A₀ v₀ = f₀`.
pub trait CoarseSolver: Sync {
    fn solve(&self, problem: &CoarseProblem<'_>) -> Result<(Vec<f64>, CoarseSolveReport)>;
}

/// Direct solve with the hierarchy's Cholesky factor (the exV-cycle).
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactCoarseSolver;

impl CoarseSolver for ExactCoarseSolver {
    fn solve(&self, problem: &CoarseProblem<'_>) -> Result<(Vec<f64>, CoarseSolveReport)> {
        let v = problem.factor.solve(problem.rhs)?;
        let r = problem.matrix.residual(problem.rhs, &v)?;
        Ok((
            v,
            CoarseSolveReport {
                iterations: 0,
                final_bound_eta: None,
                oracle_error_a0norm: Some(0.0),
                residual_norm: norm2(&r),
                converged: true,
                bound_comparison: None,
            },
        ))
    }
}

/// One V-cycle on `level` for `A_level v = f` starting from `v0`.
///
/// Pre-smooth, restrict the residual with `P_levelᵀ`, recurse from a zero
/// coarse guess, correct with `P_level`, post-smooth. On level 0 the coarse
/// solver's answer is returned as is.
pub fn vcycle(
    h: &Hierarchy,
    f: &[f64],
    v0: &[f64],
    level: usize,
    coarse: &dyn CoarseSolver,
    finest_err_anorm: Option<f64>,
) -> Result<(Vec<f64>, CoarseSolveReport)> {
    if level > h.finest_level() {
        return Err(Error::InvalidParameter(format!(
            "level {level} above finest level {}",
            h.finest_level()
        )));
    }
    let a = h.matrix(level);
    if f.len() != a.nrows() || v0.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "level {level} has {} unknowns, got |f|={} |v|={}",
            a.nrows(),
            f.len(),
            v0.len()
        )));
    }
    if level == 0 {
        return coarse.solve(&CoarseProblem {
            matrix: a,
            factor: h.coarse_factor(),
            rhs: f,
            finest_err_anorm,
        });
    }

    let mut v = v0.to_vec();
    if let Some(spec) = h.pre_smoother(level) {
        smooth_in_place(a, f, &mut v, spec)?;
    }
    let p = h.prolongation(level);
    let r = a.residual(f, &v)?;
    let f_coarse = p.spmv_transpose(&r)?;
    let zero = vec![0.0; p.ncols()];
    let (v_coarse, report) = vcycle(h, &f_coarse, &zero, level - 1, coarse, finest_err_anorm)?;
    let correction = p.spmv(&v_coarse)?;
    v.iter_mut().zip(&correction).for_each(|(x, c)| *x += c);
    if let Some(spec) = h.post_smoother(level) {
        smooth_in_place(a, f, &mut v, spec)?;
    }
    Ok((v, report))
}
