use log::debug;

use super::{residual_bound, GaussRadauBound};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, sub, SparseMatrix};
use crate::multigrid::{BoundComparison, CoarseProblem, CoarseSolveReport, CoarseSolver};

/// Which error bound an `η`-based rule evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Estimator {
    /// `‖r‖ / sqrt(μ)`.
    Residual,
    /// Gauss-Radau quadrature bound with node `μ`.
    GaussRadau,
}

/// When a coarsest-level CG solve stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// `‖f₀ - A₀v‖ ≤ τ ‖f₀‖`.
    RelResidual(f64),
    /// `‖v₀ - v‖_{A₀} ≤ γ ‖x - x^prev‖_A`; needs the exact coarse solution
    /// and the finest error of the previous iterate.
    RelErrorOracle(f64),
    /// `‖v₀ - v‖_{A₀} ≤ ε`; needs the exact coarse solution.
    AbsErrorOracle(f64),
    /// `η(v) ≤ ε` with a computable bound `η`.
    AbsEta { eps: f64, estimator: Estimator },
    /// A fixed number of iterations.
    MaxIter(usize),
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        let p = match *self {
            Self::RelResidual(p) | Self::RelErrorOracle(p) | Self::AbsErrorOracle(p) => p,
            Self::AbsEta { eps, .. } => eps,
            Self::MaxIter(_) => return Ok(()),
        };
        if p > 0.0 && p.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "stopping tolerance must be positive, got {p}"
            )))
        }
    }

    pub fn needs_oracle(&self) -> bool {
        matches!(self, Self::RelErrorOracle(_) | Self::AbsErrorOracle(_))
    }

    pub fn estimator(&self) -> Option<Estimator> {
        match *self {
            Self::AbsEta { estimator, .. } => Some(estimator),
            _ => None,
        }
    }
}

/// Everything a CG solve may consult besides the system itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct CgOptions<'a> {
    /// Lower bound on `λ_min(A)` used by both error bounds.
    pub mu: Option<f64>,
    /// Exact solution, for oracle rules and error reporting.
    pub oracle: Option<&'a [f64]>,
    /// `‖x - x^prev‖_A` on the finest level, for the relative oracle rule.
    pub finest_err_anorm: Option<f64>,
    /// Iteration cap; defaults to `10·dim`.
    pub max_iter: Option<usize>,
    /// Keep one [`CgStep`] per evaluated iterate.
    pub record_history: bool,
    /// Tally whether Gauss-Radau beats the residual bound (needs `mu`).
    pub compare_bounds: bool,
}

/// Quantities at one CG iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStep {
    pub iteration: usize,
    pub residual_norm: f64,
    pub eta_residual: Option<f64>,
    pub eta_gauss_radau: Option<f64>,
    pub error_anorm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub report: CoarseSolveReport,
    pub history: Vec<CgStep>,
}

const DRIFT_CHECK_EVERY: usize = 50;

/// Conjugate gradients on SPD `a` from `x_start`, stopped by `stop`.
///
/// The rule is checked before the first step as well, so a start that
/// already satisfies it costs no iterations.
pub fn cg_solve(
    a: &SparseMatrix,
    f: &[f64],
    x_start: &[f64],
    stop: StopRule,
    opts: &CgOptions<'_>,
) -> Result<CgOutcome> {
    stop.validate()?;
    let n = a.nrows();
    if !a.is_square() || f.len() != n || x_start.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "CG on {}x{} with |f|={} |x|={}",
            a.nrows(),
            a.ncols(),
            f.len(),
            x_start.len()
        )));
    }
    if let Some(o) = opts.oracle {
        if o.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "oracle has length {}, expected {n}",
                o.len()
            )));
        }
    }
    if stop.needs_oracle() && opts.oracle.is_none() {
        return Err(Error::Missing(
            "oracle stopping rule without an exact solution".into(),
        ));
    }
    if matches!(stop, StopRule::RelErrorOracle(_)) && opts.finest_err_anorm.is_none() {
        return Err(Error::Missing(
            "relative error rule without the previous finest-level error".into(),
        ));
    }
    let needs_mu = stop.estimator().is_some() || opts.compare_bounds;
    if needs_mu && opts.mu.is_none() {
        return Err(Error::Missing(
            "error bound requested without an eigenvalue lower bound".into(),
        ));
    }
    let mut gr = opts.mu.map(GaussRadauBound::new).transpose()?;
    let cap = opts.max_iter.unwrap_or(10 * n.max(1));

    let f_norm = norm2(f);
    let mut x = x_start.to_vec();
    let mut r = a.residual(f, &x)?;
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut q = vec![0.0; n];

    let mut history = Vec::new();
    let mut comparison = BoundComparison::default();
    let mut k = 0;
    let (converged, eta) = loop {
        let r_norm = rr.sqrt();
        let eta_res = opts.mu.map(|mu| residual_bound(r_norm, mu)).transpose()?;
        let eta_gr = gr.map(|g| g.bound(rr));
        let err = opts.oracle.map(|o| a.a_norm(&sub(o, &x))).transpose()?;
        if opts.record_history {
            history.push(CgStep {
                iteration: k,
                residual_norm: r_norm,
                eta_residual: eta_res,
                eta_gauss_radau: eta_gr,
                error_anorm: err,
            });
        }
        if opts.compare_bounds && k > 0 {
            comparison.iterations += 1;
            if eta_gr <= eta_res {
                comparison.gauss_radau_sharper += 1;
            }
        }
        let eta = match stop.estimator() {
            Some(Estimator::Residual) => eta_res,
            Some(Estimator::GaussRadau) => eta_gr,
            None => None,
        };
        let done = match stop {
            StopRule::RelResidual(tau) => r_norm <= tau * f_norm,
            StopRule::RelErrorOracle(gamma) => {
                err.expect("oracle checked") <= gamma * opts.finest_err_anorm.expect("checked")
            }
            StopRule::AbsErrorOracle(eps) => err.expect("oracle checked") <= eps,
            StopRule::AbsEta { eps, .. } => eta.expect("mu checked") <= eps,
            StopRule::MaxIter(limit) => k >= limit,
        };
        if done || rr == 0.0 {
            break (true, eta);
        }
        if k >= cap {
            break (false, eta);
        }

        a.spmv_into(&p, &mut q)?;
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            return Err(Error::NotSpd(format!(
                "CG curvature {pq:e} at iteration {k}"
            )));
        }
        let step = rr / pq;
        axpy(step, &p, &mut x);
        axpy(-step, &q, &mut r);
        let rr_next = dot(&r, &r);
        let delta = rr_next / rr;
        if let Some(g) = gr.as_mut() {
            g.update(step, delta);
        }
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + delta * *pi;
        }
        rr = rr_next;
        k += 1;

        if k % DRIFT_CHECK_EVERY == 0 && f_norm > 0.0 {
            let true_r = a.residual(f, &x)?;
            let drift = norm2(&sub(&true_r, &r)) / f_norm;
            if drift > 1e-10 {
                debug!("CG residual drift {drift:.2e} at iteration {k}");
            }
        }
    };

    let report = CoarseSolveReport {
        iterations: k,
        final_bound_eta: eta,
        oracle_error_a0norm: opts.oracle.map(|o| a.a_norm(&sub(o, &x))).transpose()?,
        residual_norm: norm2(&a.residual(f, &x)?),
        converged,
        bound_comparison: opts.compare_bounds.then_some(comparison),
    };
    Ok(CgOutcome {
        solution: x,
        report,
        history,
    })
}

/// CG from a zero start on the coarsest level, as a V-cycle coarse solver.
#[derive(Debug, Clone, Copy)]
pub struct CgCoarseSolver {
    pub rule: StopRule,
    /// `μ ≤ λ_min(A₀)`, required for `η`-based rules and bound comparison.
    pub mu: Option<f64>,
    /// Report `‖v₀ - v₀,in‖_{A₀}` even when the rule does not need it.
    pub report_oracle_error: bool,
    pub compare_bounds: bool,
}

impl CgCoarseSolver {
    pub fn new(rule: StopRule) -> Self {
        Self {
            rule,
            mu: None,
            report_oracle_error: true,
            compare_bounds: false,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn comparing_bounds(mut self) -> Self {
        self.compare_bounds = true;
        self
    }
}

impl CoarseSolver for CgCoarseSolver {
    fn solve(&self, problem: &CoarseProblem<'_>) -> Result<(Vec<f64>, CoarseSolveReport)> {
        let exact = if self.rule.needs_oracle() || self.report_oracle_error {
            Some(problem.factor.solve(problem.rhs)?)
        } else {
            None
        };
        let opts = CgOptions {
            mu: self.mu,
            oracle: exact.as_deref(),
            finest_err_anorm: problem.finest_err_anorm,
            max_iter: None,
            record_history: false,
            compare_bounds: self.compare_bounds,
        };
        let zero = vec![0.0; problem.rhs.len()];
        let out = cg_solve(problem.matrix, problem.rhs, &zero, self.rule, &opts)?;
        Ok((out.solution, out.report))
    }
}
