//! Matrix-free coarse-error and residual propagation operators and the norm
//! constants that bound how an inexact coarse solve perturbs a V-cycle.
//!
//! - `S = (I - N_J A_J) P_J ··· (I - N_1 A_1) P_1` maps a coarsest-level solve
//!   error to the change it causes on the finest level.
//! - `T = P_1ᵀ (I - A_1 M_1) ··· P_Jᵀ (I - A_J M_J)` maps the finest residual to
//!   the coarsest right-hand side.
//!
//! `M_j` and `N_j` are the pre- and post-smoothers; a smoother is applied to a
//! homogeneous system to realize its error propagation.

use crate::error::{Error, Result};
use crate::linalg::{dot, power_method_largest, sub, EigenEstimate, PowerOptions, SparseMatrix};
use crate::multigrid::{smooth_apply, vcycle, ExactCoarseSolver, Hierarchy, SmootherSpec};

fn check_len(what: &str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what}: expected length {expected}, got {got}"
        )))
    }
}

/// `v - M A v` per sweep.
fn error_propagation(
    a: &SparseMatrix,
    spec: Option<&SmootherSpec>,
    v: Vec<f64>,
) -> Result<Vec<f64>> {
    match spec {
        Some(s) => smooth_apply(a, &vec![0.0; v.len()], &v, s),
        None => Ok(v),
    }
}

/// `r - A M r` per sweep, the transpose of [`error_propagation`] for symmetric `M`.
fn residual_propagation(
    a: &SparseMatrix,
    spec: Option<&SmootherSpec>,
    mut r: Vec<f64>,
) -> Result<Vec<f64>> {
    if let Some(s) = spec {
        if !s.is_symmetric() {
            return Err(Error::NotSelfAdjoint(
                "residual propagation needs a symmetric smoother".into(),
            ));
        }
        let single = SmootherSpec { sweeps: 1, ..*s };
        let zero = vec![0.0; r.len()];
        for _ in 0..s.sweeps {
            let mr = smooth_apply(a, &r, &zero, &single)?;
            let amr = a.spmv(&mr)?;
            r.iter_mut().zip(&amr).for_each(|(x, y)| *x -= y);
        }
    }
    Ok(r)
}

/// `S w` for a coarsest-level vector `w`.
pub fn apply_s(h: &Hierarchy, w: &[f64]) -> Result<Vec<f64>> {
    check_len("coarse vector", w.len(), h.dim(0))?;
    let mut v = w.to_vec();
    for j in 1..h.num_levels() {
        v = h.prolongation(j).spmv(&v)?;
        v = error_propagation(h.matrix(j), h.post_smoother(j), v)?;
    }
    Ok(v)
}

/// `Sᵀ y` for a finest-level vector `y`.
pub fn apply_s_transpose(h: &Hierarchy, y: &[f64]) -> Result<Vec<f64>> {
    check_len("finest vector", y.len(), h.dim(h.finest_level()))?;
    let mut v = y.to_vec();
    for j in (1..h.num_levels()).rev() {
        v = residual_propagation(h.matrix(j), h.post_smoother(j), v)?;
        v = h.prolongation(j).spmv_transpose(&v)?;
    }
    Ok(v)
}

/// `T r` for a finest-level residual `r`.
pub fn apply_t(h: &Hierarchy, r: &[f64]) -> Result<Vec<f64>> {
    check_len("finest vector", r.len(), h.dim(h.finest_level()))?;
    let mut v = r.to_vec();
    for j in (1..h.num_levels()).rev() {
        v = residual_propagation(h.matrix(j), h.pre_smoother(j), v)?;
        v = h.prolongation(j).spmv_transpose(&v)?;
    }
    Ok(v)
}

/// `Tᵀ c` for a coarsest-level vector `c`.
pub fn apply_t_transpose(h: &Hierarchy, c: &[f64]) -> Result<Vec<f64>> {
    check_len("coarse vector", c.len(), h.dim(0))?;
    let mut v = c.to_vec();
    for j in 1..h.num_levels() {
        v = h.prolongation(j).spmv(&v)?;
        v = error_propagation(h.matrix(j), h.pre_smoother(j), v)?;
    }
    Ok(v)
}

/// `E x = x - V(b = A x, 0)`, the error propagation of one exact V-cycle.
pub fn apply_e(h: &Hierarchy, x: &[f64]) -> Result<Vec<f64>> {
    let a = h.finest_matrix();
    check_len("finest vector", x.len(), a.nrows())?;
    let b = a.spmv(x)?;
    let zero = vec![0.0; x.len()];
    let (v, _) = vcycle(h, &b, &zero, h.finest_level(), &ExactCoarseSolver, None)?;
    Ok(sub(x, &v))
}

fn sqrt_estimate(e: EigenEstimate) -> EigenEstimate {
    EigenEstimate {
        value: e.value.max(0.0).sqrt(),
        ..e
    }
}

fn probe(dim: usize, seed: u64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// `‖E‖_A`, by power iteration in the `A`-inner product.
///
/// Only defined for cycles with equal symmetric pre- and post-smoothers,
/// which make `E` self-adjoint and nonnegative in that inner product; this is
/// also spot-checked on two probe pairs.
pub fn estimate_e_norm(h: &Hierarchy, opts: &PowerOptions) -> Result<EigenEstimate> {
    if !h.has_symmetric_cycle() {
        return Err(Error::NotSelfAdjoint(
            "error propagation norm needs identical symmetric pre- and post-smoothers".into(),
        ));
    }
    let a = h.finest_matrix();
    let n = a.nrows();
    let inner = |x: &[f64], y: &[f64]| dot(&a.spmv(x).expect("square finest matrix"), y);
    for k in 0..2 {
        let x = probe(n, opts.seed ^ (0xa11ce + 2 * k));
        let y = probe(n, opts.seed ^ (0xa11ce + 2 * k + 1));
        let lhs = inner(&apply_e(h, &x)?, &y);
        let rhs = inner(&x, &apply_e(h, &y)?);
        let scale = (inner(&x, &x) * inner(&y, &y)).sqrt();
        if (lhs - rhs).abs() > 1e-8 * scale {
            return Err(Error::NotSelfAdjoint(format!(
                "<Ex,y>_A - <x,Ey>_A = {:.3e} relative; check the smoother configuration",
                (lhs - rhs).abs() / scale
            )));
        }
    }
    power_method_largest(|x| apply_e(h, x), inner, n, opts)
}

/// `‖S‖_{A₀,A} = max ‖S v‖_A / ‖v‖_{A₀}`, as the square root of the largest
/// eigenvalue of `A₀⁻¹ Sᵀ A S`, which is self-adjoint in the `A₀`-inner product.
pub fn estimate_s_norm(h: &Hierarchy, opts: &PowerOptions) -> Result<EigenEstimate> {
    let a = h.finest_matrix();
    let a0 = h.coarse_matrix();
    let op = |v: &[f64]| -> Result<Vec<f64>> {
        let sv = apply_s(h, v)?;
        let y = apply_s_transpose(h, &a.spmv(&sv)?)?;
        h.coarse_factor().solve(&y)
    };
    let inner = |x: &[f64], y: &[f64]| dot(&a0.spmv(x).expect("square coarse matrix"), y);
    power_method_largest(op, inner, h.dim(0), opts).map(sqrt_estimate)
}

/// Euclidean `‖T‖`, from the largest eigenvalue of `Tᵀ T`.
pub fn estimate_t_norm(h: &Hierarchy, opts: &PowerOptions) -> Result<EigenEstimate> {
    let op = |r: &[f64]| apply_t_transpose(h, &apply_t(h, r)?);
    power_method_largest(op, dot, h.dim(h.finest_level()), opts).map(sqrt_estimate)
}

/// Euclidean `‖A‖` of the finest matrix.
pub fn estimate_a_norm(h: &Hierarchy, opts: &PowerOptions) -> Result<EigenEstimate> {
    let a = h.finest_matrix();
    power_method_largest(|x| a.spmv(x), dot, a.nrows(), opts)
}

/// Euclidean `‖A₀⁻¹‖`.
pub fn estimate_a0_inv_norm(h: &Hierarchy, opts: &PowerOptions) -> Result<EigenEstimate> {
    power_method_largest(|x| h.coarse_factor().solve(x), dot, h.dim(0), opts)
}

/// Which smoother of a level to measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherSide {
    Pre,
    Post,
}

/// `‖I_j - M_j A_j‖_{A_j}` for the chosen smoother on level `level ≥ 1`;
/// 1 when that smoother is disabled.
pub fn smoother_contraction(
    h: &Hierarchy,
    level: usize,
    side: SmootherSide,
    opts: &PowerOptions,
) -> Result<EigenEstimate> {
    if level == 0 || level > h.finest_level() {
        return Err(Error::InvalidParameter(format!(
            "no smoother on level {level}"
        )));
    }
    let spec = match side {
        SmootherSide::Pre => h.pre_smoother(level),
        SmootherSide::Post => h.post_smoother(level),
    };
    let Some(spec) = spec.copied() else {
        return Ok(EigenEstimate {
            value: 1.0,
            iterations: 0,
            converged: true,
            residual: 0.0,
        });
    };
    if !spec.is_symmetric() {
        return Err(Error::NotSelfAdjoint(
            "smoother contraction needs a symmetric smoother".into(),
        ));
    }
    let a = h.matrix(level);
    let zero = vec![0.0; a.nrows()];
    // (I - MA) is self-adjoint and nonnegative in the A-inner product for SGS.
    let op = |v: &[f64]| smooth_apply(a, &zero, v, &spec);
    let inner = |x: &[f64], y: &[f64]| dot(&a.spmv(x).expect("square matrix"), y);
    power_method_largest(op, inner, a.nrows(), opts)
}

/// The constants the perturbation analysis consumes. Each is estimated on
/// demand, so a run only pays for what it uses.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NormConstants {
    pub e_anorm: Option<EigenEstimate>,
    pub s_norm: Option<EigenEstimate>,
    pub t_norm: Option<EigenEstimate>,
    pub a_norm: Option<EigenEstimate>,
    pub a0_inv_norm: Option<EigenEstimate>,
    /// Lower bound `μ` on `λ_min(A₀)` used by the coarse error bounds.
    pub mu: Option<f64>,
}

impl NormConstants {
    pub fn all(h: &Hierarchy, opts: &PowerOptions) -> Result<Self> {
        Ok(Self {
            e_anorm: Some(estimate_e_norm(h, opts)?),
            s_norm: Some(estimate_s_norm(h, opts)?),
            t_norm: Some(estimate_t_norm(h, opts)?),
            a_norm: Some(estimate_a_norm(h, opts)?),
            a0_inv_norm: Some(estimate_a0_inv_norm(h, opts)?),
            mu: None,
        })
    }

    /// `name=value (iterations=…, converged=…)` lines for CSV headers.
    pub fn header_lines(&self) -> Vec<String> {
        let named = [
            ("E_anorm", self.e_anorm),
            ("S_norm", self.s_norm),
            ("T_norm", self.t_norm),
            ("A_norm", self.a_norm),
            ("A0_inv_norm", self.a0_inv_norm),
        ];
        let mut out: Vec<String> = named
            .iter()
            .filter_map(|(name, e)| {
                e.map(|e| {
                    format!(
                        "{name}={:e} (power iterations={}, converged={}, rel_change={:e})",
                        e.value, e.iterations, e.converged, e.residual
                    )
                })
            })
            .collect();
        if let Some(mu) = self.mu {
            out.push(format!("mu={mu:e}"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_hierarchy, Coefficient, ProblemSpec};
    use crate::linalg::DEFAULT_DIRECT_CAP;

    #[test]
    fn single_level_has_no_propagation() {
        let mp = build_hierarchy(
            ProblemSpec::new(Coefficient::poisson(), 1, 4).unwrap(),
            Some(SmootherSpec::default()),
            DEFAULT_DIRECT_CAP,
        )
        .unwrap();
        let w = probe(9, 3);
        assert_eq!(apply_s(&mp.hierarchy, &w).unwrap(), w);
        assert_eq!(apply_t(&mp.hierarchy, &w).unwrap(), w);
        let e = estimate_e_norm(&mp.hierarchy, &PowerOptions::default()).unwrap();
        assert!(e.value < 1e-12, "{e:?}");
    }

    #[test]
    fn header_lists_present_constants_only() {
        let c = NormConstants {
            e_anorm: Some(EigenEstimate {
                value: 0.15,
                iterations: 12,
                converged: true,
                residual: 1e-7,
            }),
            mu: Some(2.0),
            ..Default::default()
        };
        let lines = c.header_lines();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("E_anorm=1.5e-1 "));
        assert_eq!(lines[1], "mu=2e0");
    }
}
