use crate::error::{Error, Result};
use crate::linalg::{lambda_min_spd, DenseCholesky, PowerOptions, SparseMatrix};

/// Safety factor applied to an estimated smallest eigenvalue before it is used
/// as a lower bound.
pub const MU_SAFETY: f64 = 1e-3;

/// `‖A₀⁻¹‖^{1/2}·‖r‖ = ‖r‖ / sqrt(λ_lb)`, an upper bound on `‖e‖_{A₀}`
/// whenever `λ_lb ≤ λ_min(A₀)`.
pub fn residual_bound(r_norm: f64, lambda_min_lb: f64) -> Result<f64> {
    if !(lambda_min_lb > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalue lower bound must be positive, got {lambda_min_lb}"
        )));
    }
    Ok(r_norm / lambda_min_lb.sqrt())
}

/// Gauss-Radau upper bound on the CG error in the `A`-norm, with the
/// prescribed node `mu ≤ λ_min(A)`.
///
/// The coefficient starts at `1/μ` and after each CG step with step length
/// `γ_k` and `δ_{k+1} = ‖r_{k+1}‖²/‖r_k‖²` becomes
/// `(c - γ_k) / (μ (c - γ_k) + δ_{k+1})`; the bound is `sqrt(c ‖r_k‖²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussRadauBound {
    mu: f64,
    coefficient: f64,
}

impl GaussRadauBound {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Radau node must be positive, got {mu}"
            )));
        }
        Ok(Self {
            mu,
            coefficient: mu.recip(),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Advances the coefficient by one CG step.
    pub fn update(&mut self, step_length: f64, delta: f64) {
        let d = self.coefficient - step_length;
        self.coefficient = d / (self.mu * d + delta);
    }

    /// Bound for the current iterate, whose residual has squared norm `rr`.
    /// Clamped at zero once roundoff makes the coefficient negative.
    pub fn bound(&self, rr: f64) -> f64 {
        (self.coefficient * rr).max(0.0).sqrt()
    }
}

/// `γ = τ ‖T‖ ‖A‖^{1/2} ‖A₀⁻¹‖^{1/2}`: the relative-error factor implied by a
/// relative residual tolerance `τ` on the coarsest level.
pub fn gamma_from_tau(tau: f64, t_norm: f64, a_norm: f64, a0_inv_norm: f64) -> f64 {
    tau * t_norm * a_norm.sqrt() * a0_inv_norm.sqrt()
}

/// Inverse of [`gamma_from_tau`]: the `τ` giving relative-error factor `gamma`.
pub fn tau_for_gamma(gamma: f64, t_norm: f64, a_norm: f64, a0_inv_norm: f64) -> f64 {
    gamma / (t_norm * a_norm.sqrt() * a0_inv_norm.sqrt())
}

/// `ε = (1 - α) θ` for an assumed contraction `‖E‖_A ≤ α < 1`.
pub fn epsilon_policy(theta: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "assumed contraction factor must lie in (0, 1), got {alpha}"
        )));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "θ must be positive, got {theta}"
        )));
    }
    Ok((1.0 - alpha) * theta)
}

/// `μ = (1 - 10⁻³)·λ_min(A₀)` with `λ_min` from inverse power iteration.
pub fn estimate_mu(a0: &SparseMatrix, factor: &DenseCholesky, opts: &PowerOptions) -> Result<f64> {
    let est = lambda_min_spd(a0, factor, opts)?;
    Ok((1.0 - MU_SAFETY) * est.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_bound_cases() {
        assert_eq!(residual_bound(5.0, 1.0).unwrap(), 5.0);
        // diag(1,100), e=(0,1): ‖e‖_A = 10, r = (0,100)
        let b = residual_bound(100.0, 1.0).unwrap();
        assert!(b >= 10.0 && b == 100.0);
        let halved = residual_bound(3.0, 0.5).unwrap();
        assert!((halved / 3.0 - 2f64.sqrt()).abs() < 1e-15);
        assert!(residual_bound(1.0, 0.0).is_err());
    }

    #[test]
    fn gauss_radau_exact_for_single_eigenvalue() {
        // A = (λ), e₀ = 1: r₀ = λ, ‖e₀‖_A = sqrt(λ)
        let lambda: f64 = 7.0;
        let gr = GaussRadauBound::new(lambda).unwrap();
        assert!((gr.bound(lambda * lambda) - lambda.sqrt()).abs() < 1e-15);
        assert!(GaussRadauBound::new(0.0).is_err());
    }

    #[test]
    fn tau_gamma_mapping() {
        assert_eq!(gamma_from_tau(1.0, 1.0, 1.0, 1.0), 1.0);
        let (t, a, ai) = (1.7, 8.0, 35.0);
        let tau = tau_for_gamma(1e-4, t, a, ai);
        assert!((gamma_from_tau(tau, t, a, ai) - 1e-4).abs() < 1e-18);
        assert!((gamma_from_tau(2.0 * tau, t, a, ai) - 2e-4).abs() < 1e-18);
    }

    #[test]
    fn epsilon_policy_cases() {
        assert!((epsilon_policy(1e-4, 2.0 / 3.0).unwrap() - 1e-4 / 3.0).abs() < 1e-19);
        assert!((epsilon_policy(1e-11, 0.5).unwrap() - 5e-12).abs() < 1e-26);
        assert!((epsilon_policy(1.0, 1e-12).unwrap() - 1.0).abs() < 1e-11);
        assert!(epsilon_policy(1.0, 1.0).is_err());
        assert!(epsilon_policy(1.0, 1.5).is_err());
    }
}
