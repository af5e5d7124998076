//! Conjugate gradients for the coarsest level, its error bounds and stopping rules.

mod bounds;
mod cg;

pub use bounds::{
    epsilon_policy, estimate_mu, gamma_from_tau, residual_bound, tau_for_gamma, GaussRadauBound,
    MU_SAFETY,
};
pub use cg::{cg_solve, CgCoarseSolver, CgOptions, CgOutcome, CgStep, Estimator, StopRule};
