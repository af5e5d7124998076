use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, DenseCholesky, SparseMatrix};
use crate::error::{Error, Result};

/// Result of a power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Relative change of the estimate at termination.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct PowerOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 5000,
            seed: 0x5eed,
        }
    }
}

const MAX_RESTARTS: u64 = 3;

/// Relative changes this small are roundoff noise, not progress.
const ROUNDOFF_CHANGE: f64 = 64.0 * f64::EPSILON;

/// Largest eigenvalue of an operator that is self-adjoint and positive
/// semidefinite with respect to `inner`.
///
/// The estimate is the Rayleigh quotient `<v, Av> / <v, v>`; iteration stops
/// once both its relative change and the geometrically extrapolated remaining
/// change drop below `opts.tol`. A seeded random start
/// vector makes runs reproducible.
pub fn power_method_largest<F, G>(
    mut op: F,
    inner: G,
    dim: usize,
    opts: &PowerOptions,
) -> Result<EigenEstimate>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
    G: Fn(&[f64], &[f64]) -> f64,
{
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "power iteration on an empty space".into(),
        ));
    }
    let mut zero_images = 0;
    for attempt in 0..=MAX_RESTARTS {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(attempt));
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nv = inner(&v, &v);
        if !(nv > 0.0) {
            continue;
        }
        let s = nv.sqrt().recip();
        v.iter_mut().for_each(|x| *x *= s);

        let mut w = op(&v)?;
        let mut rho = inner(&v, &w);
        let mut nw = inner(&w, &w);
        if nw == 0.0 {
            // v lies in the kernel; either the operator vanishes or the start was unlucky.
            zero_images += 1;
            continue;
        }
        let mut change = f64::INFINITY;
        for it in 1..=opts.max_iter {
            let s = nw.sqrt().recip();
            v.iter_mut().zip(&w).for_each(|(x, y)| *x = y * s);
            w = op(&v)?;
            let next = inner(&v, &w);
            let prev_change = change;
            change = (next - rho).abs() / next.abs().max(f64::MIN_POSITIVE);
            rho = next;
            nw = inner(&w, &w);
            // The Rayleigh quotient converges geometrically; with ratio q the
            // distance still to go is about change·q/(1-q), which for slow
            // convergence is much larger than the last change.
            let q = change / prev_change;
            let remaining = if change <= ROUNDOFF_CHANGE {
                0.0
            } else if q < 1.0 {
                change * q / (1.0 - q)
            } else {
                f64::INFINITY
            };
            if (change <= opts.tol && remaining <= opts.tol) || nw == 0.0 {
                return Ok(EigenEstimate {
                    value: rho.max(0.0),
                    iterations: it,
                    converged: true,
                    residual: change,
                });
            }
        }
        return Ok(EigenEstimate {
            value: rho.max(0.0),
            iterations: opts.max_iter,
            converged: false,
            residual: change,
        });
    }
    if zero_images > 0 {
        return Ok(EigenEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
            residual: 0.0,
        });
    }
    Err(Error::PowerIteration(format!(
        "degenerate start vector after {MAX_RESTARTS} restarts"
    )))
}

/// Smallest eigenvalue of SPD `a` by inverse power iteration with its factor.
pub fn lambda_min_spd(
    a: &SparseMatrix,
    factor: &DenseCholesky,
    opts: &PowerOptions,
) -> Result<EigenEstimate> {
    if factor.dim() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "factor of dimension {} for matrix of dimension {}",
            factor.dim(),
            a.nrows()
        )));
    }
    let inv = power_method_largest(|v| factor.solve(v), dot, a.nrows(), opts)?;
    if !(inv.value > 0.0) {
        return Err(Error::PowerIteration(
            "inverse operator has no positive eigenvalue".into(),
        ));
    }
    Ok(EigenEstimate {
        value: inv.value.recip(),
        ..inv
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_DIRECT_CAP;

    fn diag_op(d: Vec<f64>) -> impl FnMut(&[f64]) -> Result<Vec<f64>> {
        move |v: &[f64]| Ok(v.iter().zip(&d).map(|(x, s)| x * s).collect())
    }

    #[test]
    fn diagonal_operator() {
        let opts = PowerOptions::default();
        let est = power_method_largest(diag_op(vec![1.0, 2.0, 3.0]), dot, 3, &opts).unwrap();
        assert!(est.converged);
        assert!((est.value - 3.0).abs() <= 1e-5 * 3.0);
    }

    #[test]
    fn identity_and_zero() {
        let opts = PowerOptions::default();
        let id = power_method_largest(|v| Ok(v.to_vec()), dot, 4, &opts).unwrap();
        assert!((id.value - 1.0).abs() < 1e-14 && id.converged);
        let zero = power_method_largest(|v| Ok(vec![0.0; v.len()]), dot, 4, &opts).unwrap();
        assert_eq!(zero.value, 0.0);
        assert!(zero.converged);
    }

    #[test]
    fn rayleigh_sequence_nondecreasing() {
        let d: Vec<f64> = (1..=30).map(|i| (i as f64).sqrt()).collect();
        let mut seen = Vec::new();
        let mut op = diag_op(d);
        let opts = PowerOptions {
            tol: 1e-12,
            ..Default::default()
        };
        power_method_largest(
            |v| {
                let w = op(v)?;
                seen.push(dot(v, &w) / dot(v, v));
                Ok(w)
            },
            dot,
            30,
            &opts,
        )
        .unwrap();
        for w in seen.windows(2) {
            assert!(w[1] >= w[0] * (1.0 - 1e-14));
        }
    }

    #[test]
    fn random_diagonals_recover_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..20 {
            let n = rng.gen_range(2..40);
            let d: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..10.0)).collect();
            let max = d.iter().cloned().fold(0.0, f64::max);
            let opts = PowerOptions {
                seed: case,
                ..Default::default()
            };
            let est = power_method_largest(diag_op(d), dot, n, &opts).unwrap();
            // Rayleigh quotient error is second order; a converged run is within a few tol.
            assert!(est.value <= max * (1.0 + 1e-12));
            assert!(
                est.value >= max * (1.0 - 1e-3),
                "case {case}: {} vs {max}",
                est.value
            );
        }
    }

    #[test]
    fn smallest_eigenvalues() {
        let opts = PowerOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let a = SparseMatrix::diag(&[2.0, 5.0]);
        let f = DenseCholesky::factor(&a, DEFAULT_DIRECT_CAP).unwrap();
        assert!((lambda_min_spd(&a, &f, &opts).unwrap().value - 2.0).abs() < 1e-8);

        let id = SparseMatrix::identity(3);
        let f = DenseCholesky::factor(&id, DEFAULT_DIRECT_CAP).unwrap();
        assert!((lambda_min_spd(&id, &f, &opts).unwrap().value - 1.0).abs() < 1e-14);

        let n = 10;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let lap = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let f = DenseCholesky::factor(&lap, DEFAULT_DIRECT_CAP).unwrap();
        let exact = 4.0 * (std::f64::consts::PI / 22.0).sin().powi(2);
        let est = lambda_min_spd(&lap, &f, &opts).unwrap();
        assert!(
            (est.value - exact).abs() <= 1e-8 * exact,
            "{} vs {exact}",
            est.value
        );
    }
}
