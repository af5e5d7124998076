//! Sparse and dense kernels plus the spectral estimators the analysis relies on.

mod cholesky;
mod eigen;
pub mod matrix_market;
mod sparse;

pub use cholesky::{DenseCholesky, DEFAULT_DIRECT_CAP};
pub use eigen::{lambda_min_spd, power_method_largest, EigenEstimate, PowerOptions};
pub use sparse::SparseMatrix;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}
