use super::SparseMatrix;
use crate::error::{Error, Result};

/// Default dimension cap for the direct coarsest-level factorization.
pub const DEFAULT_DIRECT_CAP: usize = 20_000;

/// Cholesky factor `A = L Lᵀ` of a symmetric positive definite matrix.
///
/// `L` is stored row by row, densely from the first structurally nonzero
/// column of each row up to the diagonal. Cholesky fill never leaves this
/// envelope, so this is the dense factorization with the leading zeros of
/// each row skipped.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    dim: usize,
    first_col: Vec<usize>,
    row_start: Vec<usize>,
    data: Vec<f64>,
}

impl DenseCholesky {
    /// Factors the lower triangle of `a`.
    pub fn factor(a: &SparseMatrix, cap: usize) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        if n > cap {
            return Err(Error::CoarseTooLarge { dim: n, cap });
        }

        let first_col: Vec<usize> = (0..n)
            .map(|i| {
                let (cols, vals) = a.row(i);
                cols.iter()
                    .zip(vals)
                    .find(|(&c, &v)| c <= i && v != 0.0)
                    .map_or(i, |(&c, _)| c)
            })
            .collect();
        let mut row_start = Vec::with_capacity(n + 1);
        row_start.push(0);
        for i in 0..n {
            row_start.push(row_start[i] + (i - first_col[i] + 1));
        }
        let mut data = vec![0.0; row_start[n]];

        for i in 0..n {
            let (cols, vals) = a.row(i);
            let base = row_start[i] - first_col[i];
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i && c >= first_col[i] {
                    data[base + c] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first_col[i];
            let base_i = row_start[i] - fi;
            for j in fi..=i {
                let fj = first_col[j];
                let base_j = row_start[j] - fj;
                let k0 = fi.max(fj);
                let mut s = data[base_i + j];
                s -= data[base_i + k0..base_i + j]
                    .iter()
                    .zip(&data[base_j + k0..base_j + j])
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
                if j < i {
                    data[base_i + j] = s / data[base_j + j];
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotSpd(format!(
                            "non-positive pivot {s:e} at row {i}"
                        )));
                    }
                    data[base_i + i] = s.sqrt();
                }
            }
        }

        Ok(Self {
            dim: n,
            first_col,
            row_start,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.row_start[i]..self.row_start[i + 1]]
    }

    /// Solves `L Lᵀ v = f`.
    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "Cholesky solve: expected {}, got {}",
                self.dim,
                f.len()
            )));
        }
        let mut y = f.to_vec();
        for i in 0..self.dim {
            let fi = self.first_col[i];
            let row = self.row(i);
            let s: f64 = row[..i - fi]
                .iter()
                .zip(&y[fi..i])
                .map(|(l, v)| l * v)
                .sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..self.dim).rev() {
            let fi = self.first_col[i];
            let row = self.row(i);
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        Ok(y)
    }

    /// The lower factor as a dense row-major `dim x dim` array.
    pub fn lower_factor(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let fi = self.first_col[i];
            out[i * n + fi..i * n + i + 1].copy_from_slice(self.row(i));
        }
        out
    }

    pub fn stored_entries(&self) -> usize {
        self.data.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_solve() {
        let f =
            DenseCholesky::factor(&SparseMatrix::diag(&[4.0, 9.0]), DEFAULT_DIRECT_CAP).unwrap();
        assert_eq!(f.solve(&[4.0, 9.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn two_by_two_inverse() {
        let a = SparseMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let v = DenseCholesky::factor(&a, 10)
            .unwrap()
            .solve(&[1.0, 0.0])
            .unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((v[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_pivot_is_not_spd() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(matches!(
            DenseCholesky::factor(&a, 10),
            Err(Error::NotSpd(_))
        ));
        let b = SparseMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            DenseCholesky::factor(&b, 10),
            Err(Error::NotSpd(_))
        ));
    }

    #[test]
    fn cap_enforced() {
        let err = DenseCholesky::factor(&SparseMatrix::identity(5), 4).unwrap_err();
        assert!(matches!(err, Error::CoarseTooLarge { dim: 5, cap: 4 }));
    }

    #[test]
    fn reconstructs_banded_spd() {
        // 2D 5-point Laplacian on a 6x6 grid: envelope storage must still give L Lᵀ = A.
        let m = 6;
        let n = m * m;
        let mut t = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let k = j * m + i;
                t.push((k, k, 4.0));
                if i > 0 {
                    t.push((k, k - 1, -1.0));
                }
                if i + 1 < m {
                    t.push((k, k + 1, -1.0));
                }
                if j > 0 {
                    t.push((k, k - m, -1.0));
                }
                if j + 1 < m {
                    t.push((k, k + m, -1.0));
                }
            }
        }
        let a = SparseMatrix::from_triplets(n, n, &t).unwrap();
        let f = DenseCholesky::factor(&a, 100).unwrap();
        assert!(f.stored_entries() < n * (n + 1) / 2);
        let l = f.lower_factor();
        let dense = a.to_dense();
        let mut err = 0.0f64;
        for i in 0..n {
            assert!(l[i * n + i] > 0.0);
            for j in 0..n {
                let s: f64 = (0..n).map(|k| l[i * n + k] * l[j * n + k]).sum();
                err = err.max((s - dense[i][j]).abs());
            }
        }
        assert!(err <= 1e-12 * 4.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = f.solve(&rhs).unwrap();
        let r = a.residual(&rhs, &v).unwrap();
        assert!(crate::linalg::norm2(&r) <= 1e-12 * crate::linalg::norm2(&rhs));
    }
}
