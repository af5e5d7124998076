use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmootherKind {
    /// Forward Gauss-Seidel sweep followed by a backward sweep.
    SymmetricGaussSeidel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmootherSpec {
    pub kind: SmootherKind,
    pub sweeps: usize,
}

impl SmootherSpec {
    pub fn symmetric_gauss_seidel(sweeps: usize) -> Result<Self> {
        if sweeps == 0 {
            return Err(Error::InvalidParameter(
                "smoother needs at least one sweep; disable it instead".into(),
            ));
        }
        Ok(Self {
            kind: SmootherKind::SymmetricGaussSeidel,
            sweeps,
        })
    }

    /// Whether the induced `M` is symmetric, so pre- and post-smoothing
    /// give a self-adjoint cycle.
    pub fn is_symmetric(&self) -> bool {
        matches!(self.kind, SmootherKind::SymmetricGaussSeidel)
    }
}

impl Default for SmootherSpec {
    fn default() -> Self {
        Self {
            kind: SmootherKind::SymmetricGaussSeidel,
            sweeps: 1,
        }
    }
}

#[inline]
fn relax_row(a: &SparseMatrix, f: &[f64], v: &mut [f64], i: usize) -> Result<()> {
    let (cols, vals) = a.row(i);
    let mut sum = 0.0;
    let mut diag = 0.0;
    for (&c, &val) in cols.iter().zip(vals) {
        sum += val * v[c];
        if c == i {
            diag = val;
        }
    }
    if diag == 0.0 {
        return Err(Error::ZeroDiagonal(i));
    }
    v[i] += (f[i] - sum) / diag;
    Ok(())
}

/// Smooths `v` in place; each sweep is `v <- v + M (f - A v)` with
/// `M = (D+L)⁻ᵀ D (D+L)⁻¹`.
pub fn smooth_in_place(
    a: &SparseMatrix,
    f: &[f64],
    v: &mut [f64],
    spec: &SmootherSpec,
) -> Result<()> {
    let n = a.nrows();
    if !a.is_square() || f.len() != n || v.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "smoother on {}x{} with |f|={} |v|={}",
            a.nrows(),
            a.ncols(),
            f.len(),
            v.len()
        )));
    }
    match spec.kind {
        SmootherKind::SymmetricGaussSeidel => {
            for _ in 0..spec.sweeps {
                for i in 0..n {
                    relax_row(a, f, v, i)?;
                }
                for i in (0..n).rev() {
                    relax_row(a, f, v, i)?;
                }
            }
        }
    }
    Ok(())
}

pub fn smooth_apply(
    a: &SparseMatrix,
    f: &[f64],
    v: &[f64],
    spec: &SmootherSpec,
) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    smooth_in_place(a, f, &mut out, spec)?;
    Ok(out)
}
