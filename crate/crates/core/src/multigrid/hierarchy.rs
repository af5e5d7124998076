use std::sync::Arc;

use super::SmootherSpec;
use crate::error::{Error, Result};
use crate::linalg::{DenseCholesky, SparseMatrix};

#[derive(Debug)]
struct Levels {
    matrices: Vec<SparseMatrix>,
    prolongations: Vec<SparseMatrix>,
    coarse_factor: DenseCholesky,
}

/// Level stack `A_0 .. A_J` (0 coarsest) with prolongations `P_1 .. P_J`,
/// per-level smoothers and the Cholesky factor of `A_0`.
///
/// Matrices are shared behind an `Arc`, so variants that only differ in
/// their smoother configuration are cheap to derive.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Arc<Levels>,
    pre: Vec<Option<SmootherSpec>>,
    post: Vec<Option<SmootherSpec>>,
}

impl Hierarchy {
    /// `prolongations[j - 1]` maps level `j - 1` to level `j`. Every level
    /// above the coarsest gets `smoother` for both pre- and post-smoothing.
    pub fn new(
        matrices: Vec<SparseMatrix>,
        prolongations: Vec<SparseMatrix>,
        smoother: Option<SmootherSpec>,
        direct_cap: usize,
    ) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidParameter(
                "hierarchy needs at least one level".into(),
            ));
        }
        if prolongations.len() + 1 != matrices.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} matrices need {} prolongations, got {}",
                matrices.len(),
                matrices.len() - 1,
                prolongations.len()
            )));
        }
        for (j, a) in matrices.iter().enumerate() {
            if !a.is_square() {
                return Err(Error::DimensionMismatch(format!("A_{j} is not square")));
            }
        }
        for (k, p) in prolongations.iter().enumerate() {
            let j = k + 1;
            if p.nrows() != matrices[j].nrows() || p.ncols() != matrices[j - 1].nrows() {
                return Err(Error::DimensionMismatch(format!(
                    "P_{j} is {}x{}, expected {}x{}",
                    p.nrows(),
                    p.ncols(),
                    matrices[j].nrows(),
                    matrices[j - 1].nrows()
                )));
            }
        }
        let coarse_factor = DenseCholesky::factor(&matrices[0], direct_cap)?;
        let n_levels = matrices.len();
        let mut pre = vec![smoother; n_levels];
        let mut post = vec![smoother; n_levels];
        pre[0] = None;
        post[0] = None;
        Ok(Self {
            levels: Arc::new(Levels {
                matrices,
                prolongations,
                coarse_factor,
            }),
            pre,
            post,
        })
    }

    /// Number of levels, `J + 1`.
    pub fn num_levels(&self) -> usize {
        self.levels.matrices.len()
    }

    /// Index `J` of the finest level.
    pub fn finest_level(&self) -> usize {
        self.num_levels() - 1
    }

    pub fn matrix(&self, level: usize) -> &SparseMatrix {
        &self.levels.matrices[level]
    }

    pub fn finest_matrix(&self) -> &SparseMatrix {
        self.matrix(self.finest_level())
    }

    pub fn coarse_matrix(&self) -> &SparseMatrix {
        self.matrix(0)
    }

    /// `P_level`, mapping level `level - 1` to `level`.
    pub fn prolongation(&self, level: usize) -> &SparseMatrix {
        assert!(level >= 1, "no prolongation into the coarsest level");
        &self.levels.prolongations[level - 1]
    }

    pub fn coarse_factor(&self) -> &DenseCholesky {
        &self.levels.coarse_factor
    }

    pub fn dim(&self, level: usize) -> usize {
        self.matrix(level).nrows()
    }

    pub fn pre_smoother(&self, level: usize) -> Option<&SmootherSpec> {
        self.pre[level].as_ref()
    }

    pub fn post_smoother(&self, level: usize) -> Option<&SmootherSpec> {
        self.post[level].as_ref()
    }

    pub fn with_pre_smoother(&self, spec: Option<SmootherSpec>) -> Self {
        let mut h = self.clone();
        h.pre.iter_mut().skip(1).for_each(|s| *s = spec);
        h
    }

    pub fn with_post_smoother(&self, spec: Option<SmootherSpec>) -> Self {
        let mut h = self.clone();
        h.post.iter_mut().skip(1).for_each(|s| *s = spec);
        h
    }

    /// True when pre- and post-smoothers coincide and are symmetric on every level,
    /// which makes the exact cycle's error propagation self-adjoint in the A-inner product.
    pub fn has_symmetric_cycle(&self) -> bool {
        (1..self.num_levels()).all(|j| match (self.pre[j], self.post[j]) {
            (None, None) => true,
            (Some(a), Some(b)) => a == b && a.is_symmetric(),
            _ => false,
        })
    }

    /// Largest `‖A_{j-1} - P_jᵀ A_j P_j‖_max / ‖A_{j-1}‖_max` over all levels.
    pub fn galerkin_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for j in 1..self.num_levels() {
            let galerkin = SparseMatrix::triple_product(self.prolongation(j), self.matrix(j))?;
            let diff = self.matrix(j - 1).add_scaled(1.0, &galerkin, -1.0)?;
            worst = worst.max(diff.max_abs() / self.matrix(j - 1).max_abs());
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_DIRECT_CAP;

    #[test]
    fn dimension_chain_checked() {
        let a1 = SparseMatrix::identity(3);
        let a0 = SparseMatrix::identity(2);
        let bad = SparseMatrix::identity(3);
        let err = Hierarchy::new(
            vec![a0.clone(), a1.clone()],
            vec![bad],
            None,
            DEFAULT_DIRECT_CAP,
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let err = Hierarchy::new(vec![a0, a1], vec![], None, DEFAULT_DIRECT_CAP);
        assert!(err.is_err());
    }

    #[test]
    fn smoother_variants_share_matrices() {
        let p = SparseMatrix::from_dense(&[vec![1.0], vec![1.0]]).unwrap();
        let a1 = SparseMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let a0 = SparseMatrix::triple_product(&p, &a1).unwrap();
        let h = Hierarchy::new(vec![a0, a1], vec![p], Some(SmootherSpec::default()), 10).unwrap();
        assert!(h.has_symmetric_cycle());
        assert_eq!(h.galerkin_defect().unwrap(), 0.0);
        let no_post = h.with_post_smoother(None);
        assert!(no_post.post_smoother(1).is_none());
        assert!(no_post.pre_smoother(1).is_some());
        assert!(!no_post.has_symmetric_cycle());
        assert!(std::ptr::eq(h.matrix(1), no_post.matrix(1)));
    }
}
