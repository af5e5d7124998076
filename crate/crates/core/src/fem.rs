//! P1 finite elements on nested uniform triangulations of the unit square.
//!
//! Each of the `m × m` cells is cut along its lower-left to upper-right
//! diagonal. Only interior nodes carry unknowns (homogeneous Dirichlet data is
//! eliminated), numbered row by row: node `(i, j)` with `1 ≤ i, j ≤ m - 1` gets
//! index `(j - 1)(m - 1) + (i - 1)`.

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;
use crate::multigrid::{Hierarchy, SmootherSpec};

/// A uniform mesh with `m` cells per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshLevel {
    m: usize,
}

impl MeshLevel {
    pub fn new(cells_per_side: usize) -> Result<Self> {
        if cells_per_side < 2 {
            return Err(Error::InvalidParameter(format!(
                "mesh needs at least 2 cells per side, got {cells_per_side}"
            )));
        }
        Ok(Self { m: cells_per_side })
    }

    pub fn cells_per_side(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn interior_dof_count(&self) -> usize {
        (self.m - 1) * (self.m - 1)
    }

    pub fn refined(&self) -> Self {
        Self { m: 2 * self.m }
    }

    /// Unknown index of lattice node `(i, j)`, or `None` on the boundary.
    pub fn dof(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.m - 1;
        ((1..=n).contains(&i) && (1..=n).contains(&j)).then(|| (j - 1) * n + (i - 1))
    }

    /// Lattice node of an unknown.
    pub fn node(&self, dof: usize) -> (usize, usize) {
        let n = self.m - 1;
        (dof % n + 1, dof / n + 1)
    }

    /// The two triangles of cell `(ci, cj)` as lattice vertex triples,
    /// counter-clockwise.
    fn cell_triangles(ci: usize, cj: usize) -> [[(usize, usize); 3]; 2] {
        [
            [(ci, cj), (ci + 1, cj), (ci + 1, cj + 1)],
            [(ci, cj), (ci + 1, cj + 1), (ci, cj + 1)],
        ]
    }

    /// Triangles having lattice node `(i, j)` as a vertex.
    fn triangles_at(&self, i: usize, j: usize) -> impl Iterator<Item = [(usize, usize); 3]> + '_ {
        let cells = [
            (i.wrapping_sub(1), j.wrapping_sub(1)),
            (i, j.wrapping_sub(1)),
            (i.wrapping_sub(1), j),
            (i, j),
        ];
        cells
            .into_iter()
            .filter(|&(ci, cj)| ci < self.m && cj < self.m)
            .flat_map(|(ci, cj)| Self::cell_triangles(ci, cj))
            .filter(move |t| t.contains(&(i, j)))
    }
}

/// Piecewise-constant diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `k_high` on `(0,½)² ∪ (½,1)²`, 1 on the other two quadrants.
    FourQuadrantJump {
        k_high: f64,
    },
}

impl Coefficient {
    pub fn poisson() -> Self {
        Self::Constant(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let k = match *self {
            Self::Constant(k) => k,
            Self::FourQuadrantJump { k_high } => k_high,
        };
        if k > 0.0 && k.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "coefficient must be positive, got {k}"
            )))
        }
    }

    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Constant(k) => k,
            Self::FourQuadrantJump { k_high } => {
                if (x < 0.5) == (y < 0.5) {
                    k_high
                } else {
                    1.0
                }
            }
        }
    }
}

/// Local stiffness `k ∫ ∇φ_a·∇φ_b` of a P1 triangle with vertices `p`.
///
/// In 2D this is invariant under uniform scaling, which is why assembly
/// feeds integer lattice coordinates and gets exact entries.
pub fn element_stiffness(p: [[f64; 2]; 3], k: f64) -> [[f64; 3]; 3] {
    let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let area2 = (b[0] * c[1] - b[1] * c[0]).abs();
    let scale = k / (2.0 * area2);
    let mut out = [[0.0; 3]; 3];
    for a in 0..3 {
        for q in 0..3 {
            out[a][q] = scale * (b[a] * b[q] + c[a] * c[q]);
        }
    }
    out
}

fn lattice(v: (usize, usize)) -> [f64; 2] {
    [v.0 as f64, v.1 as f64]
}

/// Stiffness matrix over the interior unknowns, assembled row by row from
/// the six triangles around each node.
pub fn assemble_stiffness(level: MeshLevel, coeff: Coefficient) -> Result<SparseMatrix> {
    coeff.validate()?;
    let n = level.interior_dof_count();
    let h = level.h();
    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut col_indices = Vec::with_capacity(7 * n);
    let mut values = Vec::with_capacity(7 * n);
    row_offsets.push(0);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(12);
    for dof in 0..n {
        let (i, j) = level.node(dof);
        row.clear();
        for tri in level.triangles_at(i, j) {
            let centroid = tri
                .iter()
                .fold([0.0, 0.0], |s, v| [s[0] + v.0 as f64, s[1] + v.1 as f64]);
            let k = coeff.value_at(centroid[0] * h / 3.0, centroid[1] * h / 3.0);
            let local = element_stiffness([lattice(tri[0]), lattice(tri[1]), lattice(tri[2])], k);
            let me = tri
                .iter()
                .position(|&v| v == (i, j))
                .expect("vertex of its own triangle");
            for (other, &v) in tri.iter().enumerate() {
                if let Some(col) = level.dof(v.0, v.1) {
                    row.push((col, local[me][other]));
                }
            }
        }
        row.sort_by_key(|e| e.0);
        let start = col_indices.len();
        for &(c, v) in &row {
            if col_indices.len() > start && *col_indices.last().unwrap() == c {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
            }
        }
        row_offsets.push(values.len());
    }
    Ok(SparseMatrix::new(n, n, row_offsets, col_indices, values)?.prune_exact_zeros())
}

/// Load vector for `f ≡ 1`: one third of the area of each adjacent triangle.
pub fn assemble_load(level: MeshLevel) -> Vec<f64> {
    let h = level.h();
    (0..level.interior_dof_count())
        .map(|dof| {
            let (i, j) = level.node(dof);
            let triangles = level.triangles_at(i, j).count() as f64;
            triangles * (0.5 * h * h) / 3.0
        })
        .collect()
}

/// Nodal interpolation from `coarse` into `fine` (`fine.m = 2·coarse.m`).
///
/// Coincident nodes get weight 1; edge midpoints average the two coarse
/// endpoints of their edge, including the cell diagonal.
pub fn build_prolongation(coarse: MeshLevel, fine: MeshLevel) -> Result<SparseMatrix> {
    if fine.m != 2 * coarse.m {
        return Err(Error::DimensionMismatch(format!(
            "fine mesh must have twice the cells of the coarse one: {} vs {}",
            fine.m, coarse.m
        )));
    }
    let nf = fine.interior_dof_count();
    let mut row_offsets = Vec::with_capacity(nf + 1);
    let mut col_indices = Vec::with_capacity(2 * nf);
    let mut values = Vec::with_capacity(2 * nf);
    row_offsets.push(0);
    for dof in 0..nf {
        let (i, j) = fine.node(dof);
        let parents: &[(usize, usize)] = match (i % 2, j % 2) {
            (0, 0) => &[(i / 2, j / 2)],
            (1, 0) => &[((i - 1) / 2, j / 2), (i.div_ceil(2), j / 2)],
            (0, 1) => &[(i / 2, (j - 1) / 2), (i / 2, j.div_ceil(2))],
            _ => &[((i - 1) / 2, (j - 1) / 2), (i.div_ceil(2), j.div_ceil(2))],
        };
        let weight = if parents.len() == 1 { 1.0 } else { 0.5 };
        // Parents are listed in increasing index order.
        for &(pi, pj) in parents {
            if let Some(c) = coarse.dof(pi, pj) {
                col_indices.push(c);
                values.push(weight);
            }
        }
        row_offsets.push(values.len());
    }
    SparseMatrix::new(
        nf,
        coarse.interior_dof_count(),
        row_offsets,
        col_indices,
        values,
    )
}

/// A model problem: coefficient, number of levels and coarsest mesh size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub coefficient: Coefficient,
    /// `J + 1`.
    pub levels: usize,
    pub coarsest_m: usize,
}

impl ProblemSpec {
    pub fn new(coefficient: Coefficient, levels: usize, coarsest_m: usize) -> Result<Self> {
        let spec = Self {
            coefficient,
            levels,
            coarsest_m,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.coefficient.validate()?;
        if self.levels < 1 {
            return Err(Error::InvalidParameter("need at least one level".into()));
        }
        if self.coarsest_m < 2 || self.coarsest_m % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "coarsest mesh size must be even and at least 2 so the jump lines are mesh-aligned, got {}",
                self.coarsest_m
            )));
        }
        Ok(())
    }

    pub fn finest_m(&self) -> usize {
        self.coarsest_m << (self.levels - 1)
    }

    pub fn finest_dim(&self) -> usize {
        (self.finest_m() - 1).pow(2)
    }

    pub fn coarsest_dim(&self) -> usize {
        (self.coarsest_m - 1).pow(2)
    }

    /// Mesh of level `j` (0 coarsest).
    pub fn mesh(&self, j: usize) -> MeshLevel {
        MeshLevel {
            m: self.coarsest_m << j,
        }
    }
}

/// An assembled hierarchy together with the finest right-hand side.
#[derive(Debug, Clone)]
pub struct ModelProblem {
    pub spec: ProblemSpec,
    pub hierarchy: Hierarchy,
    pub rhs: Vec<f64>,
}

/// Assembles the finest matrix and forms the coarser ones by Galerkin
/// triple products.
pub fn build_hierarchy(
    spec: ProblemSpec,
    smoother: Option<SmootherSpec>,
    direct_cap: usize,
) -> Result<ModelProblem> {
    spec.validate()?;
    if spec.coarsest_dim() > direct_cap {
        return Err(Error::CoarseTooLarge {
            dim: spec.coarsest_dim(),
            cap: direct_cap,
        });
    }
    let top = spec.levels - 1;
    let finest = spec.mesh(top);
    let mut matrices = vec![assemble_stiffness(finest, spec.coefficient)?];
    let mut prolongations = Vec::with_capacity(top);
    for j in (1..=top).rev() {
        let p = build_prolongation(spec.mesh(j - 1), spec.mesh(j))?;
        let coarse =
            SparseMatrix::triple_product(&p, matrices.last().unwrap())?.prune_exact_zeros();
        matrices.push(coarse);
        prolongations.push(p);
    }
    matrices.reverse();
    prolongations.reverse();
    let hierarchy = Hierarchy::new(matrices, prolongations, smoother, direct_cap)?;
    Ok(ModelProblem {
        spec,
        hierarchy,
        rhs: assemble_load(finest),
    })
}
