//! Linear complex structures and J-invariant subspaces.

use nalgebra::DMatrix;

use crate::error::{GeometryError, Result};
use crate::linalg::{numerical_rank, QuadSpace, Subspace};

/// A linear map `J` with `J² = -I` that is an isometry of a reference
/// positive definite metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    n: usize,
    matrix: DMatrix<f64>,
}

impl ComplexStructure {
    /// Block-diagonal 90° rotations: `J e_{2k} = e_{2k+1}`, `J e_{2k+1} = -e_{2k}`.
    pub fn standard(n: usize) -> Self {
        assert!(n >= 1, "complex dimension must be positive");
        let mut matrix = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            matrix[(2 * k + 1, 2 * k)] = 1.0;
            matrix[(2 * k, 2 * k + 1)] = -1.0;
        }
        Self { n, matrix }
    }

    /// Validates `J² = -I` and `Jᵀ metric J = metric` within `tol`.
    pub fn from_matrix(matrix: DMatrix<f64>, metric: &DMatrix<f64>, tol: f64) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || d % 2 != 0 || d == 0 {
            return Err(GeometryError::InvalidComplexStructure(format!(
                "expected an even square matrix, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if metric.shape() != (d, d) {
            return Err(GeometryError::DimensionMismatch {
                expected: d,
                actual: metric.nrows(),
            });
        }
        let square = (&matrix * &matrix + DMatrix::identity(d, d)).amax();
        if square > tol {
            return Err(GeometryError::InvalidComplexStructure(format!(
                "J² + I has defect {square:.3e}"
            )));
        }
        let iso = (matrix.transpose() * metric * &matrix - metric).amax();
        if iso > tol {
            return Err(GeometryError::InvalidComplexStructure(format!(
                "isometry defect {iso:.3e}"
            )));
        }
        Ok(Self { n: d / 2, matrix })
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Conjugate by an orthogonal change of basis: `Qᵀ J Q`.
    pub fn conjugated(&self, q: &DMatrix<f64>) -> Self {
        Self {
            n: self.n,
            matrix: q.transpose() * &self.matrix * q,
        }
    }

    pub fn square_defect(&self) -> f64 {
        let d = self.real_dim();
        (&self.matrix * &self.matrix + DMatrix::identity(d, d)).amax()
    }

    pub fn isometry_defect(&self, metric: &DMatrix<f64>) -> f64 {
        (self.matrix.transpose() * metric * &self.matrix - metric).amax()
    }

    /// `J(sub)`.
    pub fn image(&self, sub: &Subspace, rank_tol: f64) -> Subspace {
        Subspace::span(sub.ambient(), &(&self.matrix * sub.basis()), rank_tol)
            .expect("J preserves the ambient dimension")
    }

    /// Largest J-invariant subspace of `sub`, i.e. `sub ∩ J(sub)`.
    pub fn maximal_complex_subspace(&self, sub: &Subspace, rank_tol: f64) -> Subspace {
        sub.intersection(&self.image(sub, rank_tol), rank_tol)
    }

    pub fn is_complex_subspace(&self, sub: &Subspace, rank_tol: f64) -> bool {
        let k = sub.dim();
        if k % 2 != 0 {
            return false;
        }
        if k == 0 {
            return true;
        }
        let d = sub.ambient().dim();
        let mut stacked = DMatrix::zeros(d, 2 * k);
        stacked.view_mut((0, 0), (d, k)).copy_from(sub.basis());
        stacked.view_mut((0, k), (d, k)).copy_from(&(&self.matrix * sub.basis()));
        numerical_rank(&stacked, rank_tol) == k
    }
}

/// `W = base ⊕ base` with metric `<(a, b), (c, d)> = <a, c> - <b, d>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSpace {
    base: QuadSpace,
    total: QuadSpace,
}

impl PairedSpace {
    pub fn new(base: QuadSpace) -> Self {
        let total = QuadSpace::paired(&base);
        Self { base, total }
    }

    pub fn base(&self) -> &QuadSpace {
        &self.base
    }

    pub fn total(&self) -> &QuadSpace {
        &self.total
    }

    pub fn base_dim(&self) -> usize {
        self.base.dim()
    }
}
