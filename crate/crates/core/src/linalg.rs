//! Linear algebra over real vector spaces carrying a fixed nondegenerate
//! symmetric inner product of arbitrary signature.
//!
//! Subspaces are stored through a Euclidean-orthonormal basis of their
//! span. Every rank decision goes through singular values compared against
//! `rank_tol * max(largest singular value, 1)`; the unit floor keeps
//! round-off on identically vanishing data from being counted as rank.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};

/// Numerical thresholds shared by every check in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Relative threshold on singular values for rank decisions.
    pub rank_tol: f64,
    /// Absolute threshold for identity defects.
    pub defect_tol: f64,
    /// Step used by central finite differences.
    pub fd_step: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            rank_tol: 1e-8,
            defect_tol: 1e-8,
            fd_step: 1e-4,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rank_tol: f64, defect_tol: f64, fd_step: f64) -> Result<Self> {
        let policy = Self {
            rank_tol,
            defect_tol,
            fd_step,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rank_tol > 0.0 && self.defect_tol > 0.0 && self.fd_step > 0.0) {
            return Err(GeometryError::InvalidTolerance(
                "all tolerances must be strictly positive",
            ));
        }
        if self.rank_tol >= 1.0 {
            return Err(GeometryError::InvalidTolerance("rank_tol must be below 1"));
        }
        Ok(())
    }
}

fn rank_threshold(singular_values: &[f64], rank_tol: f64) -> f64 {
    let smax = singular_values.iter().cloned().fold(0.0, f64::max);
    rank_tol * smax.max(1.0)
}

/// Full singular value decomposition `m = U Σ Vᵀ`.
///
/// Computed with faer: the nalgebra SVD and symmetric eigensolvers lose
/// orthogonality, or return NaN, on some rank-deficient inputs met here.
struct Singular {
    /// Descending, `min(rows, cols)` of them.
    values: Vec<f64>,
    /// `rows × rows`.
    u: DMatrix<f64>,
    /// `cols × cols`.
    v: DMatrix<f64>,
}

impl Singular {
    fn new(m: &DMatrix<f64>) -> Self {
        let (r, c) = m.shape();
        let scale = m.amax();
        // faer occasionally fails to converge when round-off sized entries
        // sit next to O(1) ones; flushing them to zero avoids that.
        let flush = |x: f64| if x.abs() <= f64::EPSILON * scale { 0.0 } else { x };
        let direct = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
        let flushed = faer::Mat::<f64>::from_fn(r, c, |i, j| flush(m[(i, j)]));
        let transposed = flushed.transpose().to_owned();
        if let Ok(svd) = direct.svd().or_else(|_| flushed.svd()) {
            return Self::from_parts(svd.U(), svd.S().column_vector(), svd.V(), r, c);
        }
        let svd = transposed
            .svd()
            .expect("singular value decomposition did not converge");
        Self::from_parts(svd.V(), svd.S().column_vector(), svd.U(), r, c)
    }

    fn from_parts(
        fu: faer::MatRef<'_, f64>,
        fs: faer::ColRef<'_, f64>,
        fv: faer::MatRef<'_, f64>,
        r: usize,
        c: usize,
    ) -> Self {
        Self {
            values: (0..r.min(c)).map(|k| fs[k]).collect(),
            u: DMatrix::from_fn(r, r, |i, j| fu[(i, j)]),
            v: DMatrix::from_fn(c, c, |i, j| fv[(i, j)]),
        }
    }

    fn threshold(&self, rank_tol: f64) -> f64 {
        rank_threshold(&self.values, rank_tol)
    }

    fn rank(&self, rank_tol: f64) -> usize {
        let thresh = self.threshold(rank_tol);
        self.values.iter().filter(|&&s| s > thresh).count()
    }
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    Singular::new(m).values
}

/// Numerical rank of `m`.
pub fn numerical_rank(m: &DMatrix<f64>, rank_tol: f64) -> usize {
    let sv = singular_values(m);
    let thresh = rank_threshold(&sv, rank_tol);
    sv.iter().filter(|&&s| s > thresh).count()
}

/// Euclidean-orthonormal basis (as columns) of the column span of `m`.
pub fn column_span(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = Singular::new(m);
    let rank = svd.rank(rank_tol);
    svd.u.columns(0, rank).into_owned()
}

/// Euclidean-orthonormal basis (as columns) of the right null space of `m`.
pub fn null_space(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    if cols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(cols, cols);
    }
    let svd = Singular::new(m);
    let rank = svd.rank(rank_tol);
    svd.v.columns(rank, cols - rank).into_owned()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns) of a
/// symmetric matrix.
pub fn symmetric_eigen(sym: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = sym.nrows();
    if d == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let fm = faer::Mat::<f64>::from_fn(d, d, |i, j| 0.5 * (sym[(i, j)] + sym[(j, i)]));
    let eig = fm
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigendecomposition of a finite symmetric matrix converges");
    let (fs, fu) = (eig.S().column_vector(), eig.U());
    (
        (0..d).map(|k| fs[k]).collect(),
        DMatrix::from_fn(d, d, |i, j| fu[(i, j)]),
    )
}

/// Counts of (positive, negative, zero) eigenvalues of a symmetric matrix.
pub fn inertia(sym: &DMatrix<f64>, rank_tol: f64) -> (usize, usize, usize) {
    if sym.nrows() == 0 {
        return (0, 0, 0);
    }
    let (values, _) = symmetric_eigen(sym);
    let scale = values.iter().map(|e| e.abs()).fold(0.0, f64::max);
    let thresh = rank_tol * scale.max(1.0);
    let pos = values.iter().filter(|&&e| e > thresh).count();
    let neg = values.iter().filter(|&&e| e < -thresh).count();
    (pos, neg, sym.nrows() - pos - neg)
}

fn check_len(expected: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() != expected {
        return Err(GeometryError::DimensionMismatch {
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

/// A real vector space with a nondegenerate symmetric inner product.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadSpace {
    gram: DMatrix<f64>,
    signature: (usize, usize),
}

impl QuadSpace {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(gram, TolerancePolicy::default().rank_tol)
    }

    pub fn with_tolerance(gram: DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        if gram.nrows() != gram.ncols() {
            return Err(GeometryError::DimensionMismatch {
                expected: gram.nrows(),
                actual: gram.ncols(),
            });
        }
        if gram.nrows() == 0 {
            return Err(GeometryError::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        let scale = gram.amax().max(1.0);
        let asym = (&gram - gram.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(GeometryError::NotSymmetric(asym));
        }
        let sym = (&gram + gram.transpose()) * 0.5;
        let (values, _) = symmetric_eigen(&sym);
        let min_abs = values.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
        let max_abs = values.iter().map(|e| e.abs()).fold(0.0, f64::max);
        if min_abs <= rank_tol * max_abs.max(1.0) {
            return Err(GeometryError::DegenerateGram(min_abs));
        }
        let pos = values.iter().filter(|&&e| e > 0.0).count();
        let dim = sym.nrows();
        Ok(Self {
            gram: sym,
            signature: (pos, dim - pos),
        })
    }

    /// Diagonal metric with the given entries.
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// Flat Lorentzian space with `diag(-1, 1, ..., 1)`.
    pub fn minkowski(dim: usize) -> Self {
        assert!(dim >= 1, "Minkowski space needs dimension >= 1");
        let mut gram = DMatrix::identity(dim, dim);
        gram[(0, 0)] = -1.0;
        Self {
            gram,
            signature: (dim - 1, 1),
        }
    }

    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1, "Euclidean space needs dimension >= 1");
        Self {
            gram: DMatrix::identity(dim, dim),
            signature: (dim, 0),
        }
    }

    /// `base ⊕ base` with metric `diag(g, -g)`.
    pub fn paired(base: &QuadSpace) -> Self {
        let d = base.dim();
        let mut gram = DMatrix::zeros(2 * d, 2 * d);
        gram.view_mut((0, 0), (d, d)).copy_from(&base.gram);
        gram.view_mut((d, d), (d, d)).copy_from(&(-&base.gram));
        let (p, q) = base.signature;
        Self {
            gram,
            signature: (p + q, q + p),
        }
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `(n_plus, n_minus)`.
    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        check_len(self.dim(), x)?;
        check_len(self.dim(), y)?;
        Ok(self.inner_unchecked(x, y))
    }

    pub(crate) fn inner_unchecked(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    pub fn norm_sq(&self, x: &DVector<f64>) -> Result<f64> {
        self.inner(x, x)
    }

    /// True iff `|<v,v>| <= tol * |v|²` (Euclidean norm).
    pub fn is_lightlike(&self, v: &DVector<f64>, tol: f64) -> Result<bool> {
        check_len(self.dim(), v)?;
        let e = v.norm_squared();
        if e.sqrt() <= tol {
            return Err(GeometryError::ZeroVector);
        }
        Ok(self.inner_unchecked(v, v).abs() <= tol * e)
    }
}

/// A linear subspace of a [`QuadSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    ambient: QuadSpace,
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Span of the given columns; dependent generators are allowed.
    pub fn span(ambient: &QuadSpace, generators: &DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        if generators.nrows() != ambient.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: ambient.dim(),
                actual: generators.nrows(),
            });
        }
        Ok(Self {
            ambient: ambient.clone(),
            basis: column_span(generators, rank_tol),
        })
    }

    pub fn span_vectors(ambient: &QuadSpace, generators: &[DVector<f64>], rank_tol: f64) -> Result<Self> {
        for g in generators {
            check_len(ambient.dim(), g)?;
        }
        if generators.is_empty() {
            return Ok(Self::zero(ambient));
        }
        Self::span(ambient, &DMatrix::from_columns(generators), rank_tol)
    }

    /// Subspace with the given basis; fails if the columns are dependent.
    pub fn from_basis(ambient: &QuadSpace, basis: &DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        let sub = Self::span(ambient, basis, rank_tol)?;
        if sub.dim() != basis.ncols() {
            return Err(GeometryError::DependentBasis {
                rank: sub.dim(),
                dim: basis.ncols(),
            });
        }
        Ok(sub)
    }

    pub fn zero(ambient: &QuadSpace) -> Self {
        Self {
            ambient: ambient.clone(),
            basis: DMatrix::zeros(ambient.dim(), 0),
        }
    }

    pub fn full(ambient: &QuadSpace) -> Self {
        let d = ambient.dim();
        Self {
            ambient: ambient.clone(),
            basis: DMatrix::identity(d, d),
        }
    }

    pub fn ambient(&self) -> &QuadSpace {
        &self.ambient
    }

    /// Euclidean-orthonormal basis, one vector per column.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<DVector<f64>> {
        self.basis.column_iter().map(|c| c.into_owned()).collect()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn restricted_gram(&self) -> DMatrix<f64> {
        self.basis.transpose() * self.ambient.gram() * &self.basis
    }

    /// (positive, negative, zero) counts of the restricted metric.
    pub fn inertia(&self, rank_tol: f64) -> (usize, usize, usize) {
        inertia(&self.restricted_gram(), rank_tol)
    }

    pub fn is_degenerate(&self, rank_tol: f64) -> bool {
        self.radical(rank_tol).dim() > 0
    }

    /// Euclidean distance from `x` to the subspace.
    pub fn distance(&self, x: &DVector<f64>) -> f64 {
        let proj = &self.basis * (self.basis.transpose() * x);
        (x - proj).norm()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.distance(x) <= tol * x.norm().max(1.0)
    }

    /// `L ∩ L^⊥`.
    pub fn radical(&self, rank_tol: f64) -> Subspace {
        if self.dim() == 0 {
            return self.clone();
        }
        let kernel = null_space(&self.restricted_gram(), rank_tol);
        Subspace {
            ambient: self.ambient.clone(),
            basis: column_span(&(&self.basis * kernel), rank_tol),
        }
    }

    /// `{y : <y, x> = 0 for all x in L}`.
    pub fn orthogonal_complement(&self, rank_tol: f64) -> Subspace {
        if self.dim() == 0 {
            return Subspace::full(&self.ambient);
        }
        let constraints = self.basis.transpose() * self.ambient.gram();
        Subspace {
            ambient: self.ambient.clone(),
            basis: null_space(&constraints, rank_tol),
        }
    }

    /// Inner-orthogonal projection; undefined on degenerate subspaces.
    pub fn project(&self, x: &DVector<f64>, rank_tol: f64) -> Result<DVector<f64>> {
        check_len(self.ambient.dim(), x)?;
        let k = self.dim();
        if k == 0 {
            return Ok(DVector::zeros(x.len()));
        }
        let g = self.restricted_gram();
        let (_, _, zero) = inertia(&g, rank_tol);
        if zero > 0 {
            return Err(GeometryError::DegenerateSubspace);
        }
        let rhs = self.basis.transpose() * self.ambient.gram() * x;
        let coeffs = g.lu().solve(&rhs).ok_or(GeometryError::DegenerateSubspace)?;
        Ok(&self.basis * coeffs)
    }

    pub fn intersection(&self, other: &Subspace, rank_tol: f64) -> Subspace {
        let (a, b) = (self.dim(), other.dim());
        if a == 0 || b == 0 {
            return Subspace::zero(&self.ambient);
        }
        let n = self.ambient.dim();
        let mut stacked = DMatrix::zeros(n, a + b);
        stacked.view_mut((0, 0), (n, a)).copy_from(&self.basis);
        stacked.view_mut((0, a), (n, b)).copy_from(&(-&other.basis));
        let kernel = null_space(&stacked, rank_tol);
        let coeffs = kernel.rows(0, a).into_owned();
        Subspace {
            ambient: self.ambient.clone(),
            basis: column_span(&(&self.basis * coeffs), rank_tol),
        }
    }

    pub fn sum(&self, other: &Subspace, rank_tol: f64) -> Subspace {
        let n = self.ambient.dim();
        let (a, b) = (self.dim(), other.dim());
        let mut stacked = DMatrix::zeros(n, a + b);
        stacked.view_mut((0, 0), (n, a)).copy_from(&self.basis);
        stacked.view_mut((0, a), (n, b)).copy_from(&other.basis);
        Subspace {
            ambient: self.ambient.clone(),
            basis: column_span(&stacked, rank_tol),
        }
    }

    /// Same span, up to `tol` in Euclidean distance.
    pub fn same_span(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim()
            && other.basis.column_iter().all(|c| self.contains(&c.into_owned(), tol))
    }
}
