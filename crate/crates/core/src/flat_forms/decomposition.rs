//! Splitting a flat form with degenerate image along the Lorentzian plane
//! spanned by the radical direction `v` and the light-like vector `w`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use super::{
    find_regular_element, first_component_span, flatness_defect, image_span, kernel, left_kernel_at,
    PairedForm, VectorValuedForm, DEFAULT_REGULAR_ATTEMPTS,
};
use crate::error::{GeometryError, Result};
use crate::kaehler::ComplexStructure;
use crate::linalg::{Subspace, TolerancePolicy};

/// Identity defects recorded while splitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionDefects {
    /// `max |<α(X,Y), w> + (X,Y)|`.
    pub shapeid: f64,
    /// `max |<α(X,Y) + α(JX,JY), v>|`.
    pub vdeg: f64,
    /// `max |<<β(X,Y), (w,0)>> + 2(X,Y)|`.
    pub luis1: f64,
    /// `max |β(X,Y) - β₁(X,Y) - 2((X,Y)v, (X,JY)v)|`.
    pub residual: f64,
    pub beta1_flatness: f64,
}

/// Result of splitting `β = β₁ + 2((X,Y)v, (X,JY)v)`.
#[derive(Debug, Clone)]
pub struct DegenerateSplit {
    /// Light-like radical direction, normalised to `<v, w> = -1`.
    pub v: DVector<f64>,
    pub w: DVector<f64>,
    /// `L = span{v, w}`.
    pub l: Subspace,
    pub l_perp: Subspace,
    /// `β` projected to `L^⊥ ⊕ L^⊥`, in the coordinates of the original target.
    pub beta1: PairedForm,
    /// `N(β₁)`.
    pub kernel1: Subspace,
    /// `U₀ = π₁(S(β))`.
    pub u0: Subspace,
    /// `U₁ = U₀ ∩ L^⊥`.
    pub u1: Subspace,
    /// Orthogonal complement of `U₁ ⊕ L`.
    pub u2: Subspace,
    pub s: usize,
    pub n: usize,
    pub defects: DecompositionDefects,
    /// Kernel of `B₁_X` at a regular element of `β₁`.
    pub regular_kernel1: Subspace,
}

impl DegenerateSplit {
    /// `2n - 2s + 2`, the lower bound on `dim N(β₁)` when `s <= n`.
    pub fn kernel_bound(&self) -> i64 {
        2 * self.n as i64 - 2 * self.s as i64 + 2
    }

    pub fn kernel_bound_holds(&self) -> bool {
        self.s > self.n || self.kernel1.dim() as i64 >= self.kernel_bound()
    }

    /// `dim U₁ = s - 1`.
    pub fn u1_dim_holds(&self) -> bool {
        self.u1.dim() + 1 == self.s
    }

    /// `L` has signature `(1, 1)`.
    pub fn l_is_lorentzian(&self, rank_tol: f64) -> bool {
        self.l.inertia(rank_tol) == (1, 1, 0)
    }

    /// Projection of a base vector onto `L^⊥`.
    pub fn project_l_perp(&self, x: &DVector<f64>, rank_tol: f64) -> DVector<f64> {
        self.l_perp.project(x, rank_tol).expect("L^⊥ is nondegenerate")
    }
}

/// Extracts `v` from the radical of `S(β)` and splits `β` along `L = span{v, w}`.
///
/// `metric` is the positive definite inner product on the domain and `w`
/// the light-like vector with `<α(X,Y), w> = -(X,Y)`.
pub fn degenerate_decomposition<R: Rng + ?Sized>(
    beta: &PairedForm,
    alpha: &VectorValuedForm,
    j: &ComplexStructure,
    w: &DVector<f64>,
    metric: &DMatrix<f64>,
    rng: &mut R,
    policy: &TolerancePolicy,
) -> Result<DegenerateSplit> {
    let tol = policy.rank_tol;
    let p = beta.half_dim();
    let d = beta.domain_dim();
    let base = beta.target().base().clone();
    if w.len() != p {
        return Err(GeometryError::DimensionMismatch {
            expected: p,
            actual: w.len(),
        });
    }
    if metric.shape() != (d, d) || alpha.domain_dim() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            actual: metric.nrows(),
        });
    }

    let image = image_span(beta, tol);
    let radical = image.radical(tol);
    if radical.dim() == 0 {
        return Err(GeometryError::UnexpectedRadical("S(β) is nondegenerate".into()));
    }
    if radical.dim() != 2 {
        return Err(GeometryError::UnexpectedRadical(format!(
            "radical has dimension {}, expected 2",
            radical.dim()
        )));
    }
    let rb = radical.basis();
    let firsts = Subspace::span(&base, &rb.rows(0, p).into_owned(), tol)?;
    let seconds = Subspace::span(&base, &rb.rows(p, p).into_owned(), tol)?;
    if firsts.dim() != 1 || !firsts.same_span(&seconds, 1e3 * tol) {
        return Err(GeometryError::UnexpectedRadical(format!(
            "component projections have dimensions {} and {}",
            firsts.dim(),
            seconds.dim()
        )));
    }
    let mut v = firsts.basis().column(0).into_owned();
    let mut stacked = DVector::zeros(2 * p);
    stacked.rows_mut(0, p).copy_from(&v);
    if !radical.contains(&stacked, 1e3 * tol) {
        return Err(GeometryError::UnexpectedRadical("(v, 0) is not in the radical".into()));
    }

    let vw = base.inner(&v, w)?;
    if vw.abs() <= tol * v.norm() * w.norm().max(1.0) {
        return Err(GeometryError::NullPairing);
    }
    v /= -vw;

    let l = Subspace::span_vectors(&base, &[v.clone(), w.clone()], tol)?;
    if l.inertia(tol) != (1, 1, 0) {
        return Err(GeometryError::NullPairing);
    }
    let l_perp = l.orthogonal_complement(tol);
    let proj = DMatrix::from_columns(
        &(0..p)
            .map(|k| {
                let mut e = DVector::zeros(p);
                e[k] = 1.0;
                l_perp.project(&e, tol)
            })
            .collect::<Result<Vec<_>>>()?,
    );
    let beta1 = beta.map_halves(&proj);

    let metric_j = metric * j.matrix();
    let mut defects = DecompositionDefects {
        shapeid: 0.0,
        vdeg: 0.0,
        luis1: 0.0,
        residual: 0.0,
        beta1_flatness: flatness_defect(&beta1),
    };
    for a in 0..d {
        for b in 0..d {
            let alpha_ab = alpha.eval_basis(a, b);
            defects.shapeid = defects
                .shapeid
                .max((base.inner_unchecked(&alpha_ab, w) + metric[(a, b)]).abs());
            let val = beta.eval_basis(a, b);
            let xi = val.rows(0, p).into_owned();
            defects.vdeg = defects.vdeg.max(base.inner_unchecked(&xi, &v).abs());
            defects.luis1 = defects
                .luis1
                .max((base.inner_unchecked(&xi, w) + 2.0 * metric[(a, b)]).abs());
            let mut expected = beta1.eval_basis(a, b);
            for k in 0..p {
                expected[k] += 2.0 * metric[(a, b)] * v[k];
                expected[p + k] += 2.0 * metric_j[(a, b)] * v[k];
            }
            defects.residual = defects.residual.max((val - expected).amax());
        }
    }

    let kernel1 = kernel(&beta1, tol);
    let u0 = first_component_span(beta, tol);
    let u1 = u0.intersection(&l_perp, tol);
    let u2 = u1.sum(&l, tol).orthogonal_complement(tol);
    let (x1, _) = find_regular_element(&beta1, rng, DEFAULT_REGULAR_ATTEMPTS, tol);
    let regular_kernel1 = left_kernel_at(&beta1, &x1, tol);

    Ok(DegenerateSplit {
        s: u0.dim(),
        n: d / 2,
        w: w.clone(),
        v,
        l,
        l_perp,
        beta1,
        kernel1,
        u0,
        u1,
        u2,
        defects,
        regular_kernel1,
    })
}
