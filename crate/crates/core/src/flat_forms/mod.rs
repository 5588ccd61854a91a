//! Vector-valued symmetric forms `α: V × V → 𝕃`, the paired forms
//! `β(X,Y) = (α(X,Y) + α(JX,JY), α(X,JY) - α(JX,Y))` and
//! `γ(X,Y) = (α(X,Y), α(X,JY))`, and their analysis: flatness, images,
//! kernels, regular elements and the inclusion satisfied by flat forms
//! at regular elements.
//!
//! Forms are stored as one `d × d` coefficient matrix per target
//! coordinate, so `form(X, Y)_k = Xᵀ A_k Y` and bilinearity is structural.

mod decomposition;
mod diag;
mod umbilical;

pub use decomposition::{degenerate_decomposition, DecompositionDefects, DegenerateSplit};
pub use diag::{verify_diag_basis, DiagReport};
pub use umbilical::{umbilical_subspace, UmbilicalReport};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::kaehler::{ComplexStructure, PairedSpace};
use crate::linalg::{null_space, numerical_rank, QuadSpace, Subspace, TolerancePolicy};

/// Number of random samples used when searching for a regular element.
pub const DEFAULT_REGULAR_ATTEMPTS: usize = 64;

/// A symmetric bilinear map `V^d × V^d → target`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorValuedForm {
    target: QuadSpace,
    comps: Vec<DMatrix<f64>>,
}

fn check_components(domain_dim: usize, target_dim: usize, comps: &[DMatrix<f64>]) -> Result<()> {
    if comps.len() != target_dim {
        return Err(GeometryError::DimensionMismatch {
            expected: target_dim,
            actual: comps.len(),
        });
    }
    for c in comps {
        if c.shape() != (domain_dim, domain_dim) {
            return Err(GeometryError::DimensionMismatch {
                expected: domain_dim,
                actual: c.nrows().max(c.ncols()),
            });
        }
    }
    Ok(())
}

impl VectorValuedForm {
    pub fn new(target: QuadSpace, comps: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = comps.first().map(|c| c.nrows()).unwrap_or(0);
        check_components(d, target.dim(), &comps)?;
        let form = Self { target, comps };
        let scale = form.comps.iter().map(|c| c.amax()).fold(1.0, f64::max);
        let asym = form.symmetry_defect();
        if asym > 1e-12 * scale {
            return Err(GeometryError::NotSymmetric(asym));
        }
        Ok(form)
    }

    pub fn zero(domain_dim: usize, target: QuadSpace) -> Self {
        let comps = vec![DMatrix::zeros(domain_dim, domain_dim); target.dim()];
        Self { target, comps }
    }

    /// Builds the form from its values on basis pairs `(e_i, e_j)`, `i <= j`.
    pub fn from_basis_values<F>(domain_dim: usize, target: QuadSpace, mut value: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> DVector<f64>,
    {
        let p = target.dim();
        let mut comps = vec![DMatrix::zeros(domain_dim, domain_dim); p];
        for i in 0..domain_dim {
            for j in i..domain_dim {
                let val = value(i, j);
                if val.len() != p {
                    return Err(GeometryError::DimensionMismatch {
                        expected: p,
                        actual: val.len(),
                    });
                }
                for (k, comp) in comps.iter_mut().enumerate() {
                    comp[(i, j)] = val[k];
                    comp[(j, i)] = val[k];
                }
            }
        }
        Ok(Self { target, comps })
    }

    pub fn domain_dim(&self) -> usize {
        self.comps.first().map(|c| c.nrows()).unwrap_or(0)
    }

    pub fn target(&self) -> &QuadSpace {
        &self.target
    }

    pub fn components(&self) -> &[DMatrix<f64>] {
        &self.comps
    }

    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.comps.len(), self.comps.iter().map(|a| x.dot(&(a * y))))
    }

    pub fn eval_basis(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.comps.len(), self.comps.iter().map(|a| a[(i, j)]))
    }

    pub fn symmetry_defect(&self) -> f64 {
        self.comps
            .iter()
            .map(|a| (a - a.transpose()).amax())
            .fold(0.0, f64::max)
    }

    /// Sum of two forms with the same target.
    pub fn add(&self, other: &VectorValuedForm) -> Result<Self> {
        if self.target != other.target || self.domain_dim() != other.domain_dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.target.dim(),
                actual: other.target.dim(),
            });
        }
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect();
        Ok(Self {
            target: self.target.clone(),
            comps,
        })
    }

    /// Form `(X, Y) ↦ q(X, Y) · xi` for a symmetric scalar matrix `q`.
    pub fn rank_one(q: &DMatrix<f64>, xi: &DVector<f64>, target: QuadSpace) -> Result<Self> {
        if xi.len() != target.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: target.dim(),
                actual: xi.len(),
            });
        }
        let comps = xi.iter().map(|&c| q * c).collect();
        Self::new(target, comps)
    }

    /// Pulls back along a change of basis: the new form is `(X, Y) ↦ α(QX, QY)`.
    pub fn pulled_back(&self, q: &DMatrix<f64>) -> Self {
        Self {
            target: self.target.clone(),
            comps: self.comps.iter().map(|a| q.transpose() * a * q).collect(),
        }
    }
}

/// Which construction produced a [`PairedForm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FormKind {
    Beta,
    Gamma,
}

/// A bilinear map `V × V → W^{p,p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedForm {
    target: PairedSpace,
    comps: Vec<DMatrix<f64>>,
    kind: FormKind,
}

impl PairedForm {
    pub fn new(target: PairedSpace, comps: Vec<DMatrix<f64>>, kind: FormKind) -> Result<Self> {
        let d = comps.first().map(|c| c.nrows()).unwrap_or(0);
        check_components(d, target.total().dim(), &comps)?;
        Ok(Self { target, comps, kind })
    }

    pub fn domain_dim(&self) -> usize {
        self.comps.first().map(|c| c.nrows()).unwrap_or(0)
    }

    /// Complex dimension `n` of the domain `V^{2n}`.
    pub fn n(&self) -> usize {
        self.domain_dim() / 2
    }

    /// Dimension `p` of each half of the target.
    pub fn half_dim(&self) -> usize {
        self.target.base_dim()
    }

    pub fn target(&self) -> &PairedSpace {
        &self.target
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn components(&self) -> &[DMatrix<f64>] {
        &self.comps
    }

    pub fn eval(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.comps.len(), self.comps.iter().map(|a| x.dot(&(a * y))))
    }

    pub fn eval_basis(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_iterator(self.comps.len(), self.comps.iter().map(|a| a[(i, j)]))
    }

    /// `<<a, b>>` in the paired target.
    pub fn pair(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        self.target.total().inner_unchecked(a, b)
    }

    /// Matrix of `B_X = form(X, ·)`, one column per domain basis vector.
    pub fn left_operator(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.domain_dim();
        let mut m = DMatrix::zeros(self.comps.len(), d);
        for (k, a) in self.comps.iter().enumerate() {
            let row = x.transpose() * a;
            for j in 0..d {
                m[(k, j)] = row[j];
            }
        }
        m
    }

    /// All basis values `form(e_i, e_j)` as columns, index `i * d + j`.
    pub fn basis_values(&self) -> DMatrix<f64> {
        let d = self.domain_dim();
        DMatrix::from_fn(self.comps.len(), d * d, |k, col| self.comps[k][(col / d, col % d)])
    }

    /// Largest defect of `β(X,JY) = (η,-ξ)` and `β(Y,X) = (ξ,-η)` over basis pairs.
    pub fn beta_symmetry_defect(&self, j: &ComplexStructure) -> f64 {
        let p = self.half_dim();
        let jm = j.matrix();
        let mut defect: f64 = 0.0;
        for k in 0..p {
            let (xi, eta) = (&self.comps[k], &self.comps[p + k]);
            defect = defect
                .max((xi * jm - eta).amax())
                .max((eta * jm + xi).amax())
                .max((xi.transpose() - xi).amax())
                .max((eta.transpose() + eta).amax());
        }
        defect
    }

    /// Applies the same linear map to both halves of every value.
    pub fn map_halves(&self, map: &DMatrix<f64>) -> Self {
        let p = self.half_dim();
        assert_eq!(map.shape(), (p, p), "half map must be p x p");
        let d = self.domain_dim();
        let mut comps = vec![DMatrix::zeros(d, d); 2 * p];
        for half in 0..2 {
            for k in 0..p {
                let mut acc = DMatrix::zeros(d, d);
                for l in 0..p {
                    let c = map[(k, l)];
                    if c != 0.0 {
                        acc += &self.comps[half * p + l] * c;
                    }
                }
                comps[half * p + k] = acc;
            }
        }
        Self {
            target: self.target.clone(),
            comps,
            kind: self.kind,
        }
    }

    /// Re-expresses the form with each half written in the coordinates of
    /// `basis` (columns of the base space), under the induced metric.
    /// Values must lie in `basis ⊕ basis`.
    pub fn restricted_to(&self, basis: &DMatrix<f64>) -> Result<Self> {
        let base_gram = basis.transpose() * self.target.base().gram() * basis;
        let new_base = QuadSpace::new(base_gram.clone())?;
        let p = self.half_dim();
        let k = basis.ncols();
        // Coordinates c of y in span(basis) solve base_gram c = basisᵀ g y.
        let coord = base_gram
            .lu()
            .try_inverse()
            .ok_or(GeometryError::DegenerateSubspace)?
            * basis.transpose()
            * self.target.base().gram();
        let d = self.domain_dim();
        let mut comps = vec![DMatrix::zeros(d, d); 2 * k];
        for half in 0..2 {
            for a in 0..k {
                let mut acc = DMatrix::zeros(d, d);
                for l in 0..p {
                    let c = coord[(a, l)];
                    if c != 0.0 {
                        acc += &self.comps[half * p + l] * c;
                    }
                }
                comps[half * k + a] = acc;
            }
        }
        Ok(Self {
            target: PairedSpace::new(new_base),
            comps,
            kind: self.kind,
        })
    }
}

fn check_compatible(alpha: &VectorValuedForm, j: &ComplexStructure) -> Result<()> {
    if alpha.domain_dim() != j.real_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: j.real_dim(),
            actual: alpha.domain_dim(),
        });
    }
    Ok(())
}

/// `β(X,Y) = (α(X,Y) + α(JX,JY), α(X,JY) - α(JX,Y))`.
pub fn build_beta(alpha: &VectorValuedForm, j: &ComplexStructure) -> Result<PairedForm> {
    check_compatible(alpha, j)?;
    let jm = j.matrix();
    let jt = jm.transpose();
    let first = alpha.comps.iter().map(|a| a + &jt * a * jm);
    let second = alpha.comps.iter().map(|a| a * jm - &jt * a);
    let comps: Vec<_> = first.chain(second).collect();
    PairedForm::new(PairedSpace::new(alpha.target.clone()), comps, FormKind::Beta)
}

/// `γ(X,Y) = (α(X,Y), α(X,JY))`.
pub fn build_gamma(alpha: &VectorValuedForm, j: &ComplexStructure) -> Result<PairedForm> {
    check_compatible(alpha, j)?;
    let jm = j.matrix();
    let first = alpha.comps.iter().cloned();
    let second = alpha.comps.iter().map(|a| a * jm);
    let comps: Vec<_> = first.chain(second).collect();
    PairedForm::new(PairedSpace::new(alpha.target.clone()), comps, FormKind::Gamma)
}

/// `max |<<a(X,Y), b(Z,T)>> - <<a(X,T), b(Z,Y)>>|` over basis quadruples.
fn swap_defect(a: &PairedForm, b: &PairedForm) -> f64 {
    let d = a.domain_dim();
    let pairs = a.basis_values().transpose() * a.target.total().gram() * b.basis_values();
    let mut defect: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                for t in 0..d {
                    let lhs = pairs[(x * d + y, z * d + t)];
                    let rhs = pairs[(x * d + t, z * d + y)];
                    defect = defect.max((lhs - rhs).abs());
                }
            }
        }
    }
    defect
}

/// Largest defect of `<<β(X,Y),β(Z,T)>> = <<β(X,T),β(Z,Y)>>`; zero iff flat.
pub fn flatness_defect(form: &PairedForm) -> f64 {
    swap_defect(form, form)
}

/// Largest defect of `<<β(X,Y),γ(Z,T)>> = <<β(X,T),γ(Z,Y)>>`.
pub fn product_condition_defect(beta: &PairedForm, gamma: &PairedForm) -> Result<f64> {
    if beta.target != gamma.target || beta.domain_dim() != gamma.domain_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: beta.comps.len(),
            actual: gamma.comps.len(),
        });
    }
    Ok(swap_defect(beta, gamma))
}

/// `S(form)`, as a subspace of the paired target.
pub fn image_span(form: &PairedForm, rank_tol: f64) -> Subspace {
    Subspace::span(form.target.total(), &form.basis_values(), rank_tol)
        .expect("basis values live in the target")
}

/// `U₀ = π₁(S(form))`, as a subspace of the base space.
pub fn first_component_span(form: &PairedForm, rank_tol: f64) -> Subspace {
    let p = form.half_dim();
    let values = form.basis_values();
    let first = values.rows(0, p).into_owned();
    Subspace::span(form.target.base(), &first, rank_tol).expect("first halves live in the base")
}

/// Right kernel `{Y : form(X, Y) = 0 for all X}` in the domain.
pub fn kernel(form: &PairedForm, rank_tol: f64) -> Subspace {
    let d = form.domain_dim();
    let mut stacked = DMatrix::zeros(form.comps.len() * d, d);
    for (k, a) in form.comps.iter().enumerate() {
        stacked.view_mut((k * d, 0), (d, d)).copy_from(a);
    }
    let domain = QuadSpace::euclidean(d);
    Subspace::span(&domain, &null_space(&stacked, rank_tol), rank_tol).expect("kernel lives in the domain")
}

/// Kernel of `B_X = form(X, ·)` in the domain.
pub fn left_kernel_at(form: &PairedForm, x: &DVector<f64>, rank_tol: f64) -> Subspace {
    let d = form.domain_dim();
    let domain = QuadSpace::euclidean(d);
    Subspace::span(&domain, &null_space(&form.left_operator(x), rank_tol), rank_tol)
        .expect("kernel lives in the domain")
}

/// Samples random `X` and keeps the one maximising `rank B_X`.
pub fn find_regular_element<R: Rng + ?Sized>(
    form: &PairedForm,
    rng: &mut R,
    attempts: usize,
    rank_tol: f64,
) -> (DVector<f64>, usize) {
    let d = form.domain_dim();
    let mut best = (DVector::zeros(d), 0usize);
    for attempt in 0..attempts.max(1) {
        let x = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let rank = numerical_rank(&form.left_operator(&x), rank_tol);
        if attempt == 0 || rank > best.1 {
            best = (x, rank);
        }
    }
    best
}

/// Largest Euclidean distance of a generator of `S(form|V×ker B_X)` from
/// `B_X(V) ∩ B_X(V)^⊥`.
///
/// `X` is accepted as regular if no sampled element beats its rank.
pub fn moore_inclusion_defect<R: Rng + ?Sized>(
    form: &PairedForm,
    x: &DVector<f64>,
    rng: &mut R,
    rank_tol: f64,
) -> Result<f64> {
    let d = form.domain_dim();
    if x.len() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    let bx = form.left_operator(x);
    let rank = numerical_rank(&bx, rank_tol);
    let (_, max_rank) = find_regular_element(form, rng, DEFAULT_REGULAR_ATTEMPTS, rank_tol);
    if rank < max_rank {
        return Err(GeometryError::NotRegular { rank, max_rank });
    }
    let ker = left_kernel_at(form, x, rank_tol);
    if ker.dim() == 0 {
        return Ok(0.0);
    }
    let image = Subspace::span(form.target.total(), &bx, rank_tol)?;
    let isotropic = image.radical(rank_tol);
    let mut defect: f64 = 0.0;
    for k in ker.basis_vectors() {
        for i in 0..d {
            let mut e = DVector::zeros(d);
            e[i] = 1.0;
            let g = form.eval(&e, &k);
            defect = defect.max(isotropic.distance(&g));
        }
    }
    Ok(defect)
}

/// Outcome of the kernel-dimension bound for flat surjective forms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBoundReport {
    pub n: usize,
    pub p: usize,
    pub kernel_dim: usize,
    /// `2n - 2p`, possibly negative.
    pub bound: i64,
    pub pass: bool,
}

impl KernelBoundReport {
    pub fn evaluate(n: usize, p: usize, kernel_dim: usize) -> Self {
        let bound = 2 * n as i64 - 2 * p as i64;
        Self {
            n,
            p,
            kernel_dim,
            bound,
            pass: kernel_dim as i64 >= bound,
        }
    }
}

/// Checks `dim N(β) ≥ 2n - 2p` for a flat form onto all of `W^{p,p}`.
pub fn check_surjective_kernel_bound(form: &PairedForm, policy: &TolerancePolicy) -> Result<KernelBoundReport> {
    let flat = flatness_defect(form);
    if flat > policy.defect_tol {
        return Err(GeometryError::NotFlat(flat));
    }
    let p = form.half_dim();
    let image_dim = image_span(form, policy.rank_tol).dim();
    if image_dim != 2 * p {
        return Err(GeometryError::NotSurjective {
            image_dim,
            target_dim: 2 * p,
        });
    }
    Ok(KernelBoundReport::evaluate(
        form.n(),
        p,
        kernel(form, policy.rank_tol).dim(),
    ))
}

/// Summary of a paired form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormAnalysis {
    pub image: Subspace,
    pub first_component: Subspace,
    pub s: usize,
    pub kernel: Subspace,
    pub regular_element: DVector<f64>,
    pub regular_rank: usize,
    pub degenerate: bool,
    pub flatness_defect: f64,
}

impl FormAnalysis {
    pub fn image_dim(&self) -> usize {
        self.image.dim()
    }
}

pub fn analyze<R: Rng + ?Sized>(form: &PairedForm, rng: &mut R, policy: &TolerancePolicy) -> FormAnalysis {
    let image = image_span(form, policy.rank_tol);
    let first_component = first_component_span(form, policy.rank_tol);
    let (regular_element, regular_rank) =
        find_regular_element(form, rng, DEFAULT_REGULAR_ATTEMPTS, policy.rank_tol);
    FormAnalysis {
        degenerate: image.is_degenerate(policy.rank_tol),
        s: first_component.dim(),
        kernel: kernel(form, policy.rank_tol),
        flatness_defect: flatness_defect(form),
        image,
        first_component,
        regular_element,
        regular_rank,
    }
}
