//! Charted surfaces, product immersions into flat Lorentzian space, and the
//! pointwise extrinsic data (tangent frame, normal frame, second
//! fundamental form) they induce.
//!
//! Parameters come in pairs `(u_{2k}, u_{2k+1})`; after Gram-Schmidt the
//! complex structure rotates the first vector of each pair onto the second.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeometryError, Result};
use crate::flat_forms::VectorValuedForm;
use crate::kaehler::ComplexStructure;
use crate::lightcone::LightConeFrame;
use crate::linalg::{numerical_rank, symmetric_eigen, QuadSpace, Subspace};

/// Distance kept from the poles of the latitude-longitude sphere chart.
pub const POLE_MARGIN: f64 = 0.1;

/// Value, first and second derivatives of a map at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: DVector<f64>,
    pub first: Vec<DVector<f64>>,
    /// `second[i][j] = ∂_i ∂_j F`.
    pub second: Vec<Vec<DVector<f64>>>,
}

/// A parametrised immersion into a flat space with analytic 2-jets.
pub trait Immersion {
    fn ambient(&self) -> &QuadSpace;
    fn param_dim(&self) -> usize;
    fn value(&self, params: &[f64]) -> DVector<f64>;
    fn jet(&self, params: &[f64]) -> Jet;
}

/// Jet recovered from values alone by central differences with step `h`.
pub fn finite_difference_jet<I: Immersion + ?Sized>(imm: &I, params: &[f64], h: f64) -> Jet {
    let d = imm.param_dim();
    let at = |shifts: &[(usize, f64)]| {
        let mut p = params.to_vec();
        for &(i, s) in shifts {
            p[i] += s;
        }
        imm.value(&p)
    };
    let value = imm.value(params);
    let first = (0..d)
        .map(|i| (at(&[(i, h)]) - at(&[(i, -h)])) / (2.0 * h))
        .collect();
    let mut second = vec![vec![DVector::zeros(value.len()); d]; d];
    for i in 0..d {
        second[i][i] = (at(&[(i, h)]) - &value * 2.0 + at(&[(i, -h)])) / (h * h);
        for j in 0..i {
            let mixed = (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                + at(&[(i, -h), (j, -h)]))
                / (4.0 * h * h);
            second[i][j] = mixed.clone();
            second[j][i] = mixed;
        }
    }
    Jet { value, first, second }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ChartKind {
    Sphere,
    Hyperbolic,
}

/// A round sphere in `ℝ³` or the upper hyperboloid in `𝕃³`.
///
/// Sphere: `r (cos a cos b, sin a cos b, sin b)`.
/// Hyperbolic plane: `r (cosh a cosh b, sinh a cosh b, sinh b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceChart {
    kind: ChartKind,
    curvature: f64,
    radius: f64,
    ambient: QuadSpace,
}

impl SurfaceChart {
    pub fn sphere(c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(GeometryError::InvalidChart(format!(
                "sphere curvature must be positive, got {c}"
            )));
        }
        Ok(Self {
            kind: ChartKind::Sphere,
            curvature: c,
            radius: 1.0 / c.sqrt(),
            ambient: QuadSpace::euclidean(3),
        })
    }

    pub fn hyperbolic(c: f64) -> Result<Self> {
        if !(c < 0.0) || !c.is_finite() {
            return Err(GeometryError::InvalidChart(format!(
                "hyperbolic curvature must be negative, got {c}"
            )));
        }
        Ok(Self {
            kind: ChartKind::Hyperbolic,
            curvature: c,
            radius: 1.0 / (-c).sqrt(),
            ambient: QuadSpace::minkowski(3),
        })
    }

    pub fn kind(&self) -> ChartKind {
        self.kind
    }

    pub fn curvature(&self) -> f64 {
        self.curvature
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// `r²` for spheres, `-r²` for the hyperbolic plane: the value of `<g, g>`.
    pub fn signed_radius_sq(&self) -> f64 {
        match self.kind {
            ChartKind::Sphere => self.radius * self.radius,
            ChartKind::Hyperbolic => -self.radius * self.radius,
        }
    }

    /// Parameter rectangle `[(a_lo, a_hi), (b_lo, b_hi)]`.
    pub fn domain(&self) -> [(f64, f64); 2] {
        match self.kind {
            ChartKind::Sphere => [(-3.0, 3.0), (-FRAC_PI_2 + POLE_MARGIN, FRAC_PI_2 - POLE_MARGIN)],
            ChartKind::Hyperbolic => [(-1.0, 1.0), (-1.0, 1.0)],
        }
    }

    /// `k × k` interior grid of the parameter rectangle.
    pub fn grid(&self, k: usize) -> Vec<[f64; 2]> {
        let [(a0, a1), (b0, b1)] = self.domain();
        let node = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * (i as f64 + 1.0) / (k as f64 + 1.0);
        let mut pts = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                pts.push([node(a0, a1, i), node(b0, b1, j)]);
            }
        }
        pts
    }

    /// `[g, g_a, g_b, g_aa, g_ab, g_bb]`.
    pub fn derivatives(&self, a: f64, b: f64) -> [[f64; 3]; 6] {
        let r = self.radius;
        match self.kind {
            ChartKind::Sphere => {
                let (sa, ca) = a.sin_cos();
                let (sb, cb) = b.sin_cos();
                [
                    [r * ca * cb, r * sa * cb, r * sb],
                    [-r * sa * cb, r * ca * cb, 0.0],
                    [-r * ca * sb, -r * sa * sb, r * cb],
                    [-r * ca * cb, -r * sa * cb, 0.0],
                    [r * sa * sb, -r * ca * sb, 0.0],
                    [-r * ca * cb, -r * sa * cb, -r * sb],
                ]
            }
            ChartKind::Hyperbolic => {
                let (sa, ca) = (a.sinh(), a.cosh());
                let (sb, cb) = (b.sinh(), b.cosh());
                [
                    [r * ca * cb, r * sa * cb, r * sb],
                    [r * sa * cb, r * ca * cb, 0.0],
                    [r * ca * sb, r * sa * sb, r * cb],
                    [r * ca * cb, r * sa * cb, 0.0],
                    [r * sa * sb, r * ca * sb, 0.0],
                    [r * ca * cb, r * sa * cb, r * sb],
                ]
            }
        }
    }

    /// `|<g, g> - signed r²|` at a parameter point.
    pub fn on_surface_defect(&self, a: f64, b: f64) -> f64 {
        let g = DVector::from_column_slice(&self.derivatives(a, b)[0]);
        (self.ambient.inner_unchecked(&g, &g) - self.signed_radius_sq()).abs()
    }

    /// Gauss curvature from the analytic jet via the Gauss equation.
    pub fn gauss_curvature(&self, a: f64, b: f64, rank_tol: f64) -> Result<f64> {
        let data = PointData::from_immersion(self, &[a, b], rank_tol)?;
        let mut s = DVector::zeros(2);
        s[0] = 1.0;
        data.sectional_curvature_j(&s)
    }
}

impl Immersion for SurfaceChart {
    fn ambient(&self) -> &QuadSpace {
        &self.ambient
    }

    fn param_dim(&self) -> usize {
        2
    }

    fn value(&self, params: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(&self.derivatives(params[0], params[1])[0])
    }

    fn jet(&self, params: &[f64]) -> Jet {
        let d = self.derivatives(params[0], params[1]);
        let v = |k: usize| DVector::from_column_slice(&d[k]);
        Jet {
            value: v(0),
            first: vec![v(1), v(2)],
            second: vec![vec![v(3), v(4)], vec![v(4), v(5)]],
        }
    }
}

/// `F(x_1, ..., x_n) = (g_1(x_1), ..., g_n(x_n))` into `𝕃^{3n}`, with the
/// hyperbolic factor first so the block metric is `diag(-1, 1, ..., 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductImmersion {
    factors: Vec<SurfaceChart>,
    ambient: QuadSpace,
}

impl ProductImmersion {
    pub fn new(factors: Vec<SurfaceChart>) -> Result<Self> {
        if factors.is_empty() {
            return Err(GeometryError::InvalidChart("no factors".into()));
        }
        if factors[0].kind() != ChartKind::Hyperbolic {
            return Err(GeometryError::InvalidChart("first factor must be hyperbolic".into()));
        }
        if factors[1..].iter().any(|f| f.kind() != ChartKind::Sphere) {
            return Err(GeometryError::InvalidChart("factors after the first must be spheres".into()));
        }
        let ambient = QuadSpace::minkowski(3 * factors.len());
        Ok(Self { factors, ambient })
    }

    pub fn factors(&self) -> &[SurfaceChart] {
        &self.factors
    }

    /// Number of factors, i.e. complex dimension `n`.
    pub fn n(&self) -> usize {
        self.factors.len()
    }

    /// `-r₁² + Σ_j r_j²`, evaluated as `Σ_j 1/c_j + 1/c₁` with the sphere
    /// terms summed first.
    pub fn radius_relation(&self) -> f64 {
        let spheres: f64 = self.factors[1..].iter().map(|f| 1.0 / f.curvature()).sum();
        spheres + 1.0 / self.factors[0].curvature()
    }

    /// `-r₁² + Σ_j r_j²` from the chart radii.
    pub fn radius_relation_from_radii(&self) -> f64 {
        self.factors.iter().map(|f| f.signed_radius_sq()).sum()
    }

    pub fn curvatures(&self) -> Vec<f64> {
        self.factors.iter().map(|f| f.curvature()).collect()
    }
}

impl Immersion for ProductImmersion {
    fn ambient(&self) -> &QuadSpace {
        &self.ambient
    }

    fn param_dim(&self) -> usize {
        2 * self.factors.len()
    }

    fn value(&self, params: &[f64]) -> DVector<f64> {
        let mut out = DVector::zeros(self.ambient.dim());
        for (k, f) in self.factors.iter().enumerate() {
            let g = f.derivatives(params[2 * k], params[2 * k + 1])[0];
            out.rows_mut(3 * k, 3).copy_from_slice(&g);
        }
        out
    }

    fn jet(&self, params: &[f64]) -> Jet {
        let dim = self.ambient.dim();
        let d = self.param_dim();
        let mut first = vec![DVector::zeros(dim); d];
        let mut second = vec![vec![DVector::zeros(dim); d]; d];
        let embed = |k: usize, x: &[f64; 3]| {
            let mut v = DVector::zeros(dim);
            v.rows_mut(3 * k, 3).copy_from_slice(x);
            v
        };
        for (k, f) in self.factors.iter().enumerate() {
            let der = f.derivatives(params[2 * k], params[2 * k + 1]);
            let (a, b) = (2 * k, 2 * k + 1);
            first[a] = embed(k, &der[1]);
            first[b] = embed(k, &der[2]);
            second[a][a] = embed(k, &der[3]);
            second[a][b] = embed(k, &der[4]);
            second[b][a] = embed(k, &der[4]);
            second[b][b] = embed(k, &der[5]);
        }
        Jet {
            value: self.value(params),
            first,
            second,
        }
    }
}

/// `ψ ∘ ι` for the linear inclusion `ι: ℝ^{2n} → ℝ^{2n+p}`, `x ↦ (x, 0)`:
/// a totally geodesic conformal Kaehler submanifold with `λ ≡ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatLift {
    frame: LightConeFrame,
    n: usize,
    p: usize,
}

impl FlatLift {
    pub fn new(frame: LightConeFrame, n: usize, p: usize) -> Result<Self> {
        if frame.m() != 2 * n + p {
            return Err(GeometryError::DimensionMismatch {
                expected: 2 * n + p,
                actual: frame.m(),
            });
        }
        Ok(Self { frame, n, p })
    }

    pub fn frame(&self) -> &LightConeFrame {
        &self.frame
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn inclusion(&self, params: &[f64]) -> DVector<f64> {
        let mut x = DVector::zeros(2 * self.n + self.p);
        for (i, &t) in params.iter().enumerate() {
            x[i] = t;
        }
        x
    }
}

impl Immersion for FlatLift {
    fn ambient(&self) -> &QuadSpace {
        self.frame.ambient()
    }

    fn param_dim(&self) -> usize {
        2 * self.n
    }

    fn value(&self, params: &[f64]) -> DVector<f64> {
        self.frame.psi(&self.inclusion(params)).expect("inclusion has the frame dimension")
    }

    fn jet(&self, params: &[f64]) -> Jet {
        let x = self.inclusion(params);
        let jac = self.frame.psi_jacobian(&x).expect("inclusion has the frame dimension");
        let d = self.param_dim();
        let w = self.frame.w();
        let dim = w.len();
        let first = (0..d).map(|i| jac.column(i).into_owned()).collect();
        let second = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { -w } else { DVector::zeros(dim) })
                    .collect()
            })
            .collect();
        Jet {
            value: self.value(params),
            first,
            second,
        }
    }
}

/// Extrinsic data of an immersion at one point, in an orthonormal tangent
/// frame and an orthonormal normal frame.
#[derive(Debug, Clone)]
pub struct PointData {
    pub params: Vec<f64>,
    pub ambient: QuadSpace,
    /// `F` at the point.
    pub position: DVector<f64>,
    pub coord_tangents: Vec<DVector<f64>>,
    /// `<∂_i F, ∂_j F>`.
    pub coord_metric: DMatrix<f64>,
    /// Orthonormal `e_a = Σ_i T_{ia} ∂_i F`.
    pub tangent_basis: Vec<DVector<f64>>,
    /// `T`.
    pub frame_change: DMatrix<f64>,
    /// Gram matrix of `tangent_basis`.
    pub metric: DMatrix<f64>,
    /// Ambient normal vectors with `<ν_k, ν_l> = ε_k δ_{kl}`, negative `ε` first.
    pub normal_frame: Vec<DVector<f64>>,
    /// `diag(ε)`.
    pub normal_space: QuadSpace,
    /// Second fundamental form in `tangent_basis`, valued in normal coordinates.
    pub alpha: VectorValuedForm,
    pub j: ComplexStructure,
    /// `F` in normal coordinates.
    pub position_normal: DVector<f64>,
}

/// The algebraic content of a point: `α`, `J`, the tangent metric and the
/// light-like vector `w` with `<α(X,Y), w> = -(X,Y)`.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub alpha: VectorValuedForm,
    pub j: ComplexStructure,
    pub metric: DMatrix<f64>,
    pub w: DVector<f64>,
}

impl PointData {
    pub fn from_immersion<I: Immersion + ?Sized>(imm: &I, params: &[f64], rank_tol: f64) -> Result<Self> {
        Self::from_jet(imm.ambient(), params, &imm.jet(params), rank_tol)
    }

    /// Same as [`PointData::from_immersion`] with the jet replaced by central
    /// differences of step `h`.
    pub fn from_immersion_fd<I: Immersion + ?Sized>(imm: &I, params: &[f64], h: f64, rank_tol: f64) -> Result<Self> {
        Self::from_jet(imm.ambient(), params, &finite_difference_jet(imm, params, h), rank_tol)
    }

    pub fn from_jet(ambient: &QuadSpace, params: &[f64], jet: &Jet, rank_tol: f64) -> Result<Self> {
        let d = jet.first.len();
        if d == 0 || d % 2 != 0 {
            return Err(GeometryError::InvalidChart(format!("parameter dimension {d} is not even")));
        }
        let g = ambient;
        let coord_metric = DMatrix::from_fn(d, d, |i, j| g.inner_unchecked(&jet.first[i], &jet.first[j]));

        // Gram-Schmidt in the induced metric, tracking e = ∂ T.
        let mut frame_change = DMatrix::<f64>::zeros(d, d);
        for a in 0..d {
            let mut col = DVector::zeros(d);
            col[a] = 1.0;
            for b in 0..a {
                let prev = frame_change.column(b).into_owned();
                let proj = col.dot(&(&coord_metric * &prev));
                col -= prev * proj;
            }
            let norm_sq = col.dot(&(&coord_metric * &col));
            if !(norm_sq > rank_tol) {
                return Err(GeometryError::InvalidChart(format!(
                    "induced metric is not positive definite at tangent {a}"
                )));
            }
            frame_change.set_column(a, &(col / norm_sq.sqrt()));
        }
        let tangent_basis: Vec<DVector<f64>> = (0..d)
            .map(|a| {
                (0..d).fold(DVector::zeros(g.dim()), |acc, i| acc + &jet.first[i] * frame_change[(i, a)])
            })
            .collect();
        let metric = DMatrix::from_fn(d, d, |a, b| g.inner_unchecked(&tangent_basis[a], &tangent_basis[b]));

        let tangent = Subspace::span_vectors(g, &tangent_basis, rank_tol)?;
        if tangent.dim() != d {
            return Err(GeometryError::DependentBasis {
                rank: tangent.dim(),
                dim: d,
            });
        }
        let normal = tangent.orthogonal_complement(rank_tol);
        let (values, vectors) = symmetric_eigen(&normal.restricted_gram());
        let mut normal_frame = Vec::with_capacity(values.len());
        let mut signs = Vec::with_capacity(values.len());
        for (k, &lam) in values.iter().enumerate() {
            if lam.abs() <= rank_tol {
                return Err(GeometryError::DegenerateSubspace);
            }
            let vec = normal.basis() * vectors.column(k) / lam.abs().sqrt();
            normal_frame.push(vec);
            signs.push(lam.signum());
        }
        let normal_space = QuadSpace::diagonal(&signs)?;

        let coords = |x: &DVector<f64>| {
            DVector::from_iterator(
                normal_frame.len(),
                normal_frame.iter().zip(&signs).map(|(nu, s)| s * g.inner_unchecked(x, nu)),
            )
        };
        let alpha = VectorValuedForm::from_basis_values(d, normal_space.clone(), |a, b| {
            let mut second = DVector::zeros(g.dim());
            for i in 0..d {
                for k in 0..d {
                    let c = frame_change[(i, a)] * frame_change[(k, b)];
                    if c != 0.0 {
                        second += &jet.second[i][k] * c;
                    }
                }
            }
            coords(&second)
        })?;
        let position_normal = coords(&jet.value);

        Ok(Self {
            params: params.to_vec(),
            ambient: g.clone(),
            position: jet.value.clone(),
            coord_tangents: jet.first.clone(),
            coord_metric,
            tangent_basis,
            frame_change,
            metric,
            normal_frame,
            normal_space,
            alpha,
            j: ComplexStructure::standard(d / 2),
            position_normal,
        })
    }

    pub fn n(&self) -> usize {
        self.tangent_basis.len() / 2
    }

    /// Ambient vector with the given normal coordinates.
    pub fn from_normal_coords(&self, c: &DVector<f64>) -> DVector<f64> {
        self.normal_frame
            .iter()
            .zip(c.iter())
            .fold(DVector::zeros(self.ambient.dim()), |acc, (nu, &ck)| acc + nu * ck)
    }

    /// `α(e_a, e_b)` as an ambient vector.
    pub fn alpha_ambient(&self, a: usize, b: usize) -> DVector<f64> {
        self.from_normal_coords(&self.alpha.eval_basis(a, b))
    }

    pub fn shape_data(&self) -> ShapeData {
        ShapeData {
            alpha: self.alpha.clone(),
            j: self.j.clone(),
            metric: self.metric.clone(),
            w: self.position_normal.clone(),
        }
    }

    pub fn sectional_curvature_j(&self, s: &DVector<f64>) -> Result<f64> {
        sectional_curvature_j(&self.alpha, &self.j, &self.metric, s)
    }

    /// `max |<α(X,Y), F> + (X,Y)|` over the tangent basis.
    pub fn condition_defect(&self) -> f64 {
        condition_defect(&self.alpha, &self.metric, &self.position_normal)
    }
}

/// `max |<α(X,Y), w> + (X,Y)|` over basis pairs.
pub fn condition_defect(alpha: &VectorValuedForm, metric: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    let d = alpha.domain_dim();
    let g = alpha.target();
    let mut defect: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            defect = defect.max((g.inner_unchecked(&alpha.eval_basis(a, b), w) + metric[(a, b)]).abs());
        }
    }
    defect
}

/// `K(S, JS) = (<α(S,S), α(JS,JS)> - <α(S,JS), α(S,JS)>) / (|S|²|JS|² - (S,JS)²)`.
pub fn sectional_curvature_j(
    alpha: &VectorValuedForm,
    j: &ComplexStructure,
    metric: &DMatrix<f64>,
    s: &DVector<f64>,
) -> Result<f64> {
    if s.len() != alpha.domain_dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: alpha.domain_dim(),
            actual: s.len(),
        });
    }
    if s.norm() == 0.0 {
        return Err(GeometryError::ZeroVector);
    }
    let js = j.matrix() * s;
    let g = alpha.target();
    let a_ss = alpha.eval(s, s);
    let numerator = g.inner_unchecked(&a_ss, &alpha.eval(&js, &js)) - {
        let a_sj = alpha.eval(s, &js);
        g.inner_unchecked(&a_sj, &a_sj)
    };
    let ss = s.dot(&(metric * s));
    let jj = js.dot(&(metric * &js));
    let sj = s.dot(&(metric * &js));
    Ok(numerator / (ss * jj - sj * sj))
}

/// `R(X,Y,Z,T) = <α(X,T), α(Y,Z)> - <α(X,Z), α(Y,T)>` on basis vectors,
/// so that `R(X,Y,Y,X)` is the sectional curvature numerator.
pub fn curvature_tensor(alpha: &VectorValuedForm) -> Vec<f64> {
    let d = alpha.domain_dim();
    let g = alpha.target();
    let vals: Vec<DVector<f64>> = (0..d * d).map(|k| alpha.eval_basis(k / d, k % d)).collect();
    let ip = |a: usize, b: usize, c: usize, e: usize| g.inner_unchecked(&vals[a * d + b], &vals[c * d + e]);
    let mut out = vec![0.0; d * d * d * d];
    for x in 0..d {
        for y in 0..d {
            for z in 0..d {
                for t in 0..d {
                    out[((x * d + y) * d + z) * d + t] = ip(x, t, y, z) - ip(x, z, y, t);
                }
            }
        }
    }
    out
}

/// Shape operator `A_ξ` in the tangent basis: `(A_ξ X, Y) = <α(X,Y), ξ>`.
pub fn shape_operator(alpha: &VectorValuedForm, metric: &DMatrix<f64>, xi: &DVector<f64>) -> DMatrix<f64> {
    let d = alpha.domain_dim();
    let g = alpha.target();
    let h = DMatrix::from_fn(d, d, |a, b| g.inner_unchecked(&alpha.eval_basis(a, b), xi));
    metric.clone().lu().solve(&h).expect("tangent metric is positive definite")
}

/// Largest entry of `[A_ξ, A_η]` over pairs of normal basis vectors.
pub fn normal_curvature_defect(alpha: &VectorValuedForm, metric: &DMatrix<f64>) -> f64 {
    let q = alpha.target().dim();
    let ops: Vec<DMatrix<f64>> = (0..q)
        .map(|k| {
            let mut e = DVector::zeros(q);
            e[k] = 1.0;
            shape_operator(alpha, metric, &e)
        })
        .collect();
    let mut defect: f64 = 0.0;
    for a in 0..q {
        for b in 0..a {
            defect = defect.max((&ops[a] * &ops[b] - &ops[b] * &ops[a]).amax());
        }
    }
    defect
}

pub fn shape_operator_rank(alpha: &VectorValuedForm, metric: &DMatrix<f64>, xi: &DVector<f64>, rank_tol: f64) -> usize {
    numerical_rank(&shape_operator(alpha, metric, xi), rank_tol)
}
