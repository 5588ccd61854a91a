//! The embedding `ψ(x) = v + Cx - ½|x|² w` of `ℝ^m` into the light cone of
//! `𝕃^{m+2}`, the projection `π(y) = y / <y, w>`, and the correspondence
//! `F = ψ∘f / λ` between conformal immersions into Euclidean space and
//! isometric immersions into the light cone.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::error::{GeometryError, Result};
use crate::linalg::{QuadSpace, Subspace};

/// `(v, w, C)` with `<v,v> = <w,w> = 0`, `<v,w> = 1` and `C` an isometry
/// of `ℝ^m` onto `{v, w}^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct LightConeFrame {
    ambient: QuadSpace,
    v: DVector<f64>,
    w: DVector<f64>,
    c: DMatrix<f64>,
}

/// Random element of the Lorentz group of `diag(-1, 1, ..., 1)`: spatial
/// rotation, boost along the first spatial axis, spatial rotation.
pub fn random_lorentz_transform<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(dim >= 2, "need at least one spatial direction");
    let mut rotation = || {
        let k = dim - 1;
        let g = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = g.qr().q();
        let mut r = DMatrix::identity(dim, dim);
        r.view_mut((1, 1), (k, k)).copy_from(&q);
        r
    };
    let (r1, r2) = (rotation(), rotation());
    let eta: f64 = rng.sample(Uniform::new(-1.0, 1.0).expect("valid range"));
    let mut boost = DMatrix::identity(dim, dim);
    boost[(0, 0)] = eta.cosh();
    boost[(1, 1)] = eta.cosh();
    boost[(0, 1)] = eta.sinh();
    boost[(1, 0)] = eta.sinh();
    r1 * boost * r2
}

impl LightConeFrame {
    /// `v = -(e₀ - e₁)/2`, `w = e₀ + e₁`, `C e_i = e_{i+1}`.
    pub fn canonical(m: usize) -> Self {
        let dim = m + 2;
        let mut v = DVector::zeros(dim);
        v[0] = -0.5;
        v[1] = 0.5;
        let mut w = DVector::zeros(dim);
        w[0] = 1.0;
        w[1] = 1.0;
        let mut c = DMatrix::zeros(dim, m);
        for i in 0..m {
            c[(i + 2, i)] = 1.0;
        }
        Self {
            ambient: QuadSpace::minkowski(dim),
            v,
            w,
            c,
        }
    }

    /// Canonical frame, optionally moved by a random Lorentz transformation.
    pub fn make<R: Rng + ?Sized>(m: usize, rng: Option<&mut R>) -> Self {
        let frame = Self::canonical(m);
        match rng {
            Some(rng) => frame.transformed(&random_lorentz_transform(m + 2, rng)),
            None => frame,
        }
    }

    pub fn new(ambient: QuadSpace, v: DVector<f64>, w: DVector<f64>, c: DMatrix<f64>, tol: f64) -> Result<Self> {
        let dim = ambient.dim();
        if v.len() != dim || w.len() != dim || c.nrows() != dim || c.ncols() + 2 != dim {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        let frame = Self { ambient, v, w, c };
        let defect = frame.invariant_defect();
        if defect > tol {
            return Err(GeometryError::InvalidConfig(format!(
                "light-cone frame invariants violated by {defect:.3e}"
            )));
        }
        Ok(frame)
    }

    /// Applies an isometry `Λ` of the ambient metric to every frame vector.
    pub fn transformed(&self, lambda: &DMatrix<f64>) -> Self {
        Self {
            ambient: self.ambient.clone(),
            v: lambda * &self.v,
            w: lambda * &self.w,
            c: lambda * &self.c,
        }
    }

    /// Same frame with `(v, w)` replaced by `(-v, -w)`.
    pub fn with_flipped_w(&self) -> Self {
        Self {
            ambient: self.ambient.clone(),
            v: -&self.v,
            w: -&self.w,
            c: self.c.clone(),
        }
    }

    pub fn ambient(&self) -> &QuadSpace {
        &self.ambient
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn w(&self) -> &DVector<f64> {
        &self.w
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Dimension `m` of the Euclidean space.
    pub fn m(&self) -> usize {
        self.c.ncols()
    }

    /// Largest violation of the frame invariants.
    pub fn invariant_defect(&self) -> f64 {
        let g = &self.ambient;
        let mut defect = g.inner_unchecked(&self.v, &self.v).abs();
        defect = defect.max(g.inner_unchecked(&self.w, &self.w).abs());
        defect = defect.max((g.inner_unchecked(&self.v, &self.w) - 1.0).abs());
        let m = self.m();
        let ctc = self.c.transpose() * g.gram() * &self.c;
        defect = defect.max((ctc - DMatrix::identity(m, m)).amax());
        let cv = self.c.transpose() * g.gram() * &self.v;
        let cw = self.c.transpose() * g.gram() * &self.w;
        defect.max(cv.amax()).max(cw.amax())
    }

    fn check_euclidean(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.m() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.m(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    fn check_ambient(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.ambient.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.ambient.dim(),
                actual: y.len(),
            });
        }
        Ok(())
    }

    pub fn psi(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_euclidean(x)?;
        Ok(&self.v + &self.c * x - &self.w * (0.5 * x.norm_squared()))
    }

    /// `dψ_x = C - w xᵀ`.
    pub fn psi_jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_euclidean(x)?;
        Ok(&self.c - &self.w * x.transpose())
    }

    /// `d²ψ(X, Y) = -<X, Y> w`, independent of the base point.
    pub fn psi_hessian(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_euclidean(x)?;
        self.check_euclidean(y)?;
        Ok(&self.w * (-x.dot(y)))
    }

    /// Normal space of `ψ` at `x`: the orthogonal complement of `dψ_x(ℝ^m)`.
    pub fn psi_normal_space(&self, x: &DVector<f64>, rank_tol: f64) -> Result<Subspace> {
        let jac = self.psi_jacobian(x)?;
        Ok(Subspace::span(&self.ambient, &jac, rank_tol)?.orthogonal_complement(rank_tol))
    }

    /// Normal component of `d²ψ(X, Y)`.
    pub fn psi_second_fundamental_form(
        &self,
        x: &DVector<f64>,
        dx: &DVector<f64>,
        dy: &DVector<f64>,
        rank_tol: f64,
    ) -> Result<DVector<f64>> {
        let normal = self.psi_normal_space(x, rank_tol)?;
        normal.project(&self.psi_hessian(dx, dy)?, rank_tol)
    }

    /// `π(y) = y / <y, w>`.
    pub fn pi_projection(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_ambient(y)?;
        let yw = self.ambient.inner_unchecked(y, &self.w);
        if yw.abs() <= f64::EPSILON * y.norm() * self.w.norm() {
            return Err(GeometryError::ExcludedRay);
        }
        Ok(y / yw)
    }

    /// `x` with `ψ(x) = π(y)`, read off as `<C e_i, π(y) - v>`.
    pub fn psi_inverse(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        let slice = self.pi_projection(y)?;
        Ok(self.c.transpose() * self.ambient.gram() * (slice - &self.v))
    }

    /// `F = ψ(f) / λ` at every sample.
    pub fn conformal_to_isometric(&self, f: &[DVector<f64>], lambda: &[f64]) -> Result<Vec<DVector<f64>>> {
        if f.len() != lambda.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: f.len(),
                actual: lambda.len(),
            });
        }
        f.iter()
            .zip(lambda)
            .map(|(x, &l)| {
                if !(l > 0.0) {
                    return Err(GeometryError::NonPositiveFactor(l));
                }
                Ok(self.psi(x)? / l)
            })
            .collect()
    }

    /// `(f, λ)` with `ψ∘f = π∘F` and `λ = 1 / <F, w>`.
    pub fn isometric_to_conformal(&self, big_f: &[DVector<f64>]) -> Result<(Vec<DVector<f64>>, Vec<f64>)> {
        let mut f = Vec::with_capacity(big_f.len());
        let mut lambda = Vec::with_capacity(big_f.len());
        for y in big_f {
            self.check_ambient(y)?;
            let yw = self.ambient.inner_unchecked(y, &self.w);
            if !(yw > 0.0) {
                return Err(GeometryError::NonPositiveFactor(yw));
            }
            f.push(self.psi_inverse(y)?);
            lambda.push(1.0 / yw);
        }
        Ok((f, lambda))
    }
}

/// Sampled conformal immersion `f` with factor `λ` and its light-cone lift `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalPair {
    pub f: Vec<DVector<f64>>,
    pub lambda: Vec<f64>,
    pub big_f: Vec<DVector<f64>>,
}

impl ConformalPair {
    pub fn from_isometric(frame: &LightConeFrame, big_f: Vec<DVector<f64>>) -> Result<Self> {
        let (f, lambda) = frame.isometric_to_conformal(&big_f)?;
        Ok(Self { f, lambda, big_f })
    }

    pub fn from_conformal(frame: &LightConeFrame, f: Vec<DVector<f64>>, lambda: Vec<f64>) -> Result<Self> {
        let big_f = frame.conformal_to_isometric(&f, &lambda)?;
        Ok(Self { f, lambda, big_f })
    }

    /// Largest violation of `λ > 0`, `<F,F> = 0` and `<F,w> = 1/λ`.
    pub fn invariant_defect(&self, frame: &LightConeFrame) -> f64 {
        let g = frame.ambient();
        self.big_f
            .iter()
            .zip(&self.lambda)
            .map(|(y, &l)| {
                let null = g.inner_unchecked(y, y).abs();
                let factor = (g.inner_unchecked(y, frame.w()) - 1.0 / l).abs();
                let sign = if l > 0.0 { 0.0 } else { f64::INFINITY };
                null.max(factor).max(sign)
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng, m: usize) -> DVector<f64> {
        DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn canonical_frame_invariants() {
        let f = LightConeFrame::canonical(2);
        let g = f.ambient();
        assert_eq!(g.inner(f.v(), f.w()).unwrap(), 1.0);
        assert_eq!(g.inner(f.v(), f.v()).unwrap(), 0.0);
        assert_eq!(f.invariant_defect(), 0.0);
    }

    #[test]
    fn randomized_frame_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [2, 5, 10] {
            let f = LightConeFrame::make(m, Some(&mut rng));
            assert!(f.invariant_defect() < 1e-12, "m={m}: {}", f.invariant_defect());
        }
    }

    #[test]
    fn frame_validation() {
        let canon = LightConeFrame::canonical(2);
        let ok = LightConeFrame::new(
            canon.ambient().clone(),
            canon.v().clone(),
            canon.w().clone(),
            canon.c().clone(),
            1e-12,
        );
        assert!(ok.is_ok());
        let bad = LightConeFrame::new(
            canon.ambient().clone(),
            canon.v() * 2.0,
            canon.w().clone(),
            canon.c().clone(),
            1e-12,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn psi_is_lightlike_on_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = LightConeFrame::make(4, Some(&mut rng));
        assert!((f.psi(&DVector::zeros(4)).unwrap() - f.v()).amax() < 1e-15);
        for _ in 0..100 {
            let x = random_vec(&mut rng, 4);
            let y = f.psi(&x).unwrap();
            let scale = 1.0 + x.norm_squared();
            assert!(f.ambient().inner(&y, &y).unwrap().abs() < 1e-12 * scale * scale);
            assert!((f.ambient().inner(&y, f.w()).unwrap() - 1.0).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn second_fundamental_form_of_psi() {
        let f = LightConeFrame::canonical(3);
        let x = DVector::from_column_slice(&[0.3, -0.2, 1.1]);
        let e1 = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let e2 = DVector::from_column_slice(&[0.0, 1.0, 0.0]);
        let a11 = f.psi_second_fundamental_form(&x, &e1, &e1, 1e-10).unwrap();
        assert!((a11 + f.w()).amax() < 1e-12);
        let a12 = f.psi_second_fundamental_form(&x, &e1, &e2, 1e-10).unwrap();
        assert!(a12.amax() < 1e-12);
        let normal = f.psi_normal_space(&x, 1e-10).unwrap();
        let expected = Subspace::span_vectors(f.ambient(), &[f.psi(&x).unwrap(), f.w().clone()], 1e-10).unwrap();
        assert!(normal.same_span(&expected, 1e-10));
    }

    #[test]
    fn projection_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = LightConeFrame::make(3, Some(&mut rng));
        let zero = DVector::zeros(3);
        assert!(f.psi_inverse(&f.psi(&zero).unwrap()).unwrap().amax() < 1e-12);
        for _ in 0..100 {
            let x = random_vec(&mut rng, 3);
            let y = f.psi(&x).unwrap();
            assert!((f.psi_inverse(&y).unwrap() - &x).amax() < 1e-12 * (1.0 + x.norm_squared()));
            let p1 = f.pi_projection(&y).unwrap();
            let p2 = f.pi_projection(&(&y * 2.0)).unwrap();
            assert!((p1 - p2).amax() < 1e-12 * (1.0 + x.norm_squared()));
        }
        assert_eq!(f.pi_projection(&f.w().clone()), Err(GeometryError::ExcludedRay));
    }

    #[test]
    fn correspondence_round_trip() {
        let f = LightConeFrame::canonical(2);
        let xs: Vec<_> = (0..5).map(|i| DVector::from_column_slice(&[i as f64 * 0.3, -0.1])).collect();
        let ones = vec![1.0; 5];
        let big_f = f.conformal_to_isometric(&xs, &ones).unwrap();
        for (x, y) in xs.iter().zip(&big_f) {
            assert_eq!(y, &f.psi(x).unwrap());
        }
        let lambdas: Vec<f64> = (0..5).map(|i| 0.5 + i as f64).collect();
        let pair = ConformalPair::from_conformal(&f, xs.clone(), lambdas.clone()).unwrap();
        assert!(pair.invariant_defect(&f) < 1e-12);
        let (back, l_back) = f.isometric_to_conformal(&pair.big_f).unwrap();
        for i in 0..5 {
            assert!((&back[i] - &xs[i]).amax() < 1e-12);
            assert!((l_back[i] - lambdas[i]).abs() < 1e-12);
        }
        assert!(matches!(
            f.conformal_to_isometric(&xs[..1], &[0.0]),
            Err(GeometryError::NonPositiveFactor(_))
        ));
        let flipped = f.with_flipped_w();
        assert!(matches!(
            flipped.isometric_to_conformal(&big_f[..1]),
            Err(GeometryError::NonPositiveFactor(_))
        ));
    }
}
