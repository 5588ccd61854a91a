use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{product_condition_defect, DegenerateSplit, PairedForm, VectorValuedForm};
use crate::error::{GeometryError, Result};
use crate::kaehler::ComplexStructure;
use crate::linalg::{Subspace, TolerancePolicy};

/// Identities checked on `P = N(β₁)` and the curvature-type inequality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UmbilicalReport {
    pub product_defect: f64,
    /// `max |<α(X,Y), v>|`.
    pub umbilic_defect: f64,
    /// `max |α(X,Y) - α_{L^⊥}(X,Y) - (X,Y)v|`.
    pub alphapar_defect: f64,
    /// `max |α_{U₁}(X,S)|` for `S ∈ P`.
    pub nucleoa_defect: f64,
    /// `max |α_{U₂}(X,Y) + α_{U₂}(JX,JY)|`.
    pub pluri_defect: f64,
    /// Largest sampled `<α(S,S),α(JS,JS)> - |α(S,JS)|²` over unit `S ∈ P`.
    pub max_inequality_value: f64,
    pub min_inequality_value: f64,
    /// Largest gap between the inequality value and `-|α_{U₂}(S,S)|² - |α_{U₂}(S,JS)|²`.
    pub u2_formula_defect: f64,
    pub samples: usize,
    /// `dim P / 2`.
    pub m: usize,
    /// `n - s + 1`.
    pub m_bound: usize,
}

impl UmbilicalReport {
    pub fn m_bound_holds(&self) -> bool {
        self.m >= self.m_bound
    }
}

fn project_or_zero(sub: &Subspace, x: &DVector<f64>, rank_tol: f64) -> Result<DVector<f64>> {
    if sub.dim() == 0 {
        Ok(DVector::zeros(x.len()))
    } else {
        sub.project(x, rank_tol)
    }
}

/// Builds `P = N(β₁)` and evaluates the identities that make
/// `<α(S,S),α(JS,JS)> - |α(S,JS)|² <= 0` on `P`.
#[allow(clippy::too_many_arguments)]
pub fn umbilical_subspace<R: Rng + ?Sized>(
    split: &DegenerateSplit,
    alpha: &VectorValuedForm,
    beta: &PairedForm,
    gamma: &PairedForm,
    j: &ComplexStructure,
    metric: &DMatrix<f64>,
    rng: &mut R,
    samples: usize,
    policy: &TolerancePolicy,
) -> Result<(Subspace, UmbilicalReport)> {
    let tol = policy.rank_tol;
    let n = split.n;
    if split.s + 1 > n {
        return Err(GeometryError::NotApplicable(format!(
            "s = {} exceeds n - 1 = {}",
            split.s,
            n.saturating_sub(1)
        )));
    }
    let p_sub = split.kernel1.clone();
    if !j.is_complex_subspace(&p_sub, tol) {
        return Err(GeometryError::NotComplex);
    }
    let product_defect = product_condition_defect(beta, gamma)?;
    let base = alpha.target();
    let d = alpha.domain_dim();
    let jm = j.matrix();
    let v = &split.v;

    let mut report = UmbilicalReport {
        product_defect,
        umbilic_defect: 0.0,
        alphapar_defect: 0.0,
        nucleoa_defect: 0.0,
        pluri_defect: 0.0,
        max_inequality_value: f64::NEG_INFINITY,
        min_inequality_value: f64::INFINITY,
        u2_formula_defect: 0.0,
        samples,
        m: p_sub.dim() / 2,
        m_bound: n - split.s + 1,
    };

    let basis = |i: usize| {
        let mut e = DVector::zeros(d);
        e[i] = 1.0;
        e
    };
    for a in 0..d {
        for b in 0..d {
            let val = alpha.eval_basis(a, b);
            report.umbilic_defect = report.umbilic_defect.max(base.inner_unchecked(&val, v).abs());
            let par = split.project_l_perp(&val, tol) + v * metric[(a, b)];
            report.alphapar_defect = report.alphapar_defect.max((&val - par).amax());
            let (ea, eb) = (basis(a), basis(b));
            let jj = alpha.eval(&(jm * &ea), &(jm * &eb));
            let pl = project_or_zero(&split.u2, &val, tol)? + project_or_zero(&split.u2, &jj, tol)?;
            report.pluri_defect = report.pluri_defect.max(pl.amax());
        }
        for s in p_sub.basis_vectors() {
            let val = alpha.eval(&basis(a), &s);
            let comp = project_or_zero(&split.u1, &val, tol)?;
            report.nucleoa_defect = report.nucleoa_defect.max(comp.amax());
        }
    }

    if p_sub.dim() > 0 {
        for _ in 0..samples {
            let coeffs = DVector::from_fn(p_sub.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
            let mut s = p_sub.basis() * coeffs;
            let norm = s.dot(&(metric * &s)).sqrt();
            s /= norm;
            let js = jm * &s;
            let a_ss = alpha.eval(&s, &s);
            let a_jj = alpha.eval(&js, &js);
            let a_sj = alpha.eval(&s, &js);
            let value = base.inner_unchecked(&a_ss, &a_jj) - base.inner_unchecked(&a_sj, &a_sj);
            let u_ss = project_or_zero(&split.u2, &a_ss, tol)?;
            let u_sj = project_or_zero(&split.u2, &a_sj, tol)?;
            let formula = -base.inner_unchecked(&u_ss, &u_ss) - base.inner_unchecked(&u_sj, &u_sj);
            report.max_inequality_value = report.max_inequality_value.max(value);
            report.min_inequality_value = report.min_inequality_value.min(value);
            report.u2_formula_defect = report.u2_formula_defect.max((value - formula).abs());
        }
    }
    if report.max_inequality_value == f64::NEG_INFINITY {
        report.max_inequality_value = 0.0;
        report.min_inequality_value = 0.0;
    }
    Ok((p_sub, report))
}
