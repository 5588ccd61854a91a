use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::{first_component_span, image_span, PairedForm};
use crate::error::{GeometryError, Result};
use crate::kaehler::ComplexStructure;
use crate::linalg::numerical_rank;

/// Outcome of checking a basis `{X_1, JX_1, ..., X_n, JX_n}` that
/// diagonalises `β`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagReport {
    pub n: usize,
    pub s: usize,
    /// `max |β(Y_i, Y_j)|`, `i ≠ j`, `Y_k ∈ span{X_k, JX_k}`.
    pub cross_defect: f64,
    /// Indefinite orthonormality defect of `{β(X_j,X_j), β(X_j,JX_j)}` after rescaling.
    pub orthonormality_defect: f64,
    /// Sign of `<<β(X_j,X_j), β(X_j,X_j)>>` for each `j`.
    pub norm_signs: Vec<i8>,
    /// The rescaled vectors span `S(β)`.
    pub spans_image: bool,
    /// Largest norm of the second half of `β(X_j, X_j)` after rescaling.
    pub second_half_defect: f64,
    /// First halves `ξ_j` of the rescaled `β(X_j, X_j)`.
    #[serde(skip)]
    pub xi: Vec<DVector<f64>>,
    /// Rescaled `X_j`.
    #[serde(skip)]
    pub scaled_basis: Vec<DVector<f64>>,
}

pub fn verify_diag_basis(
    beta: &PairedForm,
    basis: &[DVector<f64>],
    j: &ComplexStructure,
    metric: &DMatrix<f64>,
    tol: f64,
) -> Result<DiagReport> {
    let d = beta.domain_dim();
    let n = d / 2;
    if basis.len() != d {
        return Err(GeometryError::DimensionMismatch {
            expected: d,
            actual: basis.len(),
        });
    }
    let jm = j.matrix();
    for k in 0..n {
        let jx = jm * &basis[2 * k];
        if (&jx - &basis[2 * k + 1]).amax() > tol * jx.amax().max(1.0) {
            return Err(GeometryError::InvalidConfig(format!(
                "basis vector {} is not J of basis vector {}",
                2 * k + 1,
                2 * k
            )));
        }
    }
    for a in 0..d {
        for b in 0..a {
            let g = basis[a].dot(&(metric * &basis[b]));
            if g.abs() > tol * basis[a].norm().max(1.0) * basis[b].norm().max(1.0) {
                return Err(GeometryError::InvalidConfig(format!(
                    "basis vectors {b} and {a} are not orthogonal"
                )));
            }
        }
    }

    let mut cross_defect: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            if a / 2 != b / 2 {
                cross_defect = cross_defect.max(beta.eval(&basis[a], &basis[b]).amax());
            }
        }
    }

    let p = beta.half_dim();
    let mut scaled_basis = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(d);
    let mut norm_signs = Vec::with_capacity(n);
    for k in 0..n {
        let x = &basis[2 * k];
        let bxx = beta.eval(x, x);
        let norm = beta.pair(&bxx, &bxx);
        if norm.abs() <= tol {
            return Err(GeometryError::NullNorm);
        }
        norm_signs.push(if norm > 0.0 { 1 } else { -1 });
        let xs = x * norm.abs().powf(-0.25);
        let jxs = jm * &xs;
        vectors.push(beta.eval(&xs, &xs));
        vectors.push(beta.eval(&xs, &jxs));
        scaled_basis.push(xs);
    }
    let mut orthonormality_defect: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let g = beta.pair(&vectors[a], &vectors[b]);
            let defect = if a == b { (g.abs() - 1.0).abs() } else { g.abs() };
            orthonormality_defect = orthonormality_defect.max(defect);
        }
    }
    let second_half_defect = (0..n)
        .map(|k| vectors[2 * k].rows(p, p).amax())
        .fold(0.0, f64::max);
    let xi = (0..n).map(|k| vectors[2 * k].rows(0, p).into_owned()).collect();

    let rank_tol = tol.min(1e-6);
    let image = image_span(beta, rank_tol);
    let generated = DMatrix::from_columns(&vectors);
    let spans_image = numerical_rank(&generated, rank_tol) == image.dim()
        && vectors.iter().all(|g| image.contains(g, 1e3 * rank_tol));

    Ok(DiagReport {
        n,
        s: first_component_span(beta, rank_tol).dim(),
        cross_defect,
        orthonormality_defect,
        norm_signs,
        spans_image,
        second_half_defect,
        xi,
        scaled_basis,
    })
}
