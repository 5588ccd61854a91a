//! End-to-end scenarios: the product example in the light cone, the flat
//! testbed and synthetic shape data, each checked into a
//! [`VerificationReport`].

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::flat_forms::{
    analyze, build_beta, build_gamma, check_surjective_kernel_bound, degenerate_decomposition, find_regular_element,
    flatness_defect, image_span, kernel, moore_inclusion_defect, product_condition_defect, umbilical_subspace,
    verify_diag_basis, DecompositionDefects, VectorValuedForm,
};
use crate::immersions::{
    condition_defect, normal_curvature_defect, sectional_curvature_j, shape_operator_rank, FlatLift, Immersion,
    PointData, ProductImmersion, ShapeData, SurfaceChart,
};
use crate::kaehler::ComplexStructure;
use crate::lightcone::{random_lorentz_transform, ConformalPair, LightConeFrame};
use crate::linalg::{QuadSpace, Subspace, TolerancePolicy};

/// Nodes per parameter axis of each factor grid.
pub const GRID_SIZE: usize = 3;
/// Seeded random points added to the grid points of the example.
pub const EXTRA_POINTS: usize = 3;
/// Points sampled on the flat testbed.
pub const FLAT_POINTS: usize = 3;
/// Random tangent directions per point.
pub const DIRECTION_SAMPLES: usize = 200;
const GRID_SHIFT: usize = 4;
const CONSTRAINT_TOL: f64 = 1e-12;

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn unit(len: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(len);
    e[i] = 1.0;
    e
}

// ---------------------------------------------------------------------------
// Reports

/// One named identity or bound with its measured defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The formula the check measures.
    pub anchor: String,
    pub defect: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Parameters a report was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub testbed: Option<String>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_list: Option<Vec<f64>>,
    pub tolerances: TolerancePolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub seed: u64,
    pub config: ReportConfig,
    /// Sorted by name.
    pub checks: Vec<CheckRecord>,
    /// Scalar outputs that are not checks (dimensions, extreme values).
    pub metrics: BTreeMap<String, f64>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Collects checks over several points, keeping the worst defect per name.
#[derive(Debug, Default)]
struct Checks {
    records: BTreeMap<String, CheckRecord>,
    metrics: BTreeMap<String, f64>,
}

impl Checks {
    /// Passes when `defect <= threshold`.
    fn upper(&mut self, name: &str, anchor: &str, defect: f64, threshold: f64) {
        let defect = if defect.is_nan() { f64::INFINITY } else { defect };
        let entry = self.records.entry(name.to_string()).or_insert_with(|| CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            defect: f64::NEG_INFINITY,
            threshold,
            pass: true,
        });
        entry.defect = entry.defect.max(defect);
        entry.pass = entry.defect <= entry.threshold;
    }

    /// Passes when `value >= bound`; the defect is the shortfall.
    fn lower(&mut self, name: &str, anchor: &str, value: f64, bound: f64) {
        self.upper(name, anchor, (bound - value).max(0.0), 0.0);
    }

    /// Passes when the condition holds.
    fn holds(&mut self, name: &str, anchor: &str, ok: bool) {
        self.upper(name, anchor, if ok { 0.0 } else { 1.0 }, 0.0);
    }

    fn metric_min(&mut self, name: &str, value: f64) {
        let e = self.metrics.entry(name.to_string()).or_insert(value);
        *e = e.min(value);
    }

    fn metric_max(&mut self, name: &str, value: f64) {
        let e = self.metrics.entry(name.to_string()).or_insert(value);
        *e = e.max(value);
    }

    fn finish(self, scenario: &str, seed: u64, config: ReportConfig) -> VerificationReport {
        let checks: Vec<CheckRecord> = self.records.into_values().collect();
        let pass = checks.iter().all(|c| c.pass);
        VerificationReport {
            scenario: scenario.to_string(),
            seed,
            config,
            checks,
            metrics: self.metrics,
            pass,
        }
    }
}

// ---------------------------------------------------------------------------
// The product example

/// A product `ℍ²(c) × S²(c₂) × ⋯ × S²(cₙ)` placed in the light cone of `𝕃^{3n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleConfig {
    pub n: usize,
    pub c: f64,
    pub c_list: Vec<f64>,
}

impl ExampleConfig {
    pub fn new(n: usize, c: f64, c_list: Vec<f64>) -> Result<Self> {
        let config = Self { n, c, c_list };
        config.validate()?;
        Ok(config)
    }

    /// `n = 4`, `c = -1`, `c_list = (3, 3, 3)`.
    pub fn reference() -> Self {
        Self {
            n: 4,
            c: -1.0,
            c_list: vec![3.0; 3],
        }
    }

    /// Everything except the curvature constraint.
    pub fn validate_shape(&self) -> Result<()> {
        if self.n < 4 {
            return Err(GeometryError::InvalidConfig(format!("n = {} must be at least 4", self.n)));
        }
        if !(self.c < 0.0) || !self.c.is_finite() {
            return Err(GeometryError::InvalidConfig(format!("c = {} must be negative", self.c)));
        }
        if self.c_list.len() != self.n - 1 {
            return Err(GeometryError::InvalidConfig(format!(
                "c_list has {} entries, expected n - 1 = {}",
                self.c_list.len(),
                self.n - 1
            )));
        }
        if let Some(bad) = self.c_list.iter().find(|&&cj| !(cj > 0.0) || !cj.is_finite()) {
            return Err(GeometryError::InvalidConfig(format!("c_list entry {bad} must be positive")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        let defect = self.constraint_defect();
        if defect.abs() > CONSTRAINT_TOL {
            return Err(GeometryError::InvalidConfig(format!(
                "constraint 1/c₂+⋯+1/cₙ=−1/c violated by {defect:.3e}"
            )));
        }
        Ok(())
    }

    /// `1/c₂ + ⋯ + 1/cₙ + 1/c`.
    pub fn constraint_defect(&self) -> f64 {
        let spheres: f64 = self.c_list.iter().map(|cj| 1.0 / cj).sum();
        spheres + 1.0 / self.c
    }

    /// Codimension `p = n - 2` of the conformal immersion into `ℝ^{3n-2}`.
    pub fn p(&self) -> usize {
        self.n - 2
    }

    /// `(r₁, r₂, …, rₙ)` with `r₁ = 1/√(-c)` and `rⱼ = 1/√cⱼ`.
    pub fn radii(&self) -> Vec<f64> {
        std::iter::once((-1.0 / self.c).sqrt())
            .chain(self.c_list.iter().map(|cj| (1.0 / cj).sqrt()))
            .collect()
    }

    pub fn immersion(&self) -> Result<ProductImmersion> {
        self.validate_shape()?;
        let mut factors = vec![SurfaceChart::hyperbolic(self.c)?];
        for &cj in &self.c_list {
            factors.push(SurfaceChart::sphere(cj)?);
        }
        ProductImmersion::new(factors)
    }

    fn report_config(&self, policy: &TolerancePolicy) -> ReportConfig {
        ReportConfig {
            testbed: None,
            n: self.n,
            p: Some(self.p()),
            c: Some(self.c),
            c_list: Some(self.c_list.clone()),
            tolerances: *policy,
        }
    }
}

/// The product immersion `F` with its conformal counterpart `f = ψ⁻¹∘π∘F`
/// sampled at a fixed set of parameter points.
#[derive(Debug, Clone)]
pub struct Example {
    pub config: ExampleConfig,
    pub immersion: ProductImmersion,
    /// Frame with `m = 3n - 2` and `w = -(e₀ + e₁)`, so that `<F, w> > 0`.
    pub frame: LightConeFrame,
    pub samples: Vec<Vec<f64>>,
    pub conformal: ConformalPair,
}

/// Parameter points of a product: `GRID_SIZE²` grid points where factor `j`
/// takes node `(k + 4j) mod GRID_SIZE²` of its own grid, followed by
/// `extra` uniform random points.
pub fn example_sample_points<R: Rng + ?Sized>(imm: &ProductImmersion, extra: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let nodes = GRID_SIZE * GRID_SIZE;
    let grids: Vec<Vec<[f64; 2]>> = imm.factors().iter().map(|f| f.grid(GRID_SIZE)).collect();
    let mut points: Vec<Vec<f64>> = (0..nodes)
        .map(|k| {
            grids
                .iter()
                .enumerate()
                .flat_map(|(j, g)| g[(k + GRID_SHIFT * j) % nodes])
                .collect()
        })
        .collect();
    for _ in 0..extra {
        let mut p = Vec::with_capacity(2 * imm.n());
        for f in imm.factors() {
            for (lo, hi) in f.domain() {
                p.push(rng.random_range(lo..hi));
            }
        }
        points.push(p);
    }
    points
}

fn assemble_example(config: &ExampleConfig, seed: u64) -> Result<Example> {
    let immersion = config.immersion()?;
    let frame = LightConeFrame::canonical(3 * config.n - 2).with_flipped_w();
    let mut rng = rng_for(seed);
    let samples = example_sample_points(&immersion, EXTRA_POINTS, &mut rng);
    let big_f = samples.iter().map(|p| immersion.value(p)).collect();
    let conformal = ConformalPair::from_isometric(&frame, big_f)?;
    Ok(Example {
        config: config.clone(),
        immersion,
        frame,
        samples,
        conformal,
    })
}

/// Builds the example after checking `1/c₂+⋯+1/cₙ = -1/c`.
pub fn build_example(config: &ExampleConfig, seed: u64) -> Result<Example> {
    config.validate()?;
    assemble_example(config, seed)
}

impl Example {
    /// `f` at arbitrary parameters.
    pub fn conformal_map(&self, params: &[f64]) -> Result<DVector<f64>> {
        self.frame.psi_inverse(&self.immersion.value(params))
    }

    /// `max |<F, F>|` over the samples.
    pub fn null_defect(&self) -> f64 {
        let g = self.immersion.ambient();
        self.conformal
            .big_f
            .iter()
            .map(|y| g.inner_unchecked(y, y).abs())
            .fold(0.0, f64::max)
    }

    /// `max |g_f / λ² - g_M|` over the samples, with `g_f` from central
    /// differences of `f` and `g_M` the induced metric of `F`.
    pub fn conformality_defect(&self, fd_step: f64) -> Result<f64> {
        let mut defect: f64 = 0.0;
        for (params, &lambda) in self.samples.iter().zip(&self.conformal.lambda) {
            let d = params.len();
            let mut cols = Vec::with_capacity(d);
            for i in 0..d {
                let mut plus = params.clone();
                let mut minus = params.clone();
                plus[i] += fd_step;
                minus[i] -= fd_step;
                cols.push((self.conformal_map(&plus)? - self.conformal_map(&minus)?) / (2.0 * fd_step));
            }
            let jac = DMatrix::from_columns(&cols);
            let g_f = jac.transpose() * &jac;
            let jet = self.immersion.jet(params);
            let g = self.immersion.ambient();
            let g_m = DMatrix::from_fn(d, d, |a, b| g.inner_unchecked(&jet.first[a], &jet.first[b]));
            defect = defect.max((g_f / (lambda * lambda) - g_m).amax());
        }
        Ok(defect)
    }

    /// `max |F' - F|` where `F' = conformal_to_isometric(isometric_to_conformal(F))`.
    pub fn round_trip_defect(&self) -> Result<f64> {
        let (f, lambda) = self.frame.isometric_to_conformal(&self.conformal.big_f)?;
        let back = self.frame.conformal_to_isometric(&f, &lambda)?;
        Ok(back
            .iter()
            .zip(&self.conformal.big_f)
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max))
    }

    pub fn point_data(&self, rank_tol: f64) -> Result<Vec<PointData>> {
        self.samples
            .iter()
            .map(|p| PointData::from_immersion(&self.immersion, p, rank_tol))
            .collect()
    }
}

/// `min_j cⱼ / (n - 1)`, a lower bound for `K(S, JS)` on the sphere factors
/// since `Σ|Sⱼ|⁴ ≥ (Σ|Sⱼ|²)² / (n - 1)`.
pub fn sphere_curvature_lower_bound(config: &ExampleConfig) -> f64 {
    let min_c = config.c_list.iter().copied().fold(f64::INFINITY, f64::min);
    min_c / config.c_list.len() as f64
}

/// `Σ cᵢ|Sᵢ|⁴ / |S|⁴` for `S` in a product of surfaces in factor order.
pub fn product_curvature_oracle(curvatures: &[f64], s: &DVector<f64>) -> f64 {
    let total = s.norm_squared();
    curvatures
        .iter()
        .enumerate()
        .map(|(i, c)| c * (s[2 * i].powi(2) + s[2 * i + 1].powi(2)).powi(2))
        .sum::<f64>()
        / (total * total)
}

/// Runs every derived necessary condition on the example's samples.
///
/// Only the signs and counts of `config` are required; a violated
/// curvature constraint shows up as a failing radius check.
pub fn run_theorem3_checks(config: &ExampleConfig, policy: &TolerancePolicy, seed: u64) -> Result<VerificationReport> {
    policy.validate()?;
    let example = assemble_example(config, seed)?;
    let tol = policy.defect_tol;
    let rank_tol = policy.rank_tol;
    let n = config.n;
    let d = 2 * n;
    let mut rng = rng_for(seed.wrapping_add(1));
    let mut checks = Checks::default();

    checks.upper(
        "h_radius_relation",
        "-r₁² + Σⱼ rⱼ² = 0",
        example.immersion.radius_relation().abs(),
        CONSTRAINT_TOL,
    );
    checks.upper("light_cone_null", "<F, F> = 0", example.null_defect(), tol);
    checks.upper(
        "conformality",
        "|df|² = λ² g_M, λ = 1/<F, w>",
        example.conformality_defect(policy.fd_step)?,
        100.0 * policy.fd_step * policy.fd_step,
    );
    checks.upper(
        "correspondence_round_trip",
        "F = ψ(f) / λ, λ = 1/<F, w>",
        example.round_trip_defect()?,
        tol,
    );
    checks.upper(
        "correspondence_invariants",
        "<F, F> = 0, <F, w> = 1/λ",
        example.conformal.invariant_defect(&example.frame),
        tol,
    );

    let curvatures = example.immersion.curvatures();
    let bound = sphere_curvature_lower_bound(config);
    let expected_signs: Vec<i8> = std::iter::once(-1).chain(std::iter::repeat_n(1, n - 1)).collect();
    for data in example.point_data(rank_tol)? {
        let shape = data.shape_data();
        let beta = build_beta(&shape.alpha, &shape.j)?;
        let gamma = build_gamma(&shape.alpha, &shape.j)?;

        checks.upper("condition", "<α(X,Y), F> = -(X,Y)", data.condition_defect(), tol);
        checks.upper(
            "beta_flatness",
            "<<β(X,Y),β(Z,T)>> = <<β(X,T),β(Z,Y)>>",
            flatness_defect(&beta),
            tol,
        );
        checks.upper(
            "beta_product",
            "<<β(X,Y),γ(Z,T)>> = <<β(X,T),γ(Z,Y)>>",
            product_condition_defect(&beta, &gamma)?,
            tol,
        );
        checks.upper("beta_symmetries", "β(X,JY) = (η,-ξ), β(Y,X) = (ξ,-η)", beta.beta_symmetry_defect(&shape.j), tol);
        checks.upper("kernel_trivial", "N(β) = 0", kernel(&beta, rank_tol).dim() as f64, 0.0);

        let image = image_span(&beta, rank_tol);
        let analysis = analyze(&beta, &mut rng, policy);
        checks.upper("image_dim", "dim S(β) = 2s, s = n", (image.dim() as f64 - d as f64).abs() + (analysis.s as f64 - n as f64).abs(), 0.0);
        checks.upper("b_image_nondegenerate", "S(β) ∩ S(β)^⊥ = 0", image.radical(rank_tol).dim() as f64, 0.0);
        match check_surjective_kernel_bound(&beta, policy) {
            Ok(rep) => checks.lower("kernel_bound", "dim N(β) ≥ 2n - 2p", rep.kernel_dim as f64, rep.bound as f64),
            Err(_) => checks.holds("kernel_bound", "dim N(β) ≥ 2n - 2p", false),
        }
        let (x, _) = find_regular_element(&beta, &mut rng, crate::flat_forms::DEFAULT_REGULAR_ATTEMPTS, rank_tol);
        let moore = moore_inclusion_defect(&beta, &x, &mut rng, rank_tol).unwrap_or(f64::INFINITY);
        checks.upper("moore_inclusion", "S(β|V×ker B_X) ⊂ B_X(V) ∩ B_X(V)^⊥", moore, tol);

        // (a) holomorphic curvature on the sphere factors, and the oracle on all of T_xM.
        let mut min_k = f64::INFINITY;
        let mut oracle_defect: f64 = 0.0;
        for _ in 0..DIRECTION_SAMPLES {
            let mut s = gaussian_vector(d, &mut rng);
            let k_full = data.sectional_curvature_j(&s)?;
            oracle_defect = oracle_defect.max((k_full - product_curvature_oracle(&curvatures, &s)).abs());
            s[0] = 0.0;
            s[1] = 0.0;
            min_k = min_k.min(data.sectional_curvature_j(&s)?);
        }
        checks.metric_min("min_sphere_curvature", min_k);
        checks.lower("a_sphere_curvature_positive", "K(S,JS) ≥ min cⱼ/(n-1) > 0", min_k, bound);
        checks.upper("curvature_oracle", "K(S,JS) = Σ cᵢ|Sᵢ|⁴/|S|⁴", oracle_defect, tol);

        // (c), (d) diagonalising basis from the factor planes.
        let basis: Vec<DVector<f64>> = (0..d).map(|a| unit(d, a)).collect();
        match verify_diag_basis(&beta, &basis, &shape.j, &shape.metric, rank_tol) {
            Ok(diag) => {
                checks.upper("c_diag_cross_terms", "β(Yᵢ,Yⱼ) = 0, i ≠ j", diag.cross_defect, tol);
                checks.holds("c_diag_spans_image", "span{β(Xⱼ,Xⱼ), β(Xⱼ,JXⱼ)} = S(β), s = n", diag.spans_image && diag.s == n);
                checks.upper(
                    "d_xi_orthonormal",
                    "|<<β(Xᵢ,Xᵢ),β(Xⱼ,Xⱼ)>>| = δᵢⱼ",
                    diag.orthonormality_defect,
                    tol,
                );
                checks.upper("d_xi_second_half", "β(Xⱼ,Xⱼ) = (ξⱼ, 0)", diag.second_half_defect, tol);
                checks.holds("d_norm_signs", "sign <<β(Xⱼ,Xⱼ),β(Xⱼ,Xⱼ)>> = (-,+,…,+)", diag.norm_signs == expected_signs);
                let worst_rank = diag
                    .xi
                    .iter()
                    .map(|xi| (shape_operator_rank(&shape.alpha, &shape.metric, xi, rank_tol) as f64 - 2.0).abs())
                    .fold(0.0, f64::max);
                checks.upper("f_shape_operator_rank", "rank A_ξⱼ = 2", worst_rank, 0.0);
            }
            Err(_) => {
                checks.holds("c_diag_cross_terms", "β(Yᵢ,Yⱼ) = 0, i ≠ j", false);
                checks.holds("d_xi_orthonormal", "|<<β(Xᵢ,Xᵢ),β(Xⱼ,Xⱼ)>>| = δᵢⱼ", false);
                checks.holds("f_shape_operator_rank", "rank A_ξⱼ = 2", false);
            }
        }

        checks.upper(
            "e_flat_normal_bundle",
            "[A_ξ, A_η] = 0",
            normal_curvature_defect(&shape.alpha, &shape.metric),
            tol,
        );
        let mut cross: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                if a / 2 != b / 2 {
                    cross = cross.max(shape.alpha.eval_basis(a, b).amax());
                }
            }
        }
        checks.upper("g_product_blocks", "α(Yᵢ,Yⱼ) = 0, i ≠ j", cross, tol);
    }
    checks.metrics.insert("points".into(), example.samples.len() as f64);
    checks.metrics.insert("sphere_curvature_bound".into(), bound);
    Ok(checks.finish("theorem3", seed, config.report_config(policy)))
}

// ---------------------------------------------------------------------------
// The flat testbed

/// `ψ ∘ ι` for the totally geodesic `ℝ^{2n} ⊂ ℝ^{2n+p}` at a few points.
#[derive(Debug, Clone)]
pub struct FlatTestbed {
    pub lift: FlatLift,
    pub points: Vec<PointData>,
}

/// Flat testbed with a seeded random light-cone frame.
pub fn build_flat_testbed(n: usize, p: usize, seed: u64, rank_tol: f64) -> Result<FlatTestbed> {
    if n == 0 {
        return Err(GeometryError::InvalidConfig("n must be positive".into()));
    }
    let mut rng = rng_for(seed);
    let frame = LightConeFrame::make(2 * n + p, Some(&mut rng));
    let lift = FlatLift::new(frame, n, p)?;
    let points = (0..FLAT_POINTS)
        .map(|_| {
            let params: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
            PointData::from_immersion(&lift, &params, rank_tol)
        })
        .collect::<Result<_>>()?;
    Ok(FlatTestbed { lift, points })
}

// ---------------------------------------------------------------------------
// Synthetic shape data

/// `w = e₀ + e₁` and `u = (e₁ - e₀)/2`, so `<u, w> = 1` in `𝕃^q`.
fn null_pair(q: usize) -> (DVector<f64>, DVector<f64>) {
    let mut w = DVector::zeros(q);
    w[0] = 1.0;
    w[1] = 1.0;
    let mut u = DVector::zeros(q);
    u[0] = -0.5;
    u[1] = 0.5;
    (w, u)
}

fn flat_domain(n: usize) -> (ComplexStructure, DMatrix<f64>) {
    (ComplexStructure::standard(n), DMatrix::identity(2 * n, 2 * n))
}

/// Random symmetric `α: ℝ^{2n} × ℝ^{2n} → 𝕃^p` with `<α(X,Y), w> = -(X,Y)`
/// and `w = e₀ + e₁`. No flatness is imposed.
pub fn random_shapeid_alpha<R: Rng + ?Sized>(n: usize, p: usize, rng: &mut R) -> Result<ShapeData> {
    if p < 2 {
        return Err(GeometryError::InvalidConfig(format!("target dimension {p} must be at least 2")));
    }
    let d = 2 * n;
    let target = QuadSpace::minkowski(p);
    let (w, u) = null_pair(p);
    let comps = (0..p)
        .map(|_| {
            let r = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
            (&r + r.transpose()) * 0.5
        })
        .collect();
    let raw = VectorValuedForm::new(target.clone(), comps)?;
    let alpha = VectorValuedForm::from_basis_values(d, target.clone(), |a, b| {
        let val = raw.eval_basis(a, b);
        let delta = if a == b { 1.0 } else { 0.0 };
        let shift = -delta - target.inner_unchecked(&val, &w);
        val + &u * shift
    })?;
    let (j, metric) = flat_domain(n);
    Ok(ShapeData { alpha, j, metric, w })
}

/// `α(X,Y) = (X,Y)v₀` in `𝕃^q` with `v₀ = (e₀ - e₁)/2` light-like and
/// `<v₀, w> = -1`: the simplest form with degenerate `S(β)`.
pub fn umbilical_synthetic(n: usize, q: usize) -> Result<ShapeData> {
    perturbed_synthetic(n, q, 0.0)
}

/// [`umbilical_synthetic`] plus `c·q(X,Y)e₂` with the anti-J-invariant
/// `q(X,Y) = (X,e₀)(Y,e₀) - (JX,e₀)(JY,e₀)`; leaves `β` unchanged.
pub fn perturbed_synthetic(n: usize, q: usize, c: f64) -> Result<ShapeData> {
    let min_q = if c == 0.0 { 2 } else { 3 };
    if q < min_q {
        return Err(GeometryError::InvalidConfig(format!("target dimension {q} must be at least {min_q}")));
    }
    let d = 2 * n;
    let (j, metric) = flat_domain(n);
    let target = QuadSpace::minkowski(q);
    let (w, u) = null_pair(q);
    let v0 = -u;
    let e0 = unit(d, 0);
    let je0 = j.matrix().transpose() * &e0;
    let qform = &e0 * e0.transpose() - &je0 * je0.transpose();
    let alpha = VectorValuedForm::from_basis_values(d, target, |a, b| {
        let mut val = &v0 * metric[(a, b)];
        if c != 0.0 {
            val[2] += c * qform[(a, b)];
        }
        val
    })?;
    Ok(ShapeData { alpha, j, metric, w })
}

/// Shapes of flat forms generated by [`random_flat_shapeid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlatShapeKind {
    /// Orthogonal umbilical pieces on the J-planes, like a product of
    /// surfaces in the light cone: `S(β)` nondegenerate.
    Product,
    /// `(X,Y)v₀` plus anti-J-invariant terms in `L^⊥`: `S(β)` degenerate.
    Degenerate,
}

/// Real `2n × 2n` orthogonal matrix commuting with the standard `J`.
pub fn random_unitary_frame<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let j = ComplexStructure::standard(n);
    let jm = j.matrix();
    let d = 2 * n;
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut x = gaussian_vector(d, rng);
        for c in &cols {
            x -= c * c.dot(&x);
        }
        let norm = x.norm();
        if norm < 1e-6 {
            continue;
        }
        x /= norm;
        let jx = jm * &x;
        cols.push(x);
        cols.push(jx);
    }
    DMatrix::from_columns(&cols)
}

fn map_target(alpha: &VectorValuedForm, lambda: &DMatrix<f64>) -> Result<VectorValuedForm> {
    VectorValuedForm::from_basis_values(alpha.domain_dim(), alpha.target().clone(), |a, b| {
        lambda * alpha.eval_basis(a, b)
    })
}

/// Random flat `α` with `<α(X,Y), w> = -(X,Y)` and `w` light-like, moved by
/// a random unitary frame and a random Lorentz transformation.
pub fn random_flat_shapeid<R: Rng + ?Sized>(n: usize, kind: FlatShapeKind, rng: &mut R) -> Result<ShapeData> {
    let d = 2 * n;
    let (j, metric) = flat_domain(n);
    let (alpha, w) = match kind {
        FlatShapeKind::Product => {
            if n < 2 {
                return Err(GeometryError::InvalidConfig("product shape needs n ≥ 2".into()));
            }
            // Plane k maps to a_k e_k with <a_k e_k, w> = -1 and w null.
            let sphere_r: Vec<f64> = (1..n).map(|_| rng.random_range(0.5..2.0)).collect();
            let r1 = sphere_r.iter().map(|r| r * r).sum::<f64>().sqrt();
            let mut coef = vec![1.0 / r1];
            coef.extend(sphere_r.iter().map(|r| -1.0 / r));
            let target = QuadSpace::minkowski(n);
            let sign = |k: usize| if k == 0 { -1.0 } else { 1.0 };
            let w = DVector::from_fn(n, |k, _| -1.0 / (coef[k] * sign(k)));
            let alpha = VectorValuedForm::from_basis_values(d, target, |a, b| {
                let mut val = DVector::zeros(n);
                if a == b {
                    val[a / 2] = coef[a / 2];
                }
                val
            })?;
            (alpha, w)
        }
        FlatShapeKind::Degenerate => {
            let q = n.max(3);
            let target = QuadSpace::minkowski(q);
            let (w, u) = null_pair(q);
            let jm = j.matrix();
            let mut alpha = VectorValuedForm::from_basis_values(d, target.clone(), |a, b| -&u * metric[(a, b)])?;
            for k in 2..q {
                let r = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let r = (&r + r.transpose()) * 0.5;
                let anti = (&r - jm.transpose() * &r * jm) * 0.5;
                alpha = alpha.add(&VectorValuedForm::rank_one(&anti, &unit(q, k), target.clone())?)?;
            }
            (alpha, w)
        }
    };
    let frame = random_unitary_frame(n, rng);
    let lambda = random_lorentz_transform(alpha.target().dim(), rng);
    let alpha = map_target(&alpha.pulled_back(&frame), &lambda)?;
    let w = &lambda * w;
    Ok(ShapeData { alpha, j, metric, w })
}

// ---------------------------------------------------------------------------
// The degenerate pipeline

/// Outcome of the degenerate pipeline at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Point {
    pub degenerate: bool,
    pub s: usize,
    pub m: usize,
    pub kernel1_dim: usize,
    pub max_curvature: f64,
    pub max_abs_curvature: f64,
    pub max_inequality: f64,
    pub min_inequality: f64,
}

fn theorem1_point<R: Rng + ?Sized>(
    shape: &ShapeData,
    p: usize,
    policy: &TolerancePolicy,
    rng: &mut R,
    checks: &mut Checks,
) -> Result<Theorem1Point> {
    let n = shape.j.complex_dim();
    if p + 3 > n {
        return Err(GeometryError::InvalidConfig(format!(
            "p = {p} exceeds n - 3 = {}",
            n as i64 - 3
        )));
    }
    let q = shape.alpha.target().dim();
    if q != p + 2 {
        return Err(GeometryError::DimensionMismatch {
            expected: p + 2,
            actual: q,
        });
    }
    let tol = policy.defect_tol;
    let rank_tol = policy.rank_tol;
    let beta = build_beta(&shape.alpha, &shape.j)?;
    let gamma = build_gamma(&shape.alpha, &shape.j)?;
    checks.upper("condition", "<α(X,Y), F> = -(X,Y)", condition_defect(&shape.alpha, &shape.metric, &shape.w), tol);
    checks.upper("beta_flatness", "<<β(X,Y),β(Z,T)>> = <<β(X,T),β(Z,Y)>>", flatness_defect(&beta), tol);
    checks.upper(
        "beta_product",
        "<<β(X,Y),γ(Z,T)>> = <<β(X,T),γ(Z,Y)>>",
        product_condition_defect(&beta, &gamma)?,
        tol,
    );
    checks.upper("kernel_trivial", "N(β) = 0", kernel(&beta, rank_tol).dim() as f64, 0.0);
    let analysis = analyze(&beta, rng, policy);
    checks.upper("image_dim", "dim S(β) = 2s", (analysis.image_dim() as f64 - 2.0 * analysis.s as f64).abs(), 0.0);
    let radical_dim = analysis.image.radical(rank_tol).dim();
    checks.lower("image_degenerate", "S(β) ∩ S(β)^⊥ ≠ 0", radical_dim as f64, 1.0);

    let mut out = Theorem1Point {
        degenerate: analysis.degenerate,
        s: analysis.s,
        m: 0,
        kernel1_dim: 0,
        max_curvature: 0.0,
        max_abs_curvature: 0.0,
        max_inequality: 0.0,
        min_inequality: 0.0,
    };

    if !analysis.degenerate {
        // Nondegenerate S(β) = U₀ ⊕ U₀: β is flat and onto W over U₀, so
        // dim N(β) ≥ 2n - 2s ≥ 2n - 2p - 4 > 0, against N(β) = 0.
        let restricted = beta.restricted_to(analysis.first_component.basis())?;
        match check_surjective_kernel_bound(&restricted, policy) {
            Ok(rep) => checks.lower(
                "nondegenerate_kernel_bound",
                "dim N(β) ≥ 2n - 2s ≥ 2n - 2p - 4",
                rep.kernel_dim as f64,
                rep.bound as f64,
            ),
            Err(_) => checks.holds("nondegenerate_kernel_bound", "dim N(β) ≥ 2n - 2s ≥ 2n - 2p - 4", false),
        }
        return Ok(out);
    }

    let split = degenerate_decomposition(&beta, &shape.alpha, &shape.j, &shape.w, &shape.metric, rng, policy)?;
    let base = shape.alpha.target();
    let DecompositionDefects {
        shapeid,
        vdeg,
        luis1,
        residual,
        beta1_flatness,
    } = split.defects;
    checks.upper("split_shapeid", "<α(X,Y), w> = -(X,Y)", shapeid, tol);
    checks.upper("split_vdeg", "<α(X,Y) + α(JX,JY), v> = 0", vdeg, tol);
    checks.upper("split_luis1", "<<β(X,Y), (w,0)>> = -2(X,Y)", luis1, tol);
    checks.upper("split_residual", "β(X,Y) = β₁(X,Y) + 2((X,Y)v, (X,JY)v)", residual, tol);
    checks.upper("split_beta1_flatness", "<<β₁(X,Y),β₁(Z,T)>> = <<β₁(X,T),β₁(Z,Y)>>", beta1_flatness, 10.0 * tol);
    let v_defect = base.inner_unchecked(&split.v, &split.v).abs() + (base.inner_unchecked(&split.v, &split.w) + 1.0).abs();
    checks.upper("split_v_normalised", "<v, v> = 0, <v, w> = -1", v_defect, tol);
    checks.holds("split_l_lorentzian", "sig span{v, w} = (1,1)", split.l_is_lorentzian(rank_tol));
    checks.holds("split_u1_dim", "dim U₁ = s - 1", split.u1_dim_holds());
    checks.lower("split_kernel1_bound", "dim N(β₁) ≥ 2n - 2s + 2", split.kernel1.dim() as f64, split.kernel_bound() as f64);
    checks.holds(
        "split_regular_kernel1",
        "ker B₁_X = N(β₁)",
        split.regular_kernel1.same_span(&split.kernel1, 1e3 * rank_tol),
    );

    let (p_sub, rep) = umbilical_subspace(
        &split,
        &shape.alpha,
        &beta,
        &gamma,
        &shape.j,
        &shape.metric,
        rng,
        DIRECTION_SAMPLES,
        policy,
    )?;
    checks.holds("p_complex", "J P = P", shape.j.is_complex_subspace(&p_sub, rank_tol));
    checks.upper("p_umbilic", "<α(X,Y), v> = 0", rep.umbilic_defect, tol);
    checks.upper("p_alphapar", "α(X,Y) = α_{L^⊥}(X,Y) + (X,Y)v", rep.alphapar_defect, tol);
    checks.upper("p_nucleoa", "α_{U₁}(X,S) = 0, S ∈ P", rep.nucleoa_defect, tol);
    checks.upper("p_pluri", "α_{U₂}(X,Y) = -α_{U₂}(JX,JY)", rep.pluri_defect, tol);
    checks.upper(
        "p_inequality",
        "<α(S,S),α(JS,JS)> - |α(S,JS)|² ≤ 0",
        rep.max_inequality_value.max(0.0),
        tol,
    );
    checks.upper(
        "p_u2_formula",
        "<α(S,S),α(JS,JS)> - |α(S,JS)|² = -|α_{U₂}(S,S)|² - |α_{U₂}(S,JS)|²",
        rep.u2_formula_defect,
        tol,
    );
    checks.lower("p_dim_split", "m ≥ n - s + 1", rep.m as f64, rep.m_bound as f64);
    checks.lower("p_dim", "m ≥ n - p", rep.m as f64, (n - p) as f64);

    let mut max_k = f64::NEG_INFINITY;
    let mut max_abs_k: f64 = 0.0;
    if p_sub.dim() > 0 {
        for _ in 0..DIRECTION_SAMPLES {
            let s = p_sub.basis() * gaussian_vector(p_sub.dim(), rng);
            let k = sectional_curvature_j(&shape.alpha, &shape.j, &shape.metric, &s)?;
            max_k = max_k.max(k);
            max_abs_k = max_abs_k.max(k.abs());
        }
    } else {
        max_k = 0.0;
    }
    checks.upper("p_curvature_nonpositive", "K(S,JS) ≤ 0, S ∈ P", max_k.max(0.0), tol);
    out.m = rep.m;
    out.kernel1_dim = split.kernel1.dim();
    out.max_curvature = max_k;
    out.max_abs_curvature = max_abs_k;
    out.max_inequality = rep.max_inequality_value;
    out.min_inequality = rep.min_inequality_value;
    Ok(out)
}

fn record_point_metrics(checks: &mut Checks, n: usize, p: usize, point: &Theorem1Point) {
    checks.metric_min("m", point.m as f64);
    checks.metric_min("s", point.s as f64);
    checks.metric_min("kernel1_dim", point.kernel1_dim as f64);
    checks.metric_max("max_curvature", point.max_curvature);
    checks.metric_max("max_abs_curvature", point.max_abs_curvature);
    checks.metric_max("max_inequality", point.max_inequality);
    checks.metric_min("min_inequality", point.min_inequality);
    checks.metrics.insert("m_bound".into(), (n - p) as f64);
    checks.metrics.insert("n".into(), n as f64);
}

/// Degenerate-branch pipeline on shape data of a conformal Kaehler
/// submanifold of codimension `p`, i.e. normal space of dimension `p + 2`.
pub fn run_theorem1_pipeline(
    shape: &ShapeData,
    p: usize,
    policy: &TolerancePolicy,
    seed: u64,
) -> Result<VerificationReport> {
    policy.validate()?;
    let n = shape.j.complex_dim();
    let mut rng = rng_for(seed);
    let mut checks = Checks::default();
    let point = theorem1_point(shape, p, policy, &mut rng, &mut checks)?;
    record_point_metrics(&mut checks, n, p, &point);
    let config = ReportConfig {
        testbed: None,
        n,
        p: Some(p),
        c: None,
        c_list: None,
        tolerances: *policy,
    };
    Ok(checks.finish("theorem1", seed, config))
}

/// [`run_theorem1_pipeline`] over every point of the flat testbed.
pub fn run_theorem1_testbed(n: usize, p: usize, policy: &TolerancePolicy, seed: u64) -> Result<VerificationReport> {
    policy.validate()?;
    if p + 3 > n {
        return Err(GeometryError::InvalidConfig(format!(
            "p = {p} exceeds n - 3 = {}",
            n as i64 - 3
        )));
    }
    let testbed = build_flat_testbed(n, p, seed, policy.rank_tol)?;
    let mut rng = rng_for(seed.wrapping_add(1));
    let mut checks = Checks::default();
    for data in &testbed.points {
        let point = theorem1_point(&data.shape_data(), p, policy, &mut rng, &mut checks)?;
        record_point_metrics(&mut checks, n, p, &point);
    }
    checks.metrics.insert("points".into(), testbed.points.len() as f64);
    let config = ReportConfig {
        testbed: Some("flat".into()),
        n,
        p: Some(p),
        c: None,
        c_list: None,
        tolerances: *policy,
    };
    Ok(checks.finish("theorem1", seed, config))
}

// ---------------------------------------------------------------------------
// Form dumps

/// Built-in sources of shape data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Testbed {
    Flat,
    Example,
    Synthetic,
}

impl Testbed {
    pub const NAMES: [&'static str; 3] = ["flat", "example", "synthetic"];

    pub fn name(self) -> &'static str {
        match self {
            Testbed::Flat => "flat",
            Testbed::Example => "example",
            Testbed::Synthetic => "synthetic",
        }
    }
}

impl FromStr for Testbed {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Testbed::Flat),
            "example" => Ok(Testbed::Example),
            "synthetic" => Ok(Testbed::Synthetic),
            other => Err(GeometryError::InvalidConfig(format!(
                "unknown testbed '{other}', expected one of {}",
                Testbed::NAMES.join(", ")
            ))),
        }
    }
}

/// Summary of a degenerate split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitSummary {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub kernel1_dim: usize,
    pub kernel_bound: i64,
    pub u1_dim: usize,
    pub u2_dim: usize,
    pub l_lorentzian: bool,
    pub defects: DecompositionDefects,
}

/// Dimensions and defects of `β` at one point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormSummary {
    pub n: usize,
    pub target_dim: usize,
    pub image_dim: usize,
    pub s: usize,
    pub kernel_dim: usize,
    pub regular_rank: usize,
    pub degenerate: bool,
    pub flatness_defect: f64,
    pub symmetry_defect: f64,
    pub split: Option<SplitSummary>,
}

/// Shape data for a testbed: the flat testbed `(n, p)`, the example `config`
/// or the perturbed synthetic form on `𝕃^{p+2}`.
pub fn testbed_shape(
    testbed: Testbed,
    n: usize,
    p: usize,
    config: &ExampleConfig,
    policy: &TolerancePolicy,
    seed: u64,
) -> Result<ShapeData> {
    match testbed {
        Testbed::Flat => Ok(build_flat_testbed(n, p, seed, policy.rank_tol)?.points[0].shape_data()),
        Testbed::Example => {
            let example = build_example(config, seed)?;
            Ok(PointData::from_immersion(&example.immersion, &example.samples[0], policy.rank_tol)?.shape_data())
        }
        Testbed::Synthetic => perturbed_synthetic(n, p + 2, 1.0),
    }
}

/// Analysis of `β` on a testbed together with its consistency checks.
pub fn flatform_report(
    testbed: Testbed,
    n: usize,
    p: usize,
    config: &ExampleConfig,
    policy: &TolerancePolicy,
    seed: u64,
) -> Result<(VerificationReport, FormSummary)> {
    policy.validate()?;
    let shape = testbed_shape(testbed, n, p, config, policy, seed)?;
    let tol = policy.defect_tol;
    let rank_tol = policy.rank_tol;
    let mut rng = rng_for(seed.wrapping_add(1));
    let beta = build_beta(&shape.alpha, &shape.j)?;
    let analysis = analyze(&beta, &mut rng, policy);
    let mut checks = Checks::default();
    checks.upper("beta_flatness", "<<β(X,Y),β(Z,T)>> = <<β(X,T),β(Z,Y)>>", analysis.flatness_defect, tol);
    let symmetry = beta.beta_symmetry_defect(&shape.j);
    checks.upper("beta_symmetries", "β(X,JY) = (η,-ξ), β(Y,X) = (ξ,-η)", symmetry, tol);
    checks.upper("image_dim", "dim S(β) = 2s", (analysis.image_dim() as f64 - 2.0 * analysis.s as f64).abs(), 0.0);
    checks.upper("kernel_trivial", "N(β) = 0", analysis.kernel.dim() as f64, 0.0);
    checks.upper("condition", "<α(X,Y), w> = -(X,Y)", condition_defect(&shape.alpha, &shape.metric, &shape.w), tol);

    let split = if analysis.degenerate {
        let split = degenerate_decomposition(&beta, &shape.alpha, &shape.j, &shape.w, &shape.metric, &mut rng, policy)?;
        checks.upper("split_residual", "β(X,Y) = β₁(X,Y) + 2((X,Y)v, (X,JY)v)", split.defects.residual, tol);
        checks.upper("split_beta1_flatness", "<<β₁(X,Y),β₁(Z,T)>> = <<β₁(X,T),β₁(Z,Y)>>", split.defects.beta1_flatness, 10.0 * tol);
        checks.lower("split_kernel1_bound", "dim N(β₁) ≥ 2n - 2s + 2", split.kernel1.dim() as f64, split.kernel_bound() as f64);
        Some(SplitSummary {
            v: split.v.iter().copied().collect(),
            w: split.w.iter().copied().collect(),
            kernel1_dim: split.kernel1.dim(),
            kernel_bound: split.kernel_bound(),
            u1_dim: split.u1.dim(),
            u2_dim: split.u2.dim(),
            l_lorentzian: split.l_is_lorentzian(rank_tol),
            defects: split.defects,
        })
    } else {
        None
    };
    let summary = FormSummary {
        n: shape.j.complex_dim(),
        target_dim: shape.alpha.target().dim(),
        image_dim: analysis.image_dim(),
        s: analysis.s,
        kernel_dim: analysis.kernel.dim(),
        regular_rank: analysis.regular_rank,
        degenerate: analysis.degenerate,
        flatness_defect: analysis.flatness_defect,
        symmetry_defect: symmetry,
        split,
    };
    checks.metrics.insert("s".into(), summary.s as f64);
    checks.metrics.insert("image_dim".into(), summary.image_dim as f64);
    let report_config = match testbed {
        Testbed::Example => ReportConfig {
            testbed: Some(testbed.name().into()),
            ..config.report_config(policy)
        },
        _ => ReportConfig {
            testbed: Some(testbed.name().into()),
            n,
            p: Some(p),
            c: None,
            c_list: None,
            tolerances: *policy,
        },
    };
    Ok((checks.finish("flatform", seed, report_config), summary))
}

/// Subspace of `ℝ^{2n}` spanned by the sphere factors `e₂, …, e_{2n-1}`.
pub fn sphere_factor_subspace(n: usize) -> Result<Subspace> {
    let d = 2 * n;
    let vectors: Vec<DVector<f64>> = (2..d).map(|a| unit(d, a)).collect();
    Subspace::span_vectors(&QuadSpace::euclidean(d), &vectors, 1e-12)
}

#[cfg(test)]
mod tests;
