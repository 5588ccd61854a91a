//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::Instant;

use kaehler_core::flat_forms::{
    build_beta, build_gamma, degenerate_decomposition, find_regular_element, first_component_span, flatness_defect,
    image_span, kernel, moore_inclusion_defect, product_condition_defect, umbilical_subspace, verify_diag_basis,
    PairedForm, DEFAULT_REGULAR_ATTEMPTS,
};
use kaehler_core::immersions::{normal_curvature_defect, shape_operator, shape_operator_rank, PointData};
use kaehler_core::lightcone::LightConeFrame;
use kaehler_core::scenarios::{
    build_example, build_flat_testbed, random_flat_shapeid, sphere_curvature_lower_bound, Example, ExampleConfig,
    FlatShapeKind,
};
use kaehler_core::TolerancePolicy;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20;
const RANK_TOL: f64 = 1e-8;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.random_range(-scale..scale))
}

fn unit(len: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(len);
    e[i] = 1.0;
    e
}

fn reference_example() -> Result<Example, String> {
    build_example(&ExampleConfig::reference(), SEED).map_err(|e| e.to_string())
}

fn example_points() -> Result<(Example, Vec<PointData>), String> {
    let ex = reference_example()?;
    let points = ex.point_data(RANK_TOL).map_err(|e| e.to_string())?;
    Ok((ex, points))
}

fn c1_psi_isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for m in [2, 5, 10] {
        let frame = LightConeFrame::make(m, Some(&mut rng));
        for _ in 0..100 {
            let x = uniform(&mut rng, m, 3.0);
            let jac = frame.psi_jacobian(&x).map_err(|e| e.to_string())?;
            let pullback = jac.transpose() * frame.ambient().gram() * &jac;
            worst = worst.max((pullback - DMatrix::identity(m, m)).amax());
        }
    }
    ensure(worst <= 1e-10, || format!("pullback defect {worst:.3e}"))?;
    Ok(format!("max |ψ*g - I| = {worst:.2e}"))
}

fn c2_psi_second_fundamental_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    let h = 0.5;
    for m in [2, 5, 10] {
        let frame = LightConeFrame::make(m, Some(&mut rng));
        for _ in 0..20 {
            let x = uniform(&mut rng, m, 2.0);
            let (dx, dy) = (uniform(&mut rng, m, 1.0), uniform(&mut rng, m, 1.0));
            let expected = frame.w() * (-dx.dot(&dy));
            let analytic = frame
                .psi_second_fundamental_form(&x, &dx, &dy, RANK_TOL)
                .map_err(|e| e.to_string())?;
            // ψ is quadratic, so the mixed central difference is exact up to round-off.
            let psi = |v: DVector<f64>| frame.psi(&v).expect("dimension matches");
            let mixed = (psi(&x + &dx * h + &dy * h) - psi(&x + &dx * h - &dy * h) - psi(&x - &dx * h + &dy * h)
                + psi(&x - &dx * h - &dy * h))
                / (4.0 * h * h);
            let normal = frame.psi_normal_space(&x, RANK_TOL).map_err(|e| e.to_string())?;
            let numeric = normal.project(&mixed, RANK_TOL).map_err(|e| e.to_string())?;
            worst = worst.max((analytic - &expected).amax()).max((numeric - &expected).amax());
        }
    }
    ensure(worst <= 1e-8, || format!("α^ψ defect {worst:.3e}"))?;
    Ok(format!("max |α^ψ(X,Y) + <X,Y>w| = {worst:.2e}"))
}

fn c3_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    for cfg in [ExampleConfig::reference(), ExampleConfig::new(5, -1.0, vec![4.0; 4]).map_err(|e| e.to_string())?] {
        let ex = build_example(&cfg, SEED).map_err(|e| e.to_string())?;
        let (f, lambda) = ex.frame.isometric_to_conformal(&ex.conformal.big_f).map_err(|e| e.to_string())?;
        let back = ex.frame.conformal_to_isometric(&f, &lambda).map_err(|e| e.to_string())?;
        for (a, b) in back.iter().zip(&ex.conformal.big_f) {
            worst = worst.max((a - b).amax());
        }
        let (f2, lambda2) = ex.frame.isometric_to_conformal(&back).map_err(|e| e.to_string())?;
        for ((a, b), (la, lb)) in f2.iter().zip(&f).zip(lambda2.iter().zip(&lambda)) {
            worst = worst.max((a - b).amax()).max((la - lb).abs());
        }
        for (y, l) in ex.conformal.big_f.iter().zip(&ex.conformal.lambda) {
            let yw = ex.frame.ambient().inner(y, ex.frame.w()).map_err(|e| e.to_string())?;
            worst = worst.max((l * yw - 1.0).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("round-trip defect {worst:.3e}"))?;
    Ok(format!("max round-trip defect = {worst:.2e}"))
}

fn c4_example_validity() -> Outcome {
    let ex = reference_example()?;
    let null = ex.null_defect();
    let conformal = ex.conformality_defect(1e-4).map_err(|e| e.to_string())?;
    let radii = ExampleConfig::reference().radii();
    let relation = -radii[0] * radii[0] + radii[1..].iter().map(|r| r * r).sum::<f64>();
    ensure(null <= 1e-12, || format!("<F,F> = {null:.3e}"))?;
    ensure(conformal <= 1e-6, || format!("conformality defect {conformal:.3e}"))?;
    ensure(ex.immersion.radius_relation() == 0.0, || {
        format!("radius relation {:.3e}", ex.immersion.radius_relation())
    })?;
    ensure(relation.abs() <= 4.0 * f64::EPSILON, || format!("independent radius relation {relation:.3e}"))?;
    ensure(ExampleConfig::new(4, -1.0, vec![3.0, 3.0, 4.0]).is_err(), || "(3,3,4) accepted".into())?;
    Ok(format!(
        "|<F,F>| = {null:.2e}, conformality = {conformal:.2e}, radius relation = 0 on {} points",
        ex.samples.len()
    ))
}

fn c5_curvature_oracle() -> Outcome {
    let (ex, points) = example_points()?;
    let cs = ex.immersion.curvatures();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst: f64 = 0.0;
    let data = &points[0];
    for _ in 0..200 {
        let s = uniform(&mut rng, 8, 1.0);
        let k = data.sectional_curvature_j(&s).map_err(|e| e.to_string())?;
        let total = s.norm_squared();
        let oracle: f64 =
            (0..4).map(|i| cs[i] * (s[2 * i].powi(2) + s[2 * i + 1].powi(2)).powi(2)).sum::<f64>() / (total * total);
        worst = worst.max((k - oracle).abs());
    }
    ensure(worst <= 1e-6, || format!("oracle defect {worst:.3e}"))?;
    let expected = [-1.0, 3.0, 3.0, 3.0];
    let mut pure: f64 = 0.0;
    for (i, &c) in expected.iter().enumerate() {
        for v in [unit(8, 2 * i), unit(8, 2 * i + 1)] {
            let k = data.sectional_curvature_j(&v).map_err(|e| e.to_string())?;
            pure = pure.max((k - c).abs());
        }
    }
    ensure(pure <= 1e-8, || format!("pure-factor defect {pure:.3e}"))?;
    Ok(format!("oracle defect {worst:.2e}, pure-factor defect {pure:.2e}"))
}

fn c6_sphere_curvature() -> Outcome {
    let (ex, points) = example_points()?;
    let bound = sphere_curvature_lower_bound(&ex.config);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut min_k = f64::INFINITY;
    for data in &points {
        for _ in 0..200 / points.len() + 1 {
            let mut s = uniform(&mut rng, 8, 1.0);
            s[0] = 0.0;
            s[1] = 0.0;
            let k = data.sectional_curvature_j(&s).map_err(|e| e.to_string())?;
            // Independent bound: Σ cⱼ|Sⱼ|⁴ ≥ min cⱼ (Σ|Sⱼ|²)² / (n - 1).
            let blocks: Vec<f64> = (1..4).map(|i| s[2 * i].powi(2) + s[2 * i + 1].powi(2)).collect();
            let cs_bound = 3.0 * blocks.iter().sum::<f64>().powi(2) / 3.0 / s.norm_squared().powi(2);
            ensure(k >= cs_bound - 1e-9, || format!("K = {k} below {cs_bound}"))?;
            min_k = min_k.min(k);
        }
    }
    ensure(bound > 0.0 && min_k >= bound - 1e-9, || format!("min K = {min_k}, bound {bound}"))?;
    ensure(ex.config.n - 1 == ex.config.p() + 1, || "m ≠ p + 1".into())?;
    Ok(format!("min K(S,JS) = {min_k:.4} ≥ {bound:.4} > 0 (m = {})", ex.config.n - 1))
}

fn example_forms(data: &PointData) -> Result<(PairedForm, PairedForm), String> {
    let beta = build_beta(&data.alpha, &data.j).map_err(|e| e.to_string())?;
    let gamma = build_gamma(&data.alpha, &data.j).map_err(|e| e.to_string())?;
    Ok((beta, gamma))
}

fn c7_identities_on_example() -> Outcome {
    let (_, points) = example_points()?;
    let (mut flat, mut product, mut condition): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for data in &points {
        let (beta, gamma) = example_forms(data)?;
        flat = flat.max(flatness_defect(&beta));
        product = product.max(product_condition_defect(&beta, &gamma).map_err(|e| e.to_string())?);
        condition = condition.max(data.condition_defect());
        let n = data.n();
        let ker = kernel(&beta, RANK_TOL).dim();
        let image = image_span(&beta, RANK_TOL).dim();
        let s = first_component_span(&beta, RANK_TOL).dim();
        ensure(ker == 0, || format!("dim N(β) = {ker}"))?;
        ensure(image == 2 * n && s == n, || format!("dim S(β) = {image}, s = {s}"))?;
    }
    ensure(flat <= 1e-6, || format!("flatness {flat:.3e}"))?;
    ensure(product <= 1e-6, || format!("product {product:.3e}"))?;
    ensure(condition <= 1e-6, || format!("condition {condition:.3e}"))?;
    Ok(format!(
        "flatness {flat:.2e}, product {product:.2e}, condition {condition:.2e}, N(β) = 0, s = n"
    ))
}

fn c8_diagonal_basis() -> Outcome {
    let (_, points) = example_points()?;
    let (mut cross, mut ortho): (f64, f64) = (0.0, 0.0);
    for data in &points {
        let (beta, _) = example_forms(data)?;
        let basis: Vec<DVector<f64>> = (0..beta.domain_dim()).map(|a| unit(beta.domain_dim(), a)).collect();
        let report = verify_diag_basis(&beta, &basis, &data.j, &data.metric, RANK_TOL).map_err(|e| e.to_string())?;
        cross = cross.max(report.cross_defect);
        ortho = ortho.max(report.orthonormality_defect).max(report.second_half_defect);
        ensure(report.spans_image, || "diagonal vectors do not span S(β)".into())?;
    }
    ensure(cross <= 1e-8, || format!("cross terms {cross:.3e}"))?;
    ensure(ortho <= 1e-6, || format!("orthonormality {ortho:.3e}"))?;
    Ok(format!("cross terms {cross:.2e}, orthonormality {ortho:.2e}"))
}

fn c9_degenerate_branch() -> Outcome {
    let (n, p) = (5, 2);
    let policy = TolerancePolicy::default();
    let tb = build_flat_testbed(n, p, SEED, RANK_TOL).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut residual: f64 = 0.0;
    let mut inequality: f64 = 0.0;
    let mut curvature: f64 = 0.0;
    for data in &tb.points {
        let shape = data.shape_data();
        let beta = build_beta(&shape.alpha, &shape.j).map_err(|e| e.to_string())?;
        let gamma = build_gamma(&shape.alpha, &shape.j).map_err(|e| e.to_string())?;
        let split = degenerate_decomposition(&beta, &shape.alpha, &shape.j, &shape.w, &shape.metric, &mut rng, &policy)
            .map_err(|e| e.to_string())?;
        ensure(split.s == 1, || format!("s = {}", split.s))?;
        residual = residual.max(split.defects.residual);
        ensure(split.beta1.basis_values().amax() <= 1e-12, || "β₁ ≠ 0".into())?;
        let k1 = split.kernel1.dim();
        ensure(k1 == 2 * n && k1 as i64 >= split.kernel_bound(), || format!("dim N(β₁) = {k1}"))?;
        let (p_sub, report) = umbilical_subspace(
            &split,
            &shape.alpha,
            &beta,
            &gamma,
            &shape.j,
            &shape.metric,
            &mut rng,
            200,
            &policy,
        )
        .map_err(|e| e.to_string())?;
        ensure(p_sub.dim() == 2 * n && report.m >= n - p, || format!("dim P = {}", p_sub.dim()))?;
        inequality = inequality
            .max(report.max_inequality_value.abs())
            .max(report.min_inequality_value.abs());
        for _ in 0..50 {
            let s = uniform(&mut rng, 2 * n, 1.0);
            curvature = curvature.max(data.sectional_curvature_j(&s).map_err(|e| e.to_string())?.abs());
        }
    }
    ensure(residual <= 1e-12, || format!("residual {residual:.3e}"))?;
    ensure(inequality <= 1e-12, || format!("inequality value {inequality:.3e}"))?;
    ensure(curvature <= 1e-12, || format!("|K| = {curvature:.3e}"))?;
    Ok(format!(
        "s = 1, residual {residual:.2e}, β₁ = 0, dim N(β₁) = {}, m = {n}, |K| ≤ {curvature:.1e}",
        2 * n
    ))
}

fn moore_at_regular(beta: &PairedForm, rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let (x, _) = find_regular_element(beta, rng, DEFAULT_REGULAR_ATTEMPTS, RANK_TOL);
    moore_inclusion_defect(beta, &x, rng, RANK_TOL).map_err(|e| e.to_string())
}

fn c10_moore_inclusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut worst: f64 = 0.0;
    let mut forms = 0;
    let tb = build_flat_testbed(5, 2, SEED, RANK_TOL).map_err(|e| e.to_string())?;
    for data in &tb.points {
        let shape = data.shape_data();
        let beta = build_beta(&shape.alpha, &shape.j).map_err(|e| e.to_string())?;
        worst = worst.max(moore_at_regular(&beta, &mut rng)?);
        forms += 1;
    }
    let (_, points) = example_points()?;
    for data in &points {
        let (beta, _) = example_forms(data)?;
        worst = worst.max(moore_at_regular(&beta, &mut rng)?);
        forms += 1;
    }
    for k in 0..50 {
        let kind = if k % 2 == 0 { FlatShapeKind::Degenerate } else { FlatShapeKind::Product };
        let shape = random_flat_shapeid(3 + k % 3, kind, &mut rng).map_err(|e| e.to_string())?;
        let beta = build_beta(&shape.alpha, &shape.j).map_err(|e| e.to_string())?;
        ensure(flatness_defect(&beta) <= 1e-9, || format!("synthetic form {k} is not flat"))?;
        worst = worst.max(moore_at_regular(&beta, &mut rng)?);
        forms += 1;
    }
    ensure(worst <= 1e-8, || format!("inclusion defect {worst:.3e}"))?;
    Ok(format!("max inclusion defect {worst:.2e} over {forms} forms"))
}

fn c11_normal_bundle() -> Outcome {
    let (_, points) = example_points()?;
    let mut commutator: f64 = 0.0;
    for data in &points {
        commutator = commutator.max(normal_curvature_defect(&data.alpha, &data.metric));
        let q = data.alpha.target().dim();
        for a in 0..q {
            for b in 0..q {
                let sa = shape_operator(&data.alpha, &data.metric, &unit(q, a));
                let sb = shape_operator(&data.alpha, &data.metric, &unit(q, b));
                commutator = commutator.max((&sa * &sb - &sb * &sa).amax());
            }
        }
        let (beta, _) = example_forms(data)?;
        let basis: Vec<DVector<f64>> = (0..beta.domain_dim()).map(|a| unit(beta.domain_dim(), a)).collect();
        let report = verify_diag_basis(&beta, &basis, &data.j, &data.metric, RANK_TOL).map_err(|e| e.to_string())?;
        for (j, xi) in report.xi.iter().enumerate() {
            let rank = shape_operator_rank(&data.alpha, &data.metric, xi, RANK_TOL);
            ensure(rank == 2, || format!("rank A_ξ{} = {rank}", j + 1))?;
        }
    }
    ensure(commutator <= 1e-8, || format!("commutator {commutator:.3e}"))?;
    Ok(format!("max |[A_ξ, A_η]| = {commutator:.2e}, rank A_ξⱼ = 2"))
}

fn run_cli(seed: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_kaehler-verify"))
        .args(["verify-example", "--n", "4", "--c", "-1", "--c-list", "3,3,3", "--seed", seed])
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("exit status {}", out.status))?;
    Ok(out.stdout)
}

fn c12_determinism() -> Outcome {
    let a = run_cli("7")?;
    let b = run_cli("7")?;
    ensure(a == b, || "outputs differ".into())?;
    let parsed: serde_json::Value = serde_json::from_slice(&a).map_err(|e| e.to_string())?;
    ensure(parsed["pass"] == serde_json::Value::Bool(true), || "report does not pass".into())?;
    Ok(format!("{} identical bytes", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("psi isometry", c1_psi_isometry),
        ("psi second fundamental form", c2_psi_second_fundamental_form),
        ("correspondence round trip", c3_round_trip),
        ("example validity", c4_example_validity),
        ("curvature oracle", c5_curvature_oracle),
        ("sphere-factor curvature", c6_sphere_curvature),
        ("flat-form identities on the example", c7_identities_on_example),
        ("diagonalising basis", c8_diagonal_basis),
        ("degenerate branch on the flat testbed", c9_degenerate_branch),
        ("inclusion at regular elements", c10_moore_inclusion),
        ("normal bundle diagnostics", c11_normal_bundle),
        ("determinism", c12_determinism),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{:.2?}]", i + 1, t.elapsed()),
            Err(why) => {
                failures += 1;
                println!("FAIL {:>2} {name}: {why} [{:.2?}]", i + 1, t.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed in {:.2?}", criteria.len() - failures, criteria.len(), start.elapsed());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
