use super::*;
use crate::flat_forms::{build_beta, first_component_span, kernel};

fn policy() -> TolerancePolicy {
    TolerancePolicy::default()
}

#[test]
fn config_validation() {
    assert!(ExampleConfig::new(4, -1.0, vec![3.0, 3.0, 3.0]).is_ok());
    assert!(ExampleConfig::new(5, -1.0, vec![4.0; 4]).is_ok());
    let err = ExampleConfig::new(4, -1.0, vec![3.0, 3.0, 4.0]).unwrap_err();
    assert!(err.to_string().contains("1/c₂+⋯+1/cₙ=−1/c"), "{err}");
    assert!(ExampleConfig::new(3, -1.0, vec![2.0, 2.0]).is_err());
    assert!(ExampleConfig::new(4, 1.0, vec![3.0; 3]).is_err());
    assert!(ExampleConfig::new(4, -1.0, vec![3.0; 2]).is_err());
    assert!(ExampleConfig::new(4, -1.0, vec![3.0, -3.0, 3.0]).is_err());
}

#[test]
fn reference_radii() {
    let cfg = ExampleConfig::reference();
    let r = cfg.radii();
    assert_eq!(r[0], 1.0);
    for rj in &r[1..] {
        assert!((rj - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }
    assert_eq!(cfg.p(), 2);
}

#[test]
fn example_lies_in_light_cone_and_is_conformal() {
    for cfg in [ExampleConfig::reference(), ExampleConfig::new(5, -1.0, vec![4.0; 4]).unwrap()] {
        let ex = build_example(&cfg, 7).unwrap();
        assert_eq!(ex.samples.len(), GRID_SIZE * GRID_SIZE + EXTRA_POINTS);
        assert_eq!(ex.frame.m(), 3 * cfg.n - 2);
        assert!(ex.null_defect() < 1e-12);
        assert!(ex.conformality_defect(1e-4).unwrap() < 1e-6);
        assert!(ex.round_trip_defect().unwrap() < 1e-9);
        assert!(ex.conformal.lambda.iter().all(|&l| l > 0.0));
    }
}

#[test]
fn cyclic_grid_uses_every_node_of_every_factor() {
    let ex = build_example(&ExampleConfig::reference(), 1).unwrap();
    for (j, f) in ex.immersion.factors().iter().enumerate() {
        let mut seen: Vec<[f64; 2]> = ex.samples[..9].iter().map(|p| [p[2 * j], p[2 * j + 1]]).collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut grid = f.grid(3);
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(seen, grid);
    }
}

#[test]
fn theorem3_reference_and_n5_pass() {
    for cfg in [ExampleConfig::reference(), ExampleConfig::new(5, -1.0, vec![4.0; 4]).unwrap()] {
        let report = run_theorem3_checks(&cfg, &policy(), 7).unwrap();
        assert!(report.pass, "{:#?}", report.failed());
        for prefix in ["a_", "b_", "c_", "d_", "e_", "f_", "g_", "h_"] {
            assert!(report.checks.iter().any(|c| c.name.starts_with(prefix)), "missing {prefix}");
        }
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }
}

#[test]
fn perturbed_radii_fail_only_through_the_light_cone() {
    let cfg = ExampleConfig {
        n: 4,
        c: -1.0,
        c_list: vec![2.0; 3],
    };
    assert!(build_example(&cfg, 3).is_err());
    let report = run_theorem3_checks(&cfg, &policy(), 3).unwrap();
    assert!(!report.pass);
    assert!(!report.check("h_radius_relation").unwrap().pass);
    assert!(!report.check("light_cone_null").unwrap().pass);
    assert!(report.check("condition").unwrap().pass);
}

#[test]
fn reports_are_deterministic() {
    let a = run_theorem3_checks(&ExampleConfig::reference(), &policy(), 11).unwrap();
    let b = run_theorem3_checks(&ExampleConfig::reference(), &policy(), 11).unwrap();
    assert_eq!(a, b);
    let a = run_theorem1_testbed(5, 2, &policy(), 4).unwrap();
    let b = run_theorem1_testbed(5, 2, &policy(), 4).unwrap();
    assert_eq!(a, b);
}

#[test]
fn flat_testbed_shape() {
    let tb = build_flat_testbed(5, 2, 9, 1e-8).unwrap();
    for data in &tb.points {
        assert_eq!(data.alpha.target().dim(), 4);
        assert!(data.condition_defect() < 1e-10);
        let beta = build_beta(&data.alpha, &data.j).unwrap();
        assert_eq!(first_component_span(&beta, 1e-8).dim(), 1);
        assert_eq!(kernel(&beta, 1e-8).dim(), 0);
    }
}

#[test]
fn theorem1_flat_testbed() {
    for (n, p) in [(5, 2), (6, 3)] {
        let report = run_theorem1_testbed(n, p, &policy(), 1).unwrap();
        assert!(report.pass, "{:#?}", report.failed());
        assert_eq!(report.metrics["m"], n as f64);
        assert_eq!(report.metrics["m_bound"], (n - p) as f64);
        assert_eq!(report.metrics["s"], 1.0);
        assert_eq!(report.metrics["kernel1_dim"], 2.0 * n as f64);
        assert!(report.metrics["max_abs_curvature"] < 1e-10);
    }
}

#[test]
fn theorem1_rejects_large_codimension() {
    assert!(matches!(
        run_theorem1_testbed(5, 3, &policy(), 1),
        Err(GeometryError::InvalidConfig(_))
    ));
    let ex = build_example(&ExampleConfig::reference(), 1).unwrap();
    let data = ex.point_data(1e-8).unwrap().remove(0);
    assert!(run_theorem1_pipeline(&data.shape_data(), ExampleConfig::reference().p(), &policy(), 1).is_err());
}

#[test]
fn theorem1_flags_nondegenerate_input() {
    // Product-type data placed in codimension p with normal dimension p + 2.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shape = random_flat_shapeid(4, FlatShapeKind::Product, &mut rng).unwrap();
    let n_big = shape.j.complex_dim();
    assert_eq!(n_big, 4);
    let err = run_theorem1_pipeline(&shape, 2, &policy(), 1).unwrap_err();
    assert!(matches!(err, GeometryError::InvalidConfig(_)));
}

#[test]
fn theorem1_on_synthetic_data() {
    let shape = perturbed_synthetic(6, 5, 0.7).unwrap();
    let report = run_theorem1_pipeline(&shape, 3, &policy(), 2).unwrap();
    assert!(report.pass, "{:#?}", report.failed());
    assert!(report.metrics["max_inequality"] < 0.0);
    assert!(report.metrics["max_curvature"] < 0.0);
}

#[test]
fn shapeid_alpha_pins_w_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let shape = random_shapeid_alpha(3, 4, &mut rng).unwrap();
        assert!(condition_defect(&shape.alpha, &shape.metric, &shape.w) < 1e-12);
        assert!(shape.alpha.symmetry_defect() < 1e-12);
        let beta = build_beta(&shape.alpha, &shape.j).unwrap();
        assert_eq!(kernel(&beta, 1e-8).dim(), 0);
    }
    assert!(random_shapeid_alpha(3, 1, &mut rng).is_err());
}

#[test]
fn flat_shapeid_forms_are_flat() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for kind in [FlatShapeKind::Product, FlatShapeKind::Degenerate] {
        for _ in 0..5 {
            let shape = random_flat_shapeid(4, kind, &mut rng).unwrap();
            let g = shape.alpha.target();
            assert!(g.inner_unchecked(&shape.w, &shape.w).abs() < 1e-9);
            assert!(condition_defect(&shape.alpha, &shape.metric, &shape.w) < 1e-9);
            let beta = build_beta(&shape.alpha, &shape.j).unwrap();
            let gamma = build_gamma(&shape.alpha, &shape.j).unwrap();
            assert!(flatness_defect(&beta) < 1e-9);
            assert!(product_condition_defect(&beta, &gamma).unwrap() < 1e-9);
            let degenerate = image_span(&beta, 1e-8).is_degenerate(1e-8);
            assert_eq!(degenerate, kind == FlatShapeKind::Degenerate);
        }
    }
}

#[test]
fn unitary_frame_commutes_with_j() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q = random_unitary_frame(3, &mut rng);
    let j = ComplexStructure::standard(3);
    assert!((q.transpose() * &q - DMatrix::identity(6, 6)).amax() < 1e-12);
    assert!((&q * j.matrix() - j.matrix() * &q).amax() < 1e-12);
}

#[test]
fn flatform_dumps() {
    let cfg = ExampleConfig::reference();
    let (report, flat) = flatform_report(Testbed::Flat, 5, 2, &cfg, &policy(), 1).unwrap();
    assert!(report.pass, "{:#?}", report.failed());
    assert_eq!(flat.s, 1);
    assert!(flat.split.is_some());
    let (report, ex) = flatform_report(Testbed::Example, 4, 2, &cfg, &policy(), 1).unwrap();
    assert!(report.pass, "{:#?}", report.failed());
    assert_eq!(ex.s, 4);
    assert!(ex.split.is_none());
    let (report, syn) = flatform_report(Testbed::Synthetic, 5, 2, &cfg, &policy(), 1).unwrap();
    assert!(report.pass, "{:#?}", report.failed());
    assert_eq!(syn.s, 1);
    assert!("torus".parse::<Testbed>().is_err());
    for name in Testbed::NAMES {
        assert_eq!(name.parse::<Testbed>().unwrap().name(), name);
    }
}

#[test]
fn sphere_bound_is_positive() {
    let cfg = ExampleConfig::reference();
    assert_eq!(sphere_curvature_lower_bound(&cfg), 1.0);
    assert_eq!(sphere_factor_subspace(4).unwrap().dim(), 6);
}
