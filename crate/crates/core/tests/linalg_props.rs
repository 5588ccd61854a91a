use kaehler_core::linalg::{column_span, inertia, null_space, numerical_rank, singular_values};
use kaehler_core::{QuadSpace, Subspace};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

const TOL: f64 = 1e-8;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// `rows × cols` product of random `rows × k` and `k × cols` factors.
fn low_rank() -> impl Strategy<Value = (DMatrix<f64>, usize)> {
    (2usize..11, 2usize..11, 0usize..6).prop_flat_map(|(r, c, k)| {
        let k = k.min(r).min(c);
        (matrix(r, k), matrix(k, c)).prop_map(move |(a, b)| {
            let m = if k == 0 { DMatrix::zeros(r, c) } else { a * b };
            (m, k)
        })
    })
}

/// `diag(-1, .., -1, 1, .., 1)` with `q` negative entries.
fn signature_space(dim: usize, q: usize) -> QuadSpace {
    let entries: Vec<f64> = (0..dim).map(|i| if i < q { -1.0 } else { 1.0 }).collect();
    QuadSpace::diagonal(&entries).unwrap()
}

fn space_and_subspace() -> impl Strategy<Value = (QuadSpace, Subspace)> {
    (2usize..8, 0usize..3, 1usize..5).prop_flat_map(|(dim, q, k)| {
        let q = q.min(dim);
        let k = k.min(dim);
        matrix(dim, k).prop_map(move |g| {
            let space = signature_space(dim, q);
            let sub = Subspace::span(&space, &g, TOL).unwrap();
            (space, sub)
        })
    })
}

proptest! {
    #[test]
    fn low_rank_rank_is_recovered((m, k) in low_rank()) {
        // Products of generic factors have full inner rank with overwhelming probability.
        let sv = singular_values(&m);
        let rank = numerical_rank(&m, TOL);
        if k == 0 || sv[k - 1] > 1e-6 {
            prop_assert_eq!(rank, k);
        }
        let span = column_span(&m, TOL);
        let kernel = null_space(&m, TOL);
        prop_assert_eq!(span.ncols(), rank);
        prop_assert_eq!(kernel.ncols(), m.ncols() - rank);
        prop_assert!((span.transpose() * &span - DMatrix::identity(rank, rank)).amax() < 1e-10);
        prop_assert!((&m * &kernel).amax() < 1e-10);
        let residual = &m - &span * (span.transpose() * &m);
        prop_assert!(residual.amax() < 1e-10);
    }

    #[test]
    fn projection_is_idempotent_on_nondegenerate_subspaces((_space, sub) in space_and_subspace(),
                                                           seed in prop::collection::vec(-1.0f64..1.0, 8)) {
        prop_assume!(!sub.is_degenerate(1e-6));
        let (_, _, zero) = sub.inertia(1e-4);
        prop_assume!(zero == 0);
        let d = sub.ambient().dim();
        let x = DVector::from_fn(d, |i, _| seed[i]);
        let px = sub.project(&x, TOL).unwrap();
        let ppx = sub.project(&px, TOL).unwrap();
        prop_assert!((&ppx - &px).amax() < 1e-6 * (1.0 + px.amax()));
        let comp = sub.orthogonal_complement(TOL);
        prop_assert!(comp.contains(&(&x - &px), 1e-6));
        prop_assert_eq!(comp.dim() + sub.dim(), d);
    }

    #[test]
    fn radical_dimension_matches_gram_nullity((_space, sub) in space_and_subspace()) {
        let g = sub.restricted_gram();
        let nullity = sub.dim() - numerical_rank(&g, TOL);
        prop_assert_eq!(sub.radical(TOL).dim(), nullity);
        let perp = sub.orthogonal_complement(TOL);
        prop_assert_eq!(sub.intersection(&perp, TOL).dim(), nullity);
    }

    #[test]
    fn signature_survives_change_of_basis(dim in 2usize..8, q in 0usize..4, entries in matrix(7, 7)) {
        let q = q.min(dim);
        let space = signature_space(dim, q);
        let a = entries.view((0, 0), (dim, dim)).into_owned() + DMatrix::identity(dim, dim) * 3.0;
        prop_assume!(singular_values(&a).last().copied().unwrap_or(0.0) > 1e-3);
        let congruent = a.transpose() * space.gram() * &a;
        let (pos, neg, zero) = inertia(&congruent, TOL);
        prop_assert_eq!((pos, neg, zero), (dim - q, q, 0));
        let rebuilt = QuadSpace::new(congruent).unwrap();
        prop_assert_eq!(rebuilt.signature(), space.signature());
    }
}

#[test]
fn svd_handles_round_off_sized_entries() {
    // Mixed O(1) and O(1e-16) entries once stalled one of the SVD back ends.
    let mut m = DMatrix::from_fn(10, 10, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
    for i in 0..10 {
        m[(i, 0)] *= 1e-17;
        m[(i, 1)] *= 1e-16;
    }
    let sv = singular_values(&m);
    assert_eq!(sv.len(), 10);
    let kernel = null_space(&m, TOL);
    assert!((&m * &kernel).amax() < 1e-10);
}
