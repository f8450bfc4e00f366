use carnot_core::algebra::{build_algebra, build_catalog, catalog, check_spec, AlgebraSpec, BracketEntry, CATALOG_SUITE};
use carnot_core::group::{bch_product, dilation, quasi_triangle_constant, FrameField};
use carnot_core::linalg::Matrix;
use carnot_core::scalar::{rat, ratio, Rat};
use num_traits::Zero;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rat> {
    (-9i64..=9, 1i64..=7).prop_map(|(n, d)| ratio(n, d))
}

fn point(q: usize) -> impl Strategy<Value = Vec<Rat>> {
    proptest::collection::vec(rational(), q)
}

/// A catalog group with three random points of matching dimension.
fn with_points() -> impl Strategy<Value = (&'static str, Vec<Rat>, Vec<Rat>, Vec<Rat>)> {
    prop::sample::select(CATALOG_SUITE.to_vec()).prop_flat_map(|name| {
        let q = build_catalog(name).unwrap().dim();
        (Just(name), point(q), point(q), point(q))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bch_is_associative((name, x, y, z) in with_points()) {
        let alg = build_catalog(name).unwrap();
        let left = bch_product(&alg, &bch_product(&alg, &x, &y).unwrap(), &z).unwrap();
        let right = bch_product(&alg, &x, &bch_product(&alg, &y, &z).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn dilation_is_a_homomorphism((name, x, y, _) in with_points(), r in (1i64..=9, 1i64..=5)) {
        let alg = build_catalog(name).unwrap();
        let r = ratio(r.0, r.1);
        let lhs = dilation(&alg, &bch_product(&alg, &x, &y).unwrap(), &r).unwrap();
        let rhs = bch_product(&alg, &dilation(&alg, &x, &r).unwrap(), &dilation(&alg, &y, &r).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn coframe_annihilates_horizontal_frame((name, z, _, _) in with_points()) {
        let alg = build_catalog(name).unwrap();
        let q = alg.dim();
        let frames = FrameField::new(&alg).unwrap();
        let frame = frames.frame_at(&z).unwrap();
        let coframe = frames.coframe_at(&z).unwrap();
        let m1 = alg.strata()[0];
        for i in 0..m1 {
            let col = frame.column(i);
            for r in m1..q {
                let v = (0..q).fold(Rat::zero(), |acc, c| acc + coframe[(r, c)].clone() * col[c].clone());
                prop_assert!(v.is_zero());
            }
        }
        prop_assert!(coframe.mul(&frame).unwrap().is_identity());
    }
}

#[test]
fn catalog_validates_exactly() {
    for name in CATALOG_SUITE.iter().chain(&["heisenberg(3)", "free_step2(2)", "abelian4"]) {
        let alg = build_catalog(name).unwrap();
        for check in alg.validate() {
            assert!(check.outcome.is_ok(), "{name}: {}", check.name);
        }
    }
}

#[test]
fn jacobi_residual_vanishes_for_all_triples() {
    for name in CATALOG_SUITE {
        let alg = build_catalog(name).unwrap();
        let q = alg.dim();
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    assert!(alg.jacobi_residual(i, j, k).iter().all(Zero::is_zero), "{name} ({i},{j},{k})");
                }
            }
        }
    }
}

#[test]
fn degrees_lie_between_offsets() {
    for name in CATALOG_SUITE {
        let alg = build_catalog(name).unwrap();
        for i in 0..alg.dim() {
            let d = alg.degree(i);
            // 1-based: m_{d−1} < i ≤ m_d.
            assert!(alg.offset(d - 1) < i + 1 && i < alg.offset(d), "{name} i={i}");
        }
        assert_eq!(alg.homogeneous_dim(), alg.homogeneous_dim_from_degrees());
        assert_eq!(alg.homogeneous_dim(), alg.degrees().iter().sum::<usize>());
    }
}

#[test]
fn homogeneous_dimensions() {
    // Σ j · dim V_j by hand.
    let expected = [("heisenberg", 4), ("heisenberg(2)", 6), ("engel", 7), ("free_step2(3)", 9)];
    for (name, q) in expected {
        assert_eq!(build_catalog(name).unwrap().homogeneous_dim(), q, "{name}");
    }
}

#[test]
fn heisenberg_hausdorff_dimension_matches_reference() {
    // The Heisenberg group has Hausdorff dimension Q = 4.
    let alg = build_catalog("heisenberg").unwrap();
    assert_eq!((alg.dim(), alg.step(), alg.homogeneous_dim()), (3, 2, 4));
}

#[test]
fn spec_round_trips_through_toml() {
    for name in CATALOG_SUITE {
        let spec = catalog(name).unwrap();
        assert_eq!(AlgebraSpec::from_toml(&spec.to_toml()).unwrap(), spec);
    }
}

#[test]
fn check_spec_reports_every_invariant() {
    let spec = AlgebraSpec {
        name: "bad".into(),
        strata_dims: vec![3, 1, 1],
        brackets: vec![
            BracketEntry::unit(1, 2, 4),
            BracketEntry::unit(1, 4, 5),
            BracketEntry::unit(3, 4, 5),
        ],
    };
    let report = check_spec(&spec);
    assert!(!report.passed());
    let failed: Vec<&str> = report.checks.iter().filter(|c| c.outcome.is_err()).map(|c| c.name).collect();
    assert_eq!(failed, ["jacobi"]);
    assert!(build_algebra(&spec).is_err());
}

#[test]
fn quasi_triangle_constant_is_at_most_two() {
    let alg = build_catalog("heisenberg").unwrap();
    let c = quasi_triangle_constant(&alg, 10_000, 2.0, 17);
    assert!(c.is_finite() && c <= 2.0, "{c}");
}

#[test]
fn frame_at_origin_is_identity() {
    for name in CATALOG_SUITE {
        let alg = build_catalog(name).unwrap();
        let f = FrameField::new(&alg).unwrap();
        let zero = vec![rat(0); alg.dim()];
        assert_eq!(f.frame_at(&zero).unwrap(), Matrix::identity(alg.dim()));
    }
}
