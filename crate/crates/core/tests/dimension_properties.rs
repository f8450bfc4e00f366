use carnot_core::algebra::build_catalog;
use carnot_core::dimension::{
    box_count, dimension_fit, dyadic_scales, run_preset, BoxCountResult, MetricMode, PointCloud, Preset, SampledImage, Verdict,
};
use carnot_core::Error;
use proptest::prelude::*;

/// Slack on the slope bounds for a finite cloud.
const SLOPE_TOL: f64 = 0.25;

fn cloud(points: &[Vec<f64>]) -> PointCloud {
    PointCloud::from_points(points, "random").unwrap()
}

fn both_modes(src: &PointCloud, scales: &[f64]) -> (BoxCountResult, BoxCountResult) {
    let h = build_catalog("heisenberg").unwrap();
    (
        box_count(src, &h, MetricMode::Homogeneous, scales).unwrap(),
        box_count(src, &h, MetricMode::Euclidean, scales).unwrap(),
    )
}

fn points(max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 1..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn counts_never_increase_with_scale(pts in points(400)) {
        let (hom, euc) = both_modes(&cloud(&pts), &dyadic_scales(0, 6));
        prop_assert!(hom.is_monotone(), "{:?}", hom.table);
        prop_assert!(euc.is_monotone(), "{:?}", euc.table);
        for r in hom.table.iter().chain(&euc.table) {
            prop_assert!(r.count >= 1 && r.count <= pts.len() as u64);
        }
    }

    #[test]
    fn slopes_stay_within_zero_and_q(pts in points(3000)) {
        let (hom, euc) = both_modes(&cloud(&pts), &dyadic_scales(0, 5));
        for r in [&hom, &euc] {
            if let Some(s) = r.slope() {
                prop_assert!(s.is_finite());
                prop_assert!((-SLOPE_TOL..=4.0 + SLOPE_TOL).contains(&s), "{} slope {}", r.mode, s);
            }
        }
    }

    #[test]
    fn dense_grids_order_the_modes(n in 8usize..24, lo in proptest::collection::vec(-1.0f64..0.0, 3)) {
        // Uniform grids in a box: both modes see a 3-dimensional set.
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = |a: usize, l: f64| l + a as f64 / n as f64;
                    pts.push(vec![t(i, lo[0]), t(j, lo[1]), t(k, lo[2])]);
                }
            }
        }
        let (hom, euc) = both_modes(&cloud(&pts), &dyadic_scales(0, 3));
        if let (Some(a), Some(b)) = (hom.slope(), euc.slope()) {
            prop_assert!(a >= b, "homogeneous {} < euclidean {}", a, b);
        }
    }
}

#[test]
fn nearby_points_never_split_again() {
    // Left-translated lattices at successive scales are not nested; counted
    // per scale, this pair gave 1, 2, 1, 2 cells.
    let pts = vec![
        vec![-0.12342098042996907, 0.47345020938428706, 0.13790842675122506],
        vec![-0.08275738657251194, 0.4878945275086698, 0.12433169810083398],
    ];
    let (hom, euc) = both_modes(&cloud(&pts), &dyadic_scales(0, 6));
    for r in [hom, euc] {
        assert!(r.is_monotone(), "{:?}", r.table.iter().map(|c| c.count).collect::<Vec<_>>());
    }
}

#[test]
fn too_few_scales() {
    assert!(matches!(dimension_fit(&[(0.5, 2), (0.25, 4)]), Err(Error::TooFewScales(2))));
    let fit = dimension_fit(&[(0.5, 8), (0.25, 64), (0.125, 512)]).unwrap();
    assert!((fit.slope - 3.0).abs() < 1e-12 && fit.residual < 1e-12);
}

#[test]
fn vertical_plane_slopes() {
    let h = build_catalog("heisenberg").unwrap();
    let r = run_preset(Preset::VerticalPlane, &h, &dyadic_scales(2, 6), 0.25).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!((r.homogeneous.slope().unwrap() - 3.0).abs() < 0.1);
    assert!((r.euclidean.slope().unwrap() - 2.0).abs() < 0.1);
}

#[test]
fn graph_passes_in_range() {
    let h = build_catalog("heisenberg").unwrap();
    let r = run_preset(Preset::Graph, &h, &dyadic_scales(2, 6), 0.25).unwrap();
    let s = r.homogeneous.slope().unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{}", r.reason);
    assert!((2.8..=3.2).contains(&s), "{s}");
    assert!(r.full_rank_fraction >= 0.99);
}

#[test]
fn presets_order_the_modes() {
    let h = build_catalog("heisenberg").unwrap();
    for preset in Preset::ALL {
        let r = run_preset(preset, &h, &dyadic_scales(2, 5), 0.25).unwrap();
        let (a, b) = (r.homogeneous.slope().unwrap(), r.euclidean.slope().unwrap());
        assert!(a >= b, "{preset}: {a} < {b}");
        assert!(r.homogeneous.is_monotone() && r.euclidean.is_monotone());
    }
}

#[test]
fn refinement_keeps_preset_slopes_within_the_residual() {
    let h = build_catalog("heisenberg").unwrap();
    let scales = dyadic_scales(2, 5);
    let mut failures = Vec::new();
    for preset in Preset::ALL {
        let (gen, lower, upper) = preset.setup(3).unwrap();
        let map = gen.build().unwrap();
        let d = preset.density();
        for mode in [MetricMode::Homogeneous, MetricMode::Euclidean] {
            let coarse = SampledImage::with_density(map.clone(), &lower, &upper, d).unwrap();
            let fine = SampledImage::with_density(map.clone(), &lower, &upper, 2.0 * d).unwrap();
            let a = box_count(&coarse, &h, mode, &scales).unwrap().fit.unwrap();
            let b = box_count(&fine, &h, mode, &scales).unwrap().fit.unwrap();
            // Residuals can be exactly zero, so equality is allowed up to rounding.
            if (a.slope - b.slope).abs() > a.residual.max(b.residual) + 1e-12 {
                failures.push(format!(
                    "{preset} {mode} at density {d}: {} vs {} (residuals {}, {})",
                    a.slope, b.slope, a.residual, b.residual
                ));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}
