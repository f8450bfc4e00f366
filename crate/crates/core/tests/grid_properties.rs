use carnot_core::algebra::build_catalog;
use carnot_core::exterior::{span_test, SpanVerdict};
use carnot_core::grid::{
    eta_differential, horizontality_defect, pullback_field, rescale, vanishing_chain_check, DefectMode, FnMap, Generator,
    GridMap, Mapping, PolyTerm, RANK_REL_TOL,
};
use carnot_core::group::FrameField;
use carnot_core::linalg::Matrix;
use carnot_core::Error;
use proptest::prelude::*;

fn trig(source: usize, target: usize, seed: u64) -> Generator {
    Generator::RandomTrig {
        source,
        target,
        terms: 3,
        amplitude: 0.6,
        frequency: 1.3,
        seed,
    }
}

/// Cubic map `R^2 → R^2` with known derivatives.
fn cubic() -> (Generator, impl Fn(&[f64]) -> [[f64; 2]; 2]) {
    let term = |component, coeff, powers: [u32; 2]| PolyTerm {
        component,
        coeff,
        powers: powers.to_vec(),
    };
    let gen = Generator::Polynomial {
        source: 2,
        target: 2,
        terms: vec![
            term(0, 1.0, [3, 0]),
            term(0, 2.0, [1, 2]),
            term(1, -1.5, [2, 1]),
            term(1, 0.5, [0, 3]),
        ],
    };
    let jac = |y: &[f64]| {
        let (a, b) = (y[0], y[1]);
        [
            [3.0 * a * a + 2.0 * b * b, 4.0 * a * b],
            [-3.0 * a * b, -1.5 * a * a + 1.5 * b * b],
        ]
    };
    (gen, jac)
}

#[test]
fn slice_differential_converges_at_second_order() {
    let (gen, exact) = cubic();
    let mut errors = Vec::new();
    for res in [11, 21, 41] {
        let gm = GridMap::from_generator(&gen, &[-1.0, -1.0], &[1.0, 1.0], &[res, res]).unwrap();
        let mut worst: f64 = 0.0;
        for zi in 1..res - 1 {
            // Keep axis 1, fix axis 0 at index zi.
            let slice = gm.slice(&[1], &[zi]).unwrap();
            for yi in 1..res - 1 {
                let full = gm.differential(&[zi, yi]).unwrap();
                let part = slice.differential(&[yi]).unwrap();
                // The slice stencil is the full stencil restricted to the kept axis.
                for r in 0..2 {
                    assert_eq!(part[(r, 0)], full[(r, 1)]);
                }
                let y = gm.point(gm.flat_index(&[zi, yi]).unwrap());
                let j = exact(&y);
                for r in 0..2 {
                    worst = worst.max((part[(r, 0)] - j[r][1]).abs());
                }
            }
        }
        errors.push(worst);
    }
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.8, "order {order} from {errors:?}");
    }
}

#[test]
fn slice_rejects_bad_axes() {
    let (gen, _) = cubic();
    let gm = GridMap::from_generator(&gen, &[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
    assert!(matches!(gm.slice(&[], &[0, 0]), Err(Error::InvalidSlice(_))));
    assert!(matches!(gm.slice(&[0, 1], &[]), Err(Error::InvalidSlice(_))));
    assert!(matches!(gm.slice(&[1], &[7]), Err(Error::InvalidSlice(_))));
}

/// Smaller singular value of a `k × 2` matrix, from the eigenvalues of `BᵀB`.
fn second_singular_value(b: &Matrix<f64>) -> f64 {
    let dot = |i: usize, j: usize| (0..b.rows()).map(|r| b[(r, i)] * b[(r, j)]).sum::<f64>();
    let (p, q, r) = (dot(0, 0), dot(0, 1), dot(1, 1));
    let half = 0.5 * (p + r);
    let disc = (0.25 * (p - r) * (p - r) + q * q).sqrt();
    (half - disc).max(0.0).sqrt()
}

/// `(u + a v + b u v, (…)², (…)³/6)` lies on the horizontal curve `t ↦ (t, t², t³/6)`.
fn horizontal_rank_one(a: f64, b: f64) -> impl Fn(&[f64], &mut [f64]) + Sync {
    move |y: &[f64], out: &mut [f64]| {
        let t = y[0] + a * y[1] + b * y[0] * y[1];
        out[0] = t;
        out[1] = t * t;
        out[2] = t * t * t / 6.0;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rescaled_differential_is_the_differential_at_the_blown_up_point(
        seed in 0u64..1000,
        z in proptest::collection::vec(-0.5f64..0.5, 2),
        r in 0.05f64..0.4,
        y in proptest::collection::vec(-0.9f64..0.9, 2),
    ) {
        let inner = trig(2, 3, seed).build().unwrap();
        let blown = rescale(&inner, &z, r).unwrap();
        let fd = FnMap::new(2, 3, |p: &[f64], out: &mut [f64]| blown.eval_into(p, out));
        let lhs = fd.jacobian(&y);
        let at: Vec<f64> = z.iter().zip(&y).map(|(z, y)| z + r * y).collect();
        let rhs = inner.jacobian(&at);
        for i in 0..3 {
            for j in 0..2 {
                prop_assert!((lhs[(i, j)] - rhs[(i, j)]).abs() < 1e-6, "{} vs {}", lhs[(i, j)], rhs[(i, j)]);
            }
        }
    }

    #[test]
    fn h1_defect_agrees_with_span_tests_cell_by_cell(seed in 0u64..10_000) {
        let engel = build_catalog("engel").unwrap();
        let frames = FrameField::new(&engel).unwrap();
        let gm = GridMap::from_generator(&trig(3, 4, seed), &[0.0; 3], &[1.0; 3], &[4, 4, 4]).unwrap();
        let tol = 1e-9;
        let defect = horizontality_defect(&gm, &engel, DefectMode::H1InImage, tol).unwrap();
        for p in (0..gm.len()).filter(|&p| gm.is_interior(p)) {
            if gm.differential_flat(p).numerical_rank(RANK_REL_TOL) < 3 {
                continue;
            }
            let a = eta_differential(&gm, &frames, p);
            let cols: Vec<Vec<f64>> = (0..3).map(|c| a.column(c)).collect();
            let scale = gm.differential_flat(p).frobenius().powi(3);
            let members = (0..2).all(|s| span_test(s, &cols, tol * scale).unwrap().verdict == SpanVerdict::Member);
            prop_assert_eq!(members, defect.values()[p] <= tol);
        }
    }

    #[test]
    fn small_chain_residuals_bound_the_second_singular_value(
        a in -1.0f64..1.0,
        b in -0.5f64..0.5,
        seed in 0u64..1000,
        horizontal in any::<bool>(),
    ) {
        let h = build_catalog("heisenberg").unwrap();
        let frames = FrameField::new(&h).unwrap();
        let gm = if horizontal {
            GridMap::sample(&FnMap::new(2, 3, horizontal_rank_one(a, b)), &[-0.5, -0.5], &[0.5, 0.5], &[41, 41]).unwrap()
        } else {
            GridMap::from_generator(&trig(2, 3, seed), &[-0.5, -0.5], &[0.5, 0.5], &[41, 41]).unwrap()
        };
        let tol = 1e-3;
        match vanishing_chain_check(&gm, &h, 1, tol) {
            Ok(report) => {
                let r1 = report.step1.max();
                let d12 = report.steps.iter().map(|s| s.direct.max()).fold(0.0, f64::max);
                let small = r1 < tol && report.steps.iter().all(|s| s.direct.max() < tol && s.implied.max() < tol);
                prop_assert!(small || !horizontal, "{}", report.summary());
                if small {
                    // σ1·σ2 = |Λ²B| ≤ |f*(η1∧η2)| + √2·σ1·|f*η3|, and σ2 ≤ σ1.
                    let bound = d12.sqrt() + 2f64.sqrt() * r1;
                    for p in (0..gm.len()).filter(|&p| gm.is_interior(p)) {
                        let s2 = second_singular_value(&eta_differential(&gm, &frames, p));
                        prop_assert!(s2 <= bound * (1.0 + 1e-9) + 1e-12, "σ2 = {s2} > {bound}");
                    }
                }
            }
            Err(Error::PreconditionDefect(_)) => prop_assert!(!horizontal),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn legendrian_cylinder_chain() {
    let h = build_catalog("heisenberg").unwrap();
    let gen = Generator::LegendrianLift { radius: 1.0, source: 2 };
    let pi = std::f64::consts::PI;
    let gm = GridMap::from_generator_with_step(&gen, &[-pi, 0.0], &[pi, 0.05], 1e-3).unwrap();
    let report = vanishing_chain_check(&gm, &h, 1, 1e-6).unwrap();
    assert!(report.step1.max() < 1e-6);
    for step in &report.steps {
        assert!(step.direct.max() < 1e-6);
        assert!(step.implied.max() < 1e-4);
    }
    assert_eq!(report.max_rank(), 1);
    assert!(report.rank_histogram[2..].iter().all(|&c| c == 0));
}

#[test]
fn cylinder_contact_pullback_is_the_stencil_error() {
    // Central differences scale (cos, sin)' by sin(h)/h and leave u/2 exact,
    // so f*η3(∂u) = ½(1 − sin(h)/h) ≈ h²/12 and f*η3(∂v) = 0.
    let h = build_catalog("heisenberg").unwrap();
    let gen = Generator::LegendrianLift { radius: 1.0, source: 2 };
    let pi = std::f64::consts::PI;
    let gm = GridMap::from_generator_with_step(&gen, &[-pi, 0.0], &[pi, 0.05], 1e-3).unwrap();
    let step = gm.step(0);
    let expected = 0.5 * (1.0 - step.sin() / step);
    let field = pullback_field(&gm, &h, &[2]).unwrap();
    for p in (0..gm.len()).filter(|&p| gm.is_interior(p)) {
        let c = field.coeffs_at(p);
        assert!((c[0].abs() - expected).abs() < 1e-12, "{} vs {expected}", c[0]);
        assert!(c[1].abs() < 1e-12);
    }
    assert!(expected < 1e-6 && expected > 1e-8, "{expected}");
}

#[test]
fn grid_io_round_trips() {
    let gm = GridMap::from_generator(&trig(2, 3, 9), &[0.0, -1.0], &[1.0, 1.0], &[7, 5]).unwrap();
    let mut csv = Vec::new();
    gm.write_csv(&mut csv).unwrap();
    let back = GridMap::read_csv(csv.as_slice()).unwrap();
    assert_eq!(back.values(), gm.values());
    assert_eq!(back.resolution(), gm.resolution());
    let mut bin = Vec::new();
    gm.write_binary(&mut bin).unwrap();
    let back = GridMap::read_binary(bin.as_slice()).unwrap();
    assert_eq!(back.values(), gm.values());
    assert_eq!((back.lower(), back.upper()), (gm.lower(), gm.upper()));
}
