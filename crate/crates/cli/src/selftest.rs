use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use carnot_core::algebra::{build_catalog, StratifiedAlgebra, CATALOG_SUITE};
use carnot_core::exterior::{admissible_pairs, exterior_derivative, maurer_cartan, span_test, theta_product_check};
use carnot_core::group::{bch_product, random_rational_point, FrameField};
use carnot_core::linalg::Matrix;
use carnot_core::scalar::{rat, Rat};
use carnot_core::sphere::{Ball, SphereIntegrator};

use crate::{Failure, Outcome};

fn associativity(alg: &StratifiedAlgebra, samples: usize, rng: &mut ChaCha8Rng) -> carnot_core::Result<bool> {
    let q = alg.dim();
    for _ in 0..samples {
        let (x, y, z) = (
            random_rational_point(q, rng),
            random_rational_point(q, rng),
            random_rational_point(q, rng),
        );
        let left = bch_product(alg, &bch_product(alg, &x, &y)?, &z)?;
        let right = bch_product(alg, &x, &bch_product(alg, &y, &z)?)?;
        if left != right {
            return Ok(false);
        }
    }
    Ok(true)
}

fn d_squared(alg: &StratifiedAlgebra) -> carnot_core::Result<bool> {
    for k in 0..alg.dim() {
        if !exterior_derivative(alg, &maurer_cartan(alg, k)?)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn theta(alg: &StratifiedAlgebra) -> carnot_core::Result<bool> {
    for (s, r) in admissible_pairs(alg) {
        if !theta_product_check(alg, s, r)?.holds {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Form-vanishing verdict against exact rank membership of `e_s`.
fn span(alg: &StratifiedAlgebra, samples: usize, rng: &mut ChaCha8Rng) -> carnot_core::Result<bool> {
    let q = alg.dim();
    if q < 3 {
        return Ok(true);
    }
    let mut done = 0;
    while done < samples {
        let s = rng.gen_range(0..q);
        // Half the tuples contain e_s in their span by construction.
        let mut xis: Vec<Vec<Rat>> = (0..q - 1).map(|_| random_rational_point(q, rng)).collect();
        if rng.gen_bool(0.5) {
            let mut e = vec![rat(0); q];
            e[s] = rat(1);
            let slot = rng.gen_range(0..q - 1);
            xis[slot] = e;
        }
        let base = Matrix::from_columns(&xis);
        if base.rank() != q - 1 {
            continue;
        }
        let mut with = xis.clone();
        let mut e = vec![rat(0); q];
        e[s] = rat(1);
        with.push(e);
        let member = Matrix::from_columns(&with).rank() == q - 1;
        if span_test(s, &xis, 0.0)?.vanishes() != member {
            return Ok(false);
        }
        done += 1;
    }
    Ok(true)
}

pub fn run(seed: u64, samples: usize) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    let _ = writeln!(out, "seed = {seed}");
    let _ = writeln!(out, "samples = {samples}");
    let mut all = true;
    let mut line = |out: &mut String, name: String, ok: bool| {
        all &= ok;
        let _ = writeln!(out, "{}: {name}", if ok { "PASS" } else { "FAIL" });
    };
    for name in CATALOG_SUITE {
        let alg = build_catalog(name).map_err(|e| Failure(1, format!("{name}: {e}")))?;
        line(&mut out, format!("{name} invariants"), true);
        line(
            &mut out,
            format!("{name} coframe inverts frame"),
            FrameField::new(&alg).is_ok(),
        );
        line(
            &mut out,
            format!("{name} BCH associativity"),
            associativity(&alg, samples, &mut rng)?,
        );
        line(&mut out, format!("{name} d∘d = 0"), d_squared(&alg)?);
        line(&mut out, format!("{name} θ identities"), theta(&alg)?);
        line(&mut out, format!("{name} span test"), span(&alg, samples, &mut rng)?);
    }
    let circle = SphereIntegrator::new(2, 200)?.surface_integral(&Ball::unit(2), &|_| 1.0)?;
    line(
        &mut out,
        format!("circle length {circle:.12}"),
        (circle - 2.0 * std::f64::consts::PI).abs() < 1e-9,
    );
    Ok((out, if all { 0 } else { 1 }))
}
