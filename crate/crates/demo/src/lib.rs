//! Browser bindings for a few carnot-core operations. See `www/index.html`.

use std::fmt::Write as _;

use carnot_core::algebra::build_catalog;
use carnot_core::dimension::{dyadic_scales, run_preset, MetricMode, Preset};
use carnot_core::grid::Generator;
use carnot_core::group::FrameField;
use carnot_core::sphere::{oriented_integral, Ball, SphereIntegrator};
use wasm_bindgen::prelude::*;

/// Slack below `Q − 1` accepted by the verdict.
const SLOPE_TOL: f64 = 0.25;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Box counts of a preset image and the fitted slope.
#[wasm_bindgen]
pub struct Curve {
    eps: Vec<f64>,
    counts: Vec<f64>,
    slope: f64,
    residual: f64,
    verdict: String,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn eps(&self) -> Vec<f64> {
        self.eps.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn counts(&self) -> Vec<f64> {
        self.counts.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> f64 {
        self.slope
    }

    #[wasm_bindgen(getter)]
    pub fn residual(&self) -> f64 {
        self.residual
    }

    #[wasm_bindgen(getter)]
    pub fn verdict(&self) -> String {
        self.verdict.clone()
    }
}

/// Counts `N(ε)` for `ε = 2^{-a} … 2^{-b}` on a preset in the given group.
#[wasm_bindgen]
pub fn box_count_curve(group: &str, preset: &str, metric: &str, a: u32, b: u32) -> Result<Curve, JsError> {
    if a > b || b > 8 {
        return Err(JsError::new("scales must satisfy a <= b <= 8"));
    }
    let alg = build_catalog(group).map_err(js)?;
    let preset: Preset = preset.parse().map_err(js)?;
    let metric: MetricMode = metric.parse().map_err(js)?;
    let report = run_preset(preset, &alg, &dyadic_scales(a, b), SLOPE_TOL).map_err(js)?;
    let shown = match metric {
        MetricMode::Homogeneous => &report.homogeneous,
        MetricMode::Euclidean => &report.euclidean,
    };
    let fit = shown.fit;
    Ok(Curve {
        eps: shown.table.iter().map(|r| r.eps).collect(),
        counts: shown.table.iter().map(|r| r.count as f64).collect(),
        slope: fit.map_or(f64::NAN, |f| f.slope),
        residual: fit.map_or(f64::NAN, |f| f.residual),
        verdict: format!("{} ({})", report.verdict, report.reason),
    })
}

/// Left-invariant frame and coframe of a catalog group at `z`, as text.
#[wasm_bindgen]
pub fn frame_at(group: &str, z: Vec<f64>) -> Result<String, JsError> {
    let alg = build_catalog(group).map_err(js)?;
    let q = alg.dim();
    if z.len() != q {
        return Err(JsError::new(&format!("{group} needs {q} coordinates, got {}", z.len())));
    }
    let frames = FrameField::new(&alg).map_err(js)?;
    let (x, eta) = (frames.frame_at_f64(&z), frames.coframe_at_f64(&z));
    let mut out = String::new();
    for c in 0..q {
        let col: Vec<String> = (0..q).map(|r| format!("{:.4}", x[(r, c)])).collect();
        let _ = writeln!(out, "X{} = ({})", c + 1, col.join(", "));
    }
    for r in 0..q {
        let row: Vec<String> = (0..q).map(|c| format!("{:.4}", eta[(r, c)])).collect();
        let _ = writeln!(out, "η{} = ({})", r + 1, row.join(", "));
    }
    Ok(out)
}

/// `∫_{∂B} x_1 dx_2 ∧ … ∧ dx_n` over the unit sphere, which is the volume
/// of the unit ball. Returns `[value, exact, hadamard_bound]`.
#[wasm_bindgen]
pub fn ball_volume(n: usize, resolution: usize) -> Result<Vec<f64>, JsError> {
    if !(2..=5).contains(&n) {
        return Err(JsError::new("n must be between 2 and 5"));
    }
    let id = Generator::Identity { dim: n }.build().map_err(js)?;
    let integ = SphereIntegrator::new(n, resolution).map_err(js)?;
    let ball = Ball::unit(n);
    let forms: Vec<usize> = (1..n).collect();
    let r = oriented_integral(&id, &|x: &[f64]| x[0], &forms, &ball, &integ).map_err(js)?;
    Ok(vec![r.value, ball.volume(), r.hadamard_bound])
}
