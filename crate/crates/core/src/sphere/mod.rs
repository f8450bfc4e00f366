//! Oriented integrals of pullback `(n−1)`-forms over spheres `∂B(z, r) ⊂ R^n`.

mod atlas;
mod quadrature;

use std::f64::consts::PI;

pub use atlas::{smoothstep, SphereChartAtlas, CAP_ANGLE, DEFAULT_BAND};
pub use quadrature::{gauss_legendre, gauss_legendre_on, unit_ball_volume, QuadratureGrid};

use crate::error::{Error, Result};
use crate::grid::Mapping;
use crate::linalg::Matrix;
use crate::parallel::map_range;

/// Relative sphere-area error above which an integral is flagged under-resolved.
pub const AREA_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::NonpositiveScale(radius));
        }
        Ok(Self { center, radius })
    }

    pub fn unit(n: usize) -> Self {
        Self {
            center: vec![0.0; n],
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32)
    }

    pub fn surface_area(&self) -> f64 {
        self.dim() as f64 * unit_ball_volume(self.dim()) * self.radius.powi(self.dim() as i32 - 1)
    }
}

/// A weighted point of `∂B` with the tangent map of its parameterization.
#[derive(Clone, Debug)]
pub struct SphereNode {
    pub x: Vec<f64>,
    /// Quadrature weight times the partition-of-unity value.
    pub weight: f64,
    /// `n × (n−1)` derivative of the parameterization.
    pub tangent: Matrix<f64>,
    /// `(n−1)`-dimensional Jacobian of the parameterization.
    pub area_element: f64,
}

/// Quadrature on spheres: the circle parameterization for `n = 2`, the
/// two-chart atlas otherwise.
#[derive(Clone, Debug)]
pub struct SphereIntegrator {
    n: usize,
    charts: Option<(SphereChartAtlas, QuadratureGrid)>,
    circle_nodes: usize,
}

impl SphereIntegrator {
    /// For `n = 2`, `resolution` trapezoid nodes on the circle; otherwise
    /// `resolution` Gauss points per radial segment and polar angle.
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        Self::with_band(n, resolution, DEFAULT_BAND)
    }

    pub fn with_band(n: usize, resolution: usize, band: f64) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::BadParams("resolution must be positive".into()));
        }
        if n == 2 {
            return Ok(Self {
                n,
                charts: None,
                circle_nodes: resolution,
            });
        }
        let atlas = SphereChartAtlas::new(n, band)?;
        let quad = QuadratureGrid::ball_with_breaks(n - 1, resolution, &atlas.radial_breaks())?;
        Self::from_parts(atlas, quad)
    }

    pub fn from_parts(atlas: SphereChartAtlas, quad: QuadratureGrid) -> Result<Self> {
        if quad.dim() + 1 != atlas.n() {
            return Err(Error::DimensionMismatch {
                expected: atlas.n() - 1,
                got: quad.dim(),
            });
        }
        Ok(Self {
            n: atlas.n(),
            charts: Some((atlas, quad)),
            circle_nodes: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self, ball: &Ball) -> Result<Vec<SphereNode>> {
        if ball.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: ball.dim(),
            });
        }
        let (z, r) = (&ball.center, ball.radius);
        let Some((atlas, quad)) = &self.charts else {
            let count = self.circle_nodes;
            let w = 2.0 * PI / count as f64;
            return Ok((0..count)
                .map(|k| {
                    let t = -PI + w * k as f64;
                    SphereNode {
                        x: vec![z[0] + r * t.cos(), z[1] + r * t.sin()],
                        weight: w,
                        tangent: Matrix::from_rows(&[vec![-r * t.sin()], vec![r * t.cos()]]),
                        area_element: r,
                    }
                })
                .collect());
        };
        let mut out = Vec::with_capacity(2 * quad.len());
        for chart in 0..2 {
            for (xi, w) in quad.nodes().iter().zip(quad.weights()) {
                let unit = atlas.point(chart, xi);
                let upsilon = atlas.weight(chart, &unit);
                if upsilon == 0.0 {
                    continue;
                }
                let tangent = atlas.tangent(chart, xi).map(|v| r * v);
                let area_element = tangent.transpose().mul(&tangent)?.det().max(0.0).sqrt();
                out.push(SphereNode {
                    x: unit.iter().zip(z).map(|(u, c)| c + r * u).collect(),
                    weight: w * upsilon,
                    tangent,
                    area_element,
                });
            }
        }
        Ok(out)
    }

    /// `∫_{∂B} φ dH^{n−1}`.
    pub fn surface_integral(&self, ball: &Ball, phi: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<f64> {
        let nodes = self.nodes(ball)?;
        let parts = map_range(nodes.len(), |k| nodes[k].weight * nodes[k].area_element * phi(&nodes[k].x));
        Ok(parts.iter().sum())
    }
}

#[derive(Clone, Debug)]
pub struct SphereIntegral {
    pub value: f64,
    /// `√n ∫_{∂B} |g| |Df|^{n−1} dH^{n−1}`.
    pub hadamard_bound: f64,
    /// Quadrature of the sphere area.
    pub area: f64,
    /// Relative error of `area` against the exact value.
    pub area_error: f64,
    pub under_resolved: bool,
}

fn check_forms(n: usize, m: usize, l: &[usize]) -> Result<()> {
    if l.len() + 1 != n {
        return Err(Error::DegreeMismatch(l.len(), n - 1));
    }
    if l.windows(2).any(|w| w[0] >= w[1]) || l.iter().any(|&i| i >= m) {
        return Err(Error::Index(format!("{l:?} is not an increasing tuple below {m}")));
    }
    Ok(())
}

/// `∫_{∂B} g df_L` through the chart sum with the partition of unity.
pub fn oriented_integral(
    f: &impl Mapping,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    l: &[usize],
    ball: &Ball,
    integrator: &SphereIntegrator,
) -> Result<SphereIntegral> {
    let n = integrator.n();
    if f.source_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.source_dim(),
        });
    }
    check_forms(n, f.target_dim(), l)?;
    let nodes = integrator.nodes(ball)?;
    let cols: Vec<usize> = (0..n - 1).collect();
    let parts = map_range(nodes.len(), |k| {
        let node = &nodes[k];
        let df = f.jacobian(&node.x);
        let gx = g(&node.x);
        let pulled = df
            .select(l, &(0..n).collect::<Vec<_>>())
            .mul(&node.tangent)
            .expect("shapes agree");
        let value = node.weight * gx * pulled.select(&cols, &cols).det();
        let bound = node.weight * node.area_element * gx.abs() * df.frobenius().powi(n as i32 - 1);
        (value, bound, node.weight * node.area_element)
    });
    let (mut value, mut bound, mut area) = (0.0, 0.0, 0.0);
    for (v, b, a) in parts {
        value += v;
        bound += b;
        area += a;
    }
    let area_error = (area - ball.surface_area()).abs() / ball.surface_area();
    Ok(SphereIntegral {
        value,
        hadamard_bound: (n as f64).sqrt() * bound,
        area,
        area_error,
        under_resolved: area_error > AREA_TOL,
    })
}

#[derive(Clone, Debug)]
pub struct StokesResult {
    /// `∫_{∂B} g df_J`.
    pub boundary: f64,
    /// `∫_B dg ∧ df_J`.
    pub volume: f64,
    pub residual: f64,
}

/// `|∫_{∂B} g df_J − ∫_B dg ∧ df_J|` with the volume integral on a ball
/// quadrature of the given resolution.
pub fn stokes_residual(
    f: &impl Mapping,
    g: &impl Mapping,
    j: &[usize],
    ball: &Ball,
    integrator: &SphereIntegrator,
    volume_resolution: usize,
) -> Result<StokesResult> {
    let n = integrator.n();
    if g.target_dim() != 1 || g.source_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: g.target_dim(),
        });
    }
    let boundary = oriented_integral(f, &|x: &[f64]| g.eval(x)[0], j, ball, integrator)?.value;
    let quad = QuadratureGrid::ball(n, volume_resolution)?;
    let all: Vec<usize> = (0..n).collect();
    let scale = ball.radius.powi(n as i32);
    let parts = map_range(quad.len(), |k| {
        let x: Vec<f64> = quad.nodes()[k]
            .iter()
            .zip(&ball.center)
            .map(|(u, c)| c + ball.radius * u)
            .collect();
        let dg = g.jacobian(&x);
        let df = f.jacobian(&x).select(j, &all);
        let top = Matrix::from_fn(n, n, |r, c| if r == 0 { dg[(0, c)] } else { df[(r - 1, c)] });
        quad.weights()[k] * scale * top.det()
    });
    let volume: f64 = parts.iter().sum();
    Ok(StokesResult {
        boundary,
        volume,
        residual: (boundary - volume).abs(),
    })
}

#[derive(Clone, Debug)]
pub struct DifferenceBound {
    /// `|∫ g df_J − ∫ g dh_J|`.
    pub lhs: f64,
    /// The right-hand side of the difference estimate with constant 1.
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when both vanish.
    pub ratio: f64,
}

/// Compares two oriented integrals against the telescoping bound
/// `‖g‖_∞ Σ_k A_f^{(k−1)/(n−1)} A_{f−h}^{1/(n−1)} A_h^{(n−1−k)/(n−1)}`
/// with `A_u = ∫_{∂B} |Du|^{n−1}`.
pub fn difference_bound_ratio(
    f: &impl Mapping,
    h: &impl Mapping,
    g: &(dyn Fn(&[f64]) -> f64 + Sync),
    j: &[usize],
    ball: &Ball,
    integrator: &SphereIntegrator,
) -> Result<DifferenceBound> {
    let n = integrator.n();
    if f.target_dim() != h.target_dim() || f.source_dim() != h.source_dim() {
        return Err(Error::DimensionMismatch {
            expected: f.target_dim(),
            got: h.target_dim(),
        });
    }
    let lhs = (oriented_integral(f, g, j, ball, integrator)?.value - oriented_integral(h, g, j, ball, integrator)?.value).abs();
    let p = n as i32 - 1;
    let a_f = integrator.surface_integral(ball, &|x: &[f64]| f.jacobian(x).frobenius().powi(p))?;
    let a_h = integrator.surface_integral(ball, &|x: &[f64]| h.jacobian(x).frobenius().powi(p))?;
    let a_d = integrator.surface_integral(ball, &|x: &[f64]| {
        let (df, dh) = (f.jacobian(x), h.jacobian(x));
        Matrix::from_fn(df.rows(), df.cols(), |r, c| df[(r, c)] - dh[(r, c)])
            .frobenius()
            .powi(p)
    })?;
    let g_max = integrator.nodes(ball)?.iter().map(|nd| g(&nd.x).abs()).fold(0.0, f64::max);
    let e = 1.0 / p as f64;
    let rhs = g_max
        * (1..=p)
            .map(|k| a_f.powf((k - 1) as f64 * e) * a_d.powf(e) * a_h.powf((p - k) as f64 * e))
            .sum::<f64>();
    let ratio = if rhs > 0.0 {
        lhs / rhs
    } else if lhs <= 1e-14 {
        0.0
    } else {
        return Err(Error::Internal(format!("difference {lhs:e} with a vanishing bound")));
    };
    Ok(DifferenceBound { lhs, rhs, ratio })
}
