use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let half = (b - a) / 2.0;
    (
        x.iter().map(|t| a + half * (t + 1.0)).collect(),
        w.iter().map(|w| w * half).collect(),
    )
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Tensor quadrature on the unit ball of `R^d` in hyperspherical
/// coordinates: composite Gauss-Legendre in the radius (split at `breaks`),
/// Gauss-Legendre in the cosines of the polar angles, trapezoid in the azimuth.
#[derive(Clone, Debug)]
pub struct QuadratureGrid {
    dim: usize,
    resolution: usize,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn ball(dim: usize, resolution: usize) -> Result<Self> {
        Self::ball_with_breaks(dim, resolution, &[])
    }

    /// `breaks` are radii in `(0, 1)` where the integrand may lose smoothness.
    pub fn ball_with_breaks(dim: usize, resolution: usize, breaks: &[f64]) -> Result<Self> {
        if dim == 0 || resolution == 0 {
            return Err(Error::BadParams("quadrature needs dim >= 1 and resolution >= 1".into()));
        }
        let mut edges = vec![0.0];
        let mut sorted: Vec<f64> = breaks.iter().copied().filter(|b| *b > 0.0 && *b < 1.0).collect();
        sorted.sort_by(f64::total_cmp);
        edges.extend(sorted);
        edges.push(1.0);
        // Radial weights include ρ^{d−1}, rescaled to be exact on each segment.
        let mut radial = Vec::new();
        for w in edges.windows(2) {
            let (x, wt) = gauss_legendre_on(resolution, w[0], w[1]);
            let with_jac: Vec<f64> = x.iter().zip(&wt).map(|(r, w)| w * r.powi(dim as i32 - 1)).collect();
            let exact = (w[1].powi(dim as i32) - w[0].powi(dim as i32)) / dim as f64;
            let fix = exact / with_jac.iter().sum::<f64>();
            radial.extend(x.into_iter().zip(with_jac.into_iter().map(|w| w * fix)));
        }
        // Directions on S^{d-1} with their surface weights.
        let mut dirs: Vec<(Vec<f64>, f64)> = Vec::new();
        match dim {
            1 => {
                dirs.push((vec![1.0], 1.0));
                dirs.push((vec![-1.0], 1.0));
            }
            _ => {
                let azimuth = (2 * resolution).max(4);
                let (ts, tw) = gauss_legendre(resolution);
                let mut partial: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
                for k in 1..dim - 1 {
                    let power = dim - 1 - k;
                    // t = cos φ turns ∫ sin^p φ dφ into ∫ (1 − t²)^{(p−1)/2} dt,
                    // polynomial for odd p; the rescale makes the rule exact on 1.
                    let raw: Vec<f64> = ts
                        .iter()
                        .zip(&tw)
                        .map(|(t, w)| w * (1.0 - t * t).powf((power as f64 - 1.0) / 2.0))
                        .collect();
                    let fix = sine_power_integral(power) / raw.iter().sum::<f64>();
                    let mut next = Vec::new();
                    for (angles, w) in &partial {
                        for (t, wp) in ts.iter().zip(&raw) {
                            let mut a = angles.clone();
                            a.push(t.acos());
                            next.push((a, w * wp * fix));
                        }
                    }
                    partial = next;
                }
                for (angles, w) in partial {
                    for j in 0..azimuth {
                        let phi = 2.0 * PI * j as f64 / azimuth as f64;
                        let mut a = angles.clone();
                        a.push(phi);
                        dirs.push((spherical_to_cartesian(&a), w * 2.0 * PI / azimuth as f64));
                    }
                }
            }
        }
        let mut nodes = Vec::with_capacity(radial.len() * dirs.len());
        let mut weights = Vec::with_capacity(nodes.capacity());
        for (rho, wr) in &radial {
            for (dir, wd) in &dirs {
                nodes.push(dir.iter().map(|c| rho * c).collect());
                weights.push(wr * wd);
            }
        }
        Ok(Self {
            dim,
            resolution,
            nodes,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `∫_0^π sin^p φ dφ`.
fn sine_power_integral(p: usize) -> f64 {
    match p {
        0 => PI,
        1 => 2.0,
        _ => (p - 1) as f64 / p as f64 * sine_power_integral(p - 2),
    }
}

/// `(φ_1, …, φ_{d−1}) ↦` unit vector in `R^d`, last angle azimuthal.
fn spherical_to_cartesian(angles: &[f64]) -> Vec<f64> {
    let d = angles.len() + 1;
    let mut out = vec![0.0; d];
    let mut prod = 1.0;
    for (k, phi) in angles.iter().enumerate() {
        out[k] = prod * phi.cos();
        prod *= phi.sin();
    }
    out[d - 1] = prod;
    out
}
