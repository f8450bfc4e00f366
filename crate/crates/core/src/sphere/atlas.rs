use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Largest polar angle reached by a chart.
pub const CAP_ANGLE: f64 = 2.0 * PI / 3.0;

/// Default half-width (radians) of the equatorial blending band.
pub const DEFAULT_BAND: f64 = 0.3;

/// `t⁴(35 − 84t + 70t² − 20t³)`, clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
}

/// Two inverse-stereographic caps on the unit sphere `S^{n−1} ⊂ R^n`,
/// centred on `±e_n` and reaching the polar angle [`CAP_ANGLE`], with a
/// partition of unity blended across the band `|θ − π/2| < band`.
#[derive(Clone, Debug)]
pub struct SphereChartAtlas {
    n: usize,
    band: f64,
    scale: f64,
    flip: [bool; 2],
}

impl SphereChartAtlas {
    pub fn new(n: usize, band: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadParams(format!("sphere atlas needs n >= 2, got {n}")));
        }
        if !(band > 0.0 && band < FRAC_PI_6) {
            return Err(Error::BadParams(format!("band half-width must lie in (0, π/6), got {band}")));
        }
        let mut atlas = Self {
            n,
            band,
            scale: (CAP_ANGLE / 2.0).tan(),
            flip: [false; 2],
        };
        let origin = vec![0.0; n - 1];
        for chart in 0..2 {
            let x = atlas.point(chart, &origin);
            let t = atlas.tangent(chart, &origin);
            let oriented = Matrix::from_fn(n, n, |r, c| if c == 0 { x[r] } else { t[(r, c - 1)] });
            atlas.flip[chart] = oriented.det() < 0.0;
        }
        Ok(atlas)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn band(&self) -> f64 {
        self.band
    }

    fn pole_sign(chart: usize) -> f64 {
        if chart == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn stereo(&self, chart: usize, xi: &[f64]) -> Vec<f64> {
        let mut p: Vec<f64> = xi.iter().map(|v| self.scale * v).collect();
        if self.flip[chart] {
            p[0] = -p[0];
        }
        p
    }

    /// `ψ_chart(ξ)` on the unit sphere.
    pub fn point(&self, chart: usize, xi: &[f64]) -> Vec<f64> {
        let p = self.stereo(chart, xi);
        let s: f64 = p.iter().map(|v| v * v).sum();
        let mut x: Vec<f64> = p.iter().map(|v| 2.0 * v / (1.0 + s)).collect();
        x.push(Self::pole_sign(chart) * (1.0 - s) / (1.0 + s));
        x
    }

    /// `n × (n−1)` Jacobian of `ψ_chart` at `ξ`.
    pub fn tangent(&self, chart: usize, xi: &[f64]) -> Matrix<f64> {
        let d = self.n - 1;
        let p = self.stereo(chart, xi);
        let s: f64 = p.iter().map(|v| v * v).sum();
        let den = 1.0 + s;
        let sign = Self::pole_sign(chart);
        Matrix::from_fn(self.n, d, |a, b| {
            let dp = if a < d {
                let delta = if a == b { 2.0 / den } else { 0.0 };
                delta - 4.0 * p[a] * p[b] / (den * den)
            } else {
                -sign * 4.0 * p[b] / (den * den)
            };
            let flip = if self.flip[chart] && b == 0 { -1.0 } else { 1.0 };
            dp * self.scale * flip
        })
    }

    /// Partition-of-unity weight `Υ_chart` at a point of the unit sphere.
    pub fn weight(&self, chart: usize, x: &[f64]) -> f64 {
        let theta = x[self.n - 1].clamp(-1.0, 1.0).acos();
        let north = smoothstep((FRAC_PI_2 + self.band - theta) / (2.0 * self.band));
        if chart == 0 {
            north
        } else {
            1.0 - north
        }
    }

    /// Parameter radii at the edges of the blending band, where the
    /// integrand loses smoothness.
    pub fn radial_breaks(&self) -> [f64; 2] {
        let r = |theta: f64| (theta / 2.0).tan() / self.scale;
        [r(FRAC_PI_2 - self.band), r(FRAC_PI_2 + self.band)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_land_on_the_sphere_and_are_oriented() {
        for n in 2..=4 {
            let atlas = SphereChartAtlas::new(n, 0.25).unwrap();
            let xi: Vec<f64> = (0..n - 1).map(|i| 0.3 - 0.2 * i as f64).collect();
            for chart in 0..2 {
                let x = atlas.point(chart, &xi);
                assert!((x.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
                let t = atlas.tangent(chart, &xi);
                let oriented = Matrix::from_fn(n, n, |r, c| if c == 0 { x[r] } else { t[(r, c - 1)] });
                assert!(oriented.det() > 0.0, "n={n} chart={chart}");
                // Finite-difference check of the tangent map.
                let h = 1e-6;
                for b in 0..n - 1 {
                    let mut hi = xi.clone();
                    let mut lo = xi.clone();
                    hi[b] += h;
                    lo[b] -= h;
                    let (xh, xl) = (atlas.point(chart, &hi), atlas.point(chart, &lo));
                    for a in 0..n {
                        assert!(((xh[a] - xl[a]) / (2.0 * h) - t[(a, b)]).abs() < 1e-8);
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let atlas = SphereChartAtlas::new(3, 0.35).unwrap();
        let [ra, rb] = atlas.radial_breaks();
        assert!(0.0 < ra && ra < rb && rb < 1.0);
        for chart in 0..2 {
            for r in [0.0, 0.5 * ra, ra, 0.5 * (ra + rb), rb, 0.5 * (rb + 1.0), 0.999] {
                let x = atlas.point(chart, &[r, 0.0]);
                let sum = atlas.weight(0, &x) + atlas.weight(1, &x);
                assert!((sum - 1.0).abs() < 1e-15);
                if r >= rb {
                    assert!(atlas.weight(chart, &x) < 1e-12);
                }
                if r <= ra {
                    assert!((atlas.weight(chart, &x) - 1.0).abs() < 1e-12);
                }
            }
        }
        assert!(SphereChartAtlas::new(3, 0.6).is_err());
    }
}
