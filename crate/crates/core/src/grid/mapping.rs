use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A mapping `R^n ⊇ Ω → R^m` with a differential.
pub trait Mapping: Sync {
    fn source_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn eval_into(&self, y: &[f64], out: &mut [f64]);
    /// `m × n` Jacobian at `y`.
    fn jacobian(&self, y: &[f64]) -> Matrix<f64>;

    /// Axis-aligned box the mapping is defined on, if it is not global.
    fn domain(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        None
    }

    fn eval(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.target_dim()];
        self.eval_into(y, &mut out);
        out
    }
}

impl<M: Mapping + ?Sized> Mapping for &M {
    fn source_dim(&self) -> usize {
        (**self).source_dim()
    }
    fn target_dim(&self) -> usize {
        (**self).target_dim()
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        (**self).eval_into(y, out)
    }
    fn jacobian(&self, y: &[f64]) -> Matrix<f64> {
        (**self).jacobian(y)
    }
    fn domain(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        (**self).domain()
    }
}

/// A closure with a central-difference Jacobian.
pub struct FnMap<F> {
    n: usize,
    m: usize,
    f: F,
}

const FN_MAP_STEP: f64 = 1e-5;

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnMap<F> {
    pub fn new(n: usize, m: usize, f: F) -> Self {
        Self { n, m, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> Mapping for FnMap<F> {
    fn source_dim(&self) -> usize {
        self.n
    }
    fn target_dim(&self) -> usize {
        self.m
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        (self.f)(y, out)
    }
    fn jacobian(&self, y: &[f64]) -> Matrix<f64> {
        let mut jac = Matrix::zeros(self.m, self.n);
        let mut p = y.to_vec();
        let (mut hi, mut lo) = (vec![0.0; self.m], vec![0.0; self.m]);
        for c in 0..self.n {
            p[c] = y[c] + FN_MAP_STEP;
            (self.f)(&p, &mut hi);
            p[c] = y[c] - FN_MAP_STEP;
            (self.f)(&p, &mut lo);
            p[c] = y[c];
            for r in 0..self.m {
                jac[(r, c)] = (hi[r] - lo[r]) / (2.0 * FN_MAP_STEP);
            }
        }
        jac
    }
}

/// Blow-up `Φ^{z,r}(y) = (Φ(z + r y) − Φ(z)) / r` on the unit ball.
pub struct Rescaled<M> {
    inner: M,
    z: Vec<f64>,
    r: f64,
    base: Vec<f64>,
}

/// Rescales `inner` around `z` by `r`; the ball `B(z, r)` must lie in the
/// domain of `inner`.
pub fn rescale<M: Mapping>(inner: M, z: &[f64], r: f64) -> Result<Rescaled<M>> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::NonpositiveScale(r));
    }
    if z.len() != inner.source_dim() {
        return Err(Error::DimensionMismatch {
            expected: inner.source_dim(),
            got: z.len(),
        });
    }
    if let Some((lo, hi)) = inner.domain() {
        if z.iter()
            .zip(lo.iter().zip(&hi))
            .any(|(z, (lo, hi))| z - r < *lo || z + r > *hi)
        {
            return Err(Error::BallExitsDomain);
        }
    }
    let base = inner.eval(z);
    Ok(Rescaled {
        inner,
        z: z.to_vec(),
        r,
        base,
    })
}

impl<M: Mapping> Rescaled<M> {
    fn point(&self, y: &[f64]) -> Vec<f64> {
        self.z.iter().zip(y).map(|(z, y)| z + self.r * y).collect()
    }
}

impl<M: Mapping> Mapping for Rescaled<M> {
    fn source_dim(&self) -> usize {
        self.inner.source_dim()
    }
    fn target_dim(&self) -> usize {
        self.inner.target_dim()
    }
    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        self.inner.eval_into(&self.point(y), out);
        for (o, b) in out.iter_mut().zip(&self.base) {
            *o = (*o - b) / self.r;
        }
    }
    fn jacobian(&self, y: &[f64]) -> Matrix<f64> {
        self.inner.jacobian(&self.point(y))
    }
    fn domain(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.source_dim();
        Some((vec![-1.0; n], vec![1.0; n]))
    }
}
