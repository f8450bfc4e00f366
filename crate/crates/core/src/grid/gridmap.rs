use crate::error::{Error, Result};
use crate::grid::generator::{AnalyticMap, Generator};
use crate::grid::mapping::Mapping;
use crate::linalg::Matrix;

/// A mapping sampled on a regular grid over an axis-aligned box.
///
/// Values are stored point-major with the last axis varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridMap {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
    m: usize,
    values: Vec<f64>,
    generator: Option<Generator>,
}

impl GridMap {
    /// Wraps raw samples, checking shape and finiteness.
    pub fn from_values(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>, m: usize, values: Vec<f64>) -> Result<Self> {
        let n = resolution.len();
        if n == 0 || lower.len() != n || upper.len() != n {
            return Err(Error::BadParams(
                "domain and resolution must have the same nonzero length".into(),
            ));
        }
        if let Some(r) = resolution.iter().find(|&&r| r < 3) {
            return Err(Error::BadParams(format!("resolution must be at least 3 per axis, got {r}")));
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b))
        {
            return Err(Error::BadParams("domain box must have finite lower < upper".into()));
        }
        let count: usize = resolution.iter().product();
        if m == 0 || values.len() != count * m {
            return Err(Error::DimensionMismatch {
                expected: count * m,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams("grid values must be finite".into()));
        }
        Ok(Self {
            lower,
            upper,
            resolution,
            m,
            values,
            generator: None,
        })
    }

    /// Samples any mapping on the grid with `resolution[i]` points along axis `i`.
    pub fn sample(map: &impl Mapping, lower: &[f64], upper: &[f64], resolution: &[usize]) -> Result<Self> {
        if lower.len() != map.source_dim() {
            return Err(Error::DimensionMismatch {
                expected: map.source_dim(),
                got: lower.len(),
            });
        }
        let m = map.target_dim();
        let mut shell = Self::from_values(
            lower.to_vec(),
            upper.to_vec(),
            resolution.to_vec(),
            m,
            vec![0.0; resolution.iter().product::<usize>() * m],
        )?;
        let rows = crate::parallel::map_range(shell.len(), |p| map.eval(&shell.point(p)));
        for (p, row) in rows.into_iter().enumerate() {
            shell.values[p * m..(p + 1) * m].copy_from_slice(&row);
        }
        if shell.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams("mapping produced non-finite values".into()));
        }
        Ok(shell)
    }

    /// Samples an analytic generator and keeps its descriptor.
    pub fn from_generator(gen: &Generator, lower: &[f64], upper: &[f64], resolution: &[usize]) -> Result<Self> {
        let map = gen.build()?;
        let mut gm = Self::sample(&map, lower, upper, resolution)?;
        gm.generator = Some(gen.clone());
        Ok(gm)
    }

    /// Samples `gen` with grid step close to `h` along every axis.
    pub fn from_generator_with_step(gen: &Generator, lower: &[f64], upper: &[f64], h: f64) -> Result<Self> {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::NonpositiveScale(h));
        }
        let res: Vec<usize> = lower
            .iter()
            .zip(upper)
            .map(|(a, b)| (((b - a) / h).round() as usize + 1).max(3))
            .collect();
        Self::from_generator(gen, lower, upper, &res)
    }

    pub fn generator(&self) -> Option<&Generator> {
        self.generator.as_ref()
    }

    /// Rebuilds the analytic map behind this grid, if there is one.
    pub fn analytic(&self) -> Option<Result<AnalyticMap>> {
        self.generator.as_ref().map(Generator::build)
    }

    pub fn n(&self) -> usize {
        self.resolution.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn step(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.resolution[axis] - 1) as f64
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n()];
        for a in (0..self.n()).rev() {
            idx[a] = flat % self.resolution[a];
            flat /= self.resolution[a];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.n() || idx.iter().zip(&self.resolution).any(|(i, r)| i >= r) {
            return Err(Error::Index(format!(
                "grid index {idx:?} outside resolution {:?}",
                self.resolution
            )));
        }
        Ok(idx.iter().zip(&self.resolution).fold(0, |acc, (i, r)| acc * r + i))
    }

    /// Coordinates of grid point `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.lower[a] + i as f64 * self.step(a))
            .collect()
    }

    pub fn value(&self, flat: usize) -> &[f64] {
        &self.values[flat * self.m..(flat + 1) * self.m]
    }

    /// Whether the point is at least `depth` nodes away from every face.
    pub fn is_interior_at(&self, flat: usize, depth: usize) -> bool {
        self.multi_index(flat)
            .iter()
            .zip(&self.resolution)
            .all(|(&i, &r)| i >= depth && i + depth < r)
    }

    pub fn is_interior(&self, flat: usize) -> bool {
        self.is_interior_at(flat, 1)
    }

    /// Finite-difference Jacobian at a grid index: central in the interior,
    /// one-sided on the boundary.
    pub fn differential(&self, idx: &[usize]) -> Result<Matrix<f64>> {
        let flat = self.flat_index(idx)?;
        Ok(self.differential_flat(flat))
    }

    pub fn differential_flat(&self, flat: usize) -> Matrix<f64> {
        let idx = self.multi_index(flat);
        let mut jac = Matrix::zeros(self.m, self.n());
        let mut stride = 1;
        let mut strides = vec![0; self.n()];
        for a in (0..self.n()).rev() {
            strides[a] = stride;
            stride *= self.resolution[a];
        }
        for a in 0..self.n() {
            let h = self.step(a);
            let (lo, hi, width) = if idx[a] == 0 {
                (flat, flat + strides[a], h)
            } else if idx[a] + 1 == self.resolution[a] {
                (flat - strides[a], flat, h)
            } else {
                (flat - strides[a], flat + strides[a], 2.0 * h)
            };
            let (vl, vh) = (self.value(lo), self.value(hi));
            for r in 0..self.m {
                jac[(r, a)] = (vh[r] - vl[r]) / width;
            }
        }
        jac
    }

    /// Cell containing `y` (clamped) and the local coordinates in `[0, 1]`.
    #[allow(clippy::needless_range_loop)]
    fn locate(&self, y: &[f64]) -> (Vec<usize>, Vec<f64>) {
        let mut base = Vec::with_capacity(self.n());
        let mut frac = Vec::with_capacity(self.n());
        for a in 0..self.n() {
            let t = ((y[a] - self.lower[a]) / self.step(a)).clamp(0.0, (self.resolution[a] - 1) as f64);
            let i = (t.floor() as usize).min(self.resolution[a] - 2);
            base.push(i);
            frac.push(t - i as f64);
        }
        (base, frac)
    }

    fn blend<T>(&self, y: &[f64], mut visit: impl FnMut(usize, f64) -> T) {
        let (base, frac) = self.locate(y);
        let n = self.n();
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = base.clone();
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                let flat = idx.iter().zip(&self.resolution).fold(0, |acc, (i, r)| acc * r + i);
                visit(flat, w);
            }
        }
    }

    /// Multilinear interpolation; points outside the box are clamped.
    pub fn interpolate(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        self.blend(y, |flat, w| {
            for (o, v) in out.iter_mut().zip(self.value(flat)) {
                *o += w * v;
            }
        });
        out
    }

    /// Section `u^{(z)}(y) = u(z + y)` along the kept axes `gamma` (sorted,
    /// nonempty, proper), with the remaining axes fixed at grid indices `z`.
    pub fn slice(&self, gamma: &[usize], z: &[usize]) -> Result<GridMap> {
        let n = self.n();
        if gamma.is_empty() || gamma.len() >= n {
            return Err(Error::InvalidSlice(format!(
                "kept axes {gamma:?} must be a nonempty proper subset of 0..{n}"
            )));
        }
        if gamma.windows(2).any(|w| w[0] >= w[1]) || gamma.iter().any(|&a| a >= n) {
            return Err(Error::InvalidSlice(format!(
                "kept axes {gamma:?} must be increasing and below {n}"
            )));
        }
        let rest: Vec<usize> = (0..n).filter(|a| !gamma.contains(a)).collect();
        if z.len() != rest.len() || z.iter().zip(&rest).any(|(&i, &a)| i >= self.resolution[a]) {
            return Err(Error::InvalidSlice(format!("fixed indices {z:?} do not fit axes {rest:?}")));
        }
        let res: Vec<usize> = gamma.iter().map(|&a| self.resolution[a]).collect();
        let count: usize = res.iter().product();
        let mut values = Vec::with_capacity(count * self.m);
        let mut full = vec![0; n];
        for (&a, &i) in rest.iter().zip(z) {
            full[a] = i;
        }
        for p in 0..count {
            let mut rem = p;
            for k in (0..gamma.len()).rev() {
                full[gamma[k]] = rem % res[k];
                rem /= res[k];
            }
            let flat = self.flat_index(&full)?;
            values.extend_from_slice(self.value(flat));
        }
        GridMap::from_values(
            gamma.iter().map(|&a| self.lower[a]).collect(),
            gamma.iter().map(|&a| self.upper[a]).collect(),
            res,
            self.m,
            values,
        )
    }
}

impl Mapping for GridMap {
    fn source_dim(&self) -> usize {
        self.n()
    }

    fn target_dim(&self) -> usize {
        self.m
    }

    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.interpolate(y));
    }

    /// Multilinear blend of the node differentials.
    fn jacobian(&self, y: &[f64]) -> Matrix<f64> {
        let mut jac = Matrix::zeros(self.m, self.n());
        self.blend(y, |flat, w| {
            let d = self.differential_flat(flat);
            for r in 0..self.m {
                for c in 0..self.n() {
                    jac[(r, c)] += w * d[(r, c)];
                }
            }
        });
        jac
    }

    fn domain(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        Some((self.lower.clone(), self.upper.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::generator::PolyTerm;

    fn xy_map() -> Generator {
        // (x, y) ↦ (x, y, xy)
        Generator::Polynomial {
            source: 2,
            target: 3,
            terms: vec![
                PolyTerm {
                    component: 0,
                    coeff: 1.0,
                    powers: vec![1, 0],
                },
                PolyTerm {
                    component: 1,
                    coeff: 1.0,
                    powers: vec![0, 1],
                },
                PolyTerm {
                    component: 2,
                    coeff: 1.0,
                    powers: vec![1, 1],
                },
            ],
        }
    }

    #[test]
    fn differential_examples() {
        let gm = GridMap::from_generator(&xy_map(), &[1.9, 2.9], &[2.1, 3.1], &[201, 201]).unwrap();
        let d = gm.differential(&[100, 100]).unwrap();
        let want = [[1.0, 0.0], [0.0, 1.0], [3.0, 2.0]];
        for r in 0..3 {
            for c in 0..2 {
                assert!((d[(r, c)] - want[r][c]).abs() < 1e-6, "{d:?}");
            }
        }
        let constant = Generator::Constant {
            source: 2,
            value: vec![1.0, -4.0],
        };
        let gm = GridMap::from_generator(&constant, &[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        assert_eq!(gm.differential(&[0, 3]).unwrap().max_abs(), 0.0);
        let linear = Generator::Linear {
            matrix: vec![vec![2.0, -1.0], vec![0.5, 4.0]],
            offset: vec![],
        };
        let gm = GridMap::from_generator(&linear, &[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap();
        for flat in 0..gm.len() {
            let d = gm.differential_flat(flat);
            assert!((d[(0, 0)] - 2.0).abs() < 1e-12 && (d[(1, 1)] - 4.0).abs() < 1e-12);
        }
        assert!(gm.differential(&[4, 0]).is_err());
    }

    #[test]
    fn shape_checks() {
        assert!(GridMap::from_values(vec![0.0], vec![1.0], vec![2], 1, vec![0.0; 2]).is_err());
        assert!(GridMap::from_values(vec![0.0], vec![1.0], vec![3], 1, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(GridMap::from_values(vec![0.0], vec![1.0], vec![3], 1, vec![0.0; 3]).is_ok());
    }

    #[test]
    fn slice_example() {
        // u(x, y, z) = x + y z
        let gen = Generator::Polynomial {
            source: 3,
            target: 1,
            terms: vec![
                PolyTerm {
                    component: 0,
                    coeff: 1.0,
                    powers: vec![1, 0, 0],
                },
                PolyTerm {
                    component: 0,
                    coeff: 1.0,
                    powers: vec![0, 1, 1],
                },
            ],
        };
        let gm = GridMap::from_generator(&gen, &[0.0, 0.0, 0.0], &[1.0, 1.0, 2.0], &[11, 11, 5]).unwrap();
        let sec = gm.slice(&[0, 1], &[4]).unwrap();
        assert_eq!(sec.n(), 2);
        for flat in 0..sec.len() {
            let p = sec.point(flat);
            assert!((sec.value(flat)[0] - (p[0] + 2.0 * p[1])).abs() < 1e-12);
            assert!((sec.differential_flat(flat)[(0, 1)] - 2.0).abs() < 1e-9);
        }
        let line = gm.slice(&[2], &[3, 7]).unwrap();
        assert_eq!(line.resolution(), &[5]);
        assert!(gm.slice(&[], &[1, 1, 1]).is_err());
        assert!(gm.slice(&[0, 1, 2], &[]).is_err());
        assert!(gm.slice(&[1, 0], &[0]).is_err());
        assert!(gm.slice(&[0, 1], &[5]).is_err());
    }

    #[test]
    fn interpolation_reproduces_affine_maps() {
        let linear = Generator::Linear {
            matrix: vec![vec![2.0, -1.0]],
            offset: vec![0.5],
        };
        let gm = GridMap::from_generator(&linear, &[0.0, 0.0], &[1.0, 1.0], &[5, 7]).unwrap();
        let v = gm.interpolate(&[0.33, 0.71]);
        assert!((v[0] - (0.66 - 0.71 + 0.5)).abs() < 1e-12);
        let j = gm.jacobian(&[0.33, 0.71]);
        assert!((j[(0, 0)] - 2.0).abs() < 1e-12 && (j[(0, 1)] + 1.0).abs() < 1e-12);
    }
}
