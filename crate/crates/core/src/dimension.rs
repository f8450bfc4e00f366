//! Box-counting dimension of point sets in a Carnot group, with respect to
//! the homogeneous structure or the Euclidean one.
//!
//! Homogeneous cells are left translates of a fundamental domain: a point is
//! dilated by `1/ε`, and layer by layer its integer part is read off and
//! removed by left multiplication. Coordinate boxes with sides `ε^{d_i}`
//! would only match homogeneous balls near the identity.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::Zero;
use serde::Serialize;

use crate::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};
use crate::grid::{rank_histogram, Generator, GridMap, Mapping};
use crate::group::bch_product_in;
use crate::parallel::{map_range, map_range_with};
use crate::poly::{CompiledPoly, Poly};

/// Points handled per work unit.
const CHUNK: usize = 1 << 12;
/// Upper limit on the dense occupancy bitset, in bits.
const MAX_BITS: u128 = 1 << 31;
/// A fixed cloud is saturated at a scale when it occupies more cells than
/// this fraction of its points.
pub const SATURATION_FRACTION: f64 = 0.5;
/// Fraction of full-rank interior cells required before a dimension bound
/// is tested.
pub const FULL_RANK_FRACTION: f64 = 0.99;
/// Samples per cell side along each parameter axis.
pub const DEFAULT_DENSITY: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    Homogeneous,
    Euclidean,
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricMode::Homogeneous => "homogeneous",
            MetricMode::Euclidean => "euclidean",
        })
    }
}

impl std::str::FromStr for MetricMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "homogeneous" => Ok(MetricMode::Homogeneous),
            "euclidean" => Ok(MetricMode::Euclidean),
            _ => Err(Error::Parse(format!("unknown metric {s:?}"))),
        }
    }
}

/// A set of points in `R^q`, produced in chunks. Adaptive sources choose
/// their density from the cell sides at each scale.
pub trait PointSource: Sync {
    fn dim(&self) -> usize;
    /// Whether the density follows `sides`; fixed clouds can saturate.
    fn adaptive(&self) -> bool;
    fn provenance(&self) -> String;
    /// Number of points emitted for cells with these coordinate extents.
    fn len(&self, sides: &[f64]) -> u64;
    /// Appends the coordinates of points `start..start + count` to `out`.
    fn fill(&self, sides: &[f64], start: u64, count: usize, out: &mut Vec<f64>);
    /// A few hundred to a few thousand representative points.
    fn probe(&self) -> Vec<f64>;
}

/// An explicit list of points.
#[derive(Clone, Debug)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
    provenance: String,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::BadParams("point cloud must be nonempty with whole points".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::BadParams("point cloud coordinates must be finite".into()));
        }
        Ok(Self {
            dim,
            coords,
            provenance: provenance.into(),
        })
    }

    pub fn from_points(points: &[Vec<f64>], provenance: impl Into<String>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::BadParams("points have different dimensions".into()));
        }
        Self::new(dim, points.concat(), provenance)
    }

    /// Images of all grid points of a sampled mapping.
    pub fn from_grid(gm: &GridMap) -> Self {
        Self {
            dim: gm.m(),
            coords: gm.values().to_vec(),
            provenance: format!("grid map {:?} on {:?}..{:?}", gm.resolution(), gm.lower(), gm.upper()),
        }
    }

    pub fn num_points(&self) -> usize {
        self.coords.len() / self.dim
    }
}

impl PointSource for PointCloud {
    fn dim(&self) -> usize {
        self.dim
    }
    fn adaptive(&self) -> bool {
        false
    }
    fn provenance(&self) -> String {
        self.provenance.clone()
    }
    fn len(&self, _: &[f64]) -> u64 {
        self.num_points() as u64
    }
    fn fill(&self, _: &[f64], start: u64, count: usize, out: &mut Vec<f64>) {
        let s = start as usize * self.dim;
        out.extend_from_slice(&self.coords[s..s + count * self.dim]);
    }
    fn probe(&self) -> Vec<f64> {
        let step = (self.num_points() / 4096).max(1);
        (0..self.num_points())
            .step_by(step)
            .flat_map(|p| self.coords[p * self.dim..(p + 1) * self.dim].iter().copied())
            .collect()
    }
}

/// The image of the half-open box `[lower, upper)` sampled on a parameter
/// grid fine enough that neighbouring samples differ by at most one cell
/// side in every coordinate, judged by a Lipschitz estimate of `f`.
pub struct SampledImage<M> {
    map: M,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// `lipschitz[i * n + a]` bounds `|∂f_i/∂y_a|`.
    lipschitz: Vec<f64>,
    density: f64,
}

/// Probe points per axis for the Lipschitz estimate.
const LIPSCHITZ_PROBES: usize = 33;

impl<M: Mapping> SampledImage<M> {
    pub fn new(map: M, lower: &[f64], upper: &[f64]) -> Result<Self> {
        Self::with_density(map, lower, upper, DEFAULT_DENSITY)
    }

    /// `density` multiplies the number of samples along every axis.
    pub fn with_density(map: M, lower: &[f64], upper: &[f64], density: f64) -> Result<Self> {
        let n = map.source_dim();
        if lower.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: lower.len(),
            });
        }
        if lower.iter().zip(upper).any(|(a, b)| a.is_nan() || b.is_nan() || a > b) || density.is_nan() || density <= 0.0 {
            return Err(Error::BadParams(
                "sampled image needs lower <= upper and positive density".into(),
            ));
        }
        let m = map.target_dim();
        let per_axis = if n <= 2 { LIPSCHITZ_PROBES } else { 9 };
        let total = per_axis.pow(n as u32);
        let jacobians = map_range(total, |p| {
            let mut rem = p;
            let y: Vec<f64> = (0..n)
                .rev()
                .map(|a| {
                    let i = rem % per_axis;
                    rem /= per_axis;
                    (a, lower[a] + (upper[a] - lower[a]) * i as f64 / (per_axis - 1) as f64)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .rev()
                .map(|(_, v)| v)
                .collect();
            map.jacobian(&y)
        });
        let mut lipschitz = vec![0.0_f64; m * n];
        for jac in &jacobians {
            for i in 0..m {
                for a in 0..n {
                    lipschitz[i * n + a] = lipschitz[i * n + a].max(jac[(i, a)].abs());
                }
            }
        }
        Ok(Self {
            map,
            lower: lower.to_vec(),
            upper: upper.to_vec(),
            lipschitz,
            density,
        })
    }

    /// Samples per parameter axis for the given cell sides.
    pub fn samples_per_axis(&self, sides: &[f64]) -> Vec<usize> {
        let n = self.map.source_dim();
        (0..n)
            .map(|a| {
                let len = self.upper[a] - self.lower[a];
                let need = (0..self.map.target_dim())
                    .map(|i| len * self.lipschitz[i * n + a] / sides[i])
                    .fold(0.0, f64::max);
                ((need * self.density).ceil() as usize).max(1)
            })
            .collect()
    }
}

impl<M: Mapping> PointSource for SampledImage<M> {
    fn dim(&self) -> usize {
        self.map.target_dim()
    }
    fn adaptive(&self) -> bool {
        true
    }
    fn provenance(&self) -> String {
        format!("image of {:?}..{:?}", self.lower, self.upper)
    }
    fn len(&self, sides: &[f64]) -> u64 {
        self.samples_per_axis(sides).iter().map(|&k| k as u64).product()
    }
    fn fill(&self, sides: &[f64], start: u64, count: usize, out: &mut Vec<f64>) {
        let res = self.samples_per_axis(sides);
        let n = res.len();
        let m = self.map.target_dim();
        let steps: Vec<f64> = (0..n).map(|a| (self.upper[a] - self.lower[a]) / res[a] as f64).collect();
        let mut idx = vec![0usize; n];
        let mut rem = start;
        for a in (0..n).rev() {
            idx[a] = (rem % res[a] as u64) as usize;
            rem /= res[a] as u64;
        }
        let mut y: Vec<f64> = (0..n).map(|a| self.lower[a] + steps[a] * idx[a] as f64).collect();
        let mut buf = vec![0.0; m];
        for _ in 0..count {
            self.map.eval_into(&y, &mut buf);
            out.extend_from_slice(&buf);
            for a in (0..n).rev() {
                idx[a] += 1;
                if idx[a] < res[a] {
                    y[a] = self.lower[a] + steps[a] * idx[a] as f64;
                    break;
                }
                idx[a] = 0;
                y[a] = self.lower[a];
            }
        }
    }

    fn probe(&self) -> Vec<f64> {
        let n = self.map.source_dim();
        let per_axis: usize = if n <= 2 { 65 } else { 17 };
        let mut out = Vec::new();
        for p in 0..per_axis.pow(n as u32) {
            let mut rem = p;
            let mut y = vec![0.0; n];
            for a in (0..n).rev() {
                let i = rem % per_axis;
                rem /= per_axis;
                y[a] = self.lower[a] + (self.upper[a] - self.lower[a]) * i as f64 / (per_axis - 1) as f64;
            }
            out.extend(self.map.eval(&y));
        }
        out
    }
}

/// Maps points to integer cell keys at one scale.
struct Cells {
    q: usize,
    inv_scale: Vec<f64>,
    layers: Vec<std::ops::Range<usize>>,
    /// For each layer `j` but the last: the coordinates above layer `j` of
    /// `(−k) · y`, as polynomials in `(y, k)` with `k` supported on layer `j`.
    shifts: Vec<Vec<(usize, CompiledPoly)>>,
}

impl Cells {
    fn new(alg: &StratifiedAlgebra, mode: MetricMode, eps: f64) -> Self {
        let q = alg.dim();
        let inv_scale = (0..q)
            .map(|i| match mode {
                MetricMode::Homogeneous => eps.powi(-(alg.degree(i) as i32)),
                MetricMode::Euclidean => 1.0 / eps,
            })
            .collect();
        let layers: Vec<_> = (1..=alg.step()).map(|j| alg.layer(j)).collect();
        let shifts = match mode {
            MetricMode::Euclidean => Vec::new(),
            MetricMode::Homogeneous => layers[..layers.len() - 1]
                .iter()
                .map(|layer| {
                    let x: Vec<Poly> = (0..q)
                        .map(|i| if layer.contains(&i) { -Poly::var(q + i) } else { Poly::zero() })
                        .collect();
                    let y: Vec<Poly> = (0..q).map(Poly::var).collect();
                    let prod = bch_product_in(alg, &x, &y);
                    (layer.end..q).map(|i| (i, prod[i].compile())).collect()
                })
                .collect(),
        };
        Self {
            q,
            inv_scale,
            layers,
            shifts,
        }
    }

    /// Extent of a cell along each coordinate, before shearing.
    fn sides(&self) -> Vec<f64> {
        self.inv_scale.iter().map(|s| 1.0 / s).collect()
    }

    /// Cell keys of the points in `pts` (row-major, `q` per point), written
    /// column-wise into `batch.keys`.
    fn keys(&self, pts: &[f64], batch: &mut Batch) {
        let q = self.q;
        let n = pts.len() / q;
        batch.resize(n);
        let Batch {
            cols,
            lattice,
            keys,
            shifted,
            term,
        } = batch;
        for (p, x) in pts.chunks_exact(q).enumerate() {
            for i in 0..q {
                cols[i][p] = x[i] * self.inv_scale[i];
            }
        }
        if self.shifts.is_empty() {
            for (key, col) in keys.iter_mut().zip(cols.iter()) {
                for (k, &v) in key.iter_mut().zip(col) {
                    *k = floor(v);
                }
            }
            return;
        }
        for (j, layer) in self.layers.iter().enumerate() {
            for i in layer.clone() {
                for ((k, l), &v) in keys[i].iter_mut().zip(lattice[i].iter_mut()).zip(&cols[i]) {
                    *k = floor(v);
                    *l = *k as f64;
                }
            }
            let Some(shift) = self.shifts.get(j) else { break };
            {
                let vars: Vec<&[f64]> = cols.iter().chain(lattice.iter()).map(Vec::as_slice).collect();
                for ((_, p), out) in shift.iter().zip(shifted.iter_mut()) {
                    p.eval_columns(&vars, out, term);
                }
            }
            for ((i, _), out) in shift.iter().zip(shifted.iter_mut()) {
                std::mem::swap(&mut cols[*i], out);
            }
            for i in layer.clone() {
                for (c, l) in cols[i].iter_mut().zip(&lattice[i]) {
                    *c -= l;
                }
            }
        }
    }
}

/// `⌊v⌋` without the libm call.
#[inline]
fn floor(v: f64) -> i64 {
    let t = v as i64;
    t - ((t as f64) > v) as i64
}

/// Column-wise scratch for [`Cells::keys`].
struct Batch {
    cols: Vec<Vec<f64>>,
    lattice: Vec<Vec<f64>>,
    keys: Vec<Vec<i64>>,
    shifted: Vec<Vec<f64>>,
    term: Vec<f64>,
}

impl Batch {
    fn new(q: usize) -> Self {
        Self {
            cols: vec![Vec::new(); q],
            lattice: vec![Vec::new(); q],
            keys: vec![Vec::new(); q],
            shifted: vec![Vec::new(); q],
            term: Vec::new(),
        }
    }

    fn resize(&mut self, n: usize) {
        for v in self.cols.iter_mut().chain(&mut self.lattice).chain(&mut self.shifted) {
            v.resize(n, 0.0);
        }
        for v in &mut self.keys {
            v.resize(n, 0);
        }
        self.term.resize(n, 0.0);
    }

    fn len(&self) -> usize {
        self.term.len()
    }

    fn key(&self, p: usize) -> Vec<i64> {
        self.keys.iter().map(|k| k[p]).collect()
    }
}

/// Occupancy set: a dense bitset over a key box estimated from a probe,
/// with a hash set for keys outside it.
struct Occupancy {
    lo: Vec<i64>,
    span: Vec<u64>,
    bits: Vec<AtomicU64>,
}

impl Occupancy {
    fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        let span: Vec<u64> = lo.iter().zip(&hi).map(|(l, h)| (h - l + 1).max(1) as u64).collect();
        let total: u128 = span.iter().map(|&s| s as u128).product();
        let words = if total <= MAX_BITS { total.div_ceil(64) as usize } else { 0 };
        Self {
            lo,
            span: if words == 0 { Vec::new() } else { span },
            bits: (0..words).map(|_| AtomicU64::new(0)).collect(),
        }
    }

    fn index(&self, batch: &Batch, p: usize) -> Option<u64> {
        if self.bits.is_empty() {
            return None;
        }
        let mut idx = 0u64;
        for ((k, l), s) in batch.keys.iter().zip(&self.lo).zip(&self.span) {
            let off = k[p] - l;
            if off < 0 || off as u64 >= *s {
                return None;
            }
            idx = idx * s + off as u64;
        }
        Some(idx)
    }

    /// Marks the cell of point `p`; `false` if it lies outside the bitset.
    fn insert(&self, batch: &Batch, p: usize) -> bool {
        match self.index(batch, p) {
            Some(i) => {
                let (word, bit) = (&self.bits[(i / 64) as usize], 1 << (i % 64));
                // Most samples land in an occupied cell; skip the write then.
                if word.load(Ordering::Relaxed) & bit == 0 {
                    word.fetch_or(bit, Ordering::Relaxed);
                }
                true
            }
            None => false,
        }
    }

    fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.load(Ordering::Relaxed).count_ones() as u64).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaleCount {
    pub eps: f64,
    pub count: u64,
    pub samples: u64,
    pub saturated: bool,
}

/// Number of occupied cells at scale `eps`, with the number of points used.
pub fn count_cells(source: &dyn PointSource, alg: &StratifiedAlgebra, mode: MetricMode, eps: f64) -> Result<ScaleCount> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::NonpositiveScale(eps));
    }
    let q = alg.dim();
    if source.dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: source.dim(),
        });
    }
    let cells = Cells::new(alg, mode, eps);
    let sides = cells.sides();
    let total = source.len(&sides);

    let probe = source.probe();
    let mut lo = vec![i64::MAX; q];
    let mut hi = vec![i64::MIN; q];
    let mut batch = Batch::new(q);
    cells.keys(&probe, &mut batch);
    for i in 0..q {
        for &k in &batch.keys[i] {
            lo[i] = lo[i].min(k);
            hi[i] = hi[i].max(k);
        }
    }
    for i in 0..q {
        let pad = 2 + (hi[i] - lo[i]) / 8;
        lo[i] -= pad;
        hi[i] += pad;
    }
    let occupancy = Occupancy::new(lo, hi);

    let chunks = total.div_ceil(CHUNK as u64) as usize;
    let overflow = map_range_with(
        chunks,
        || (Vec::with_capacity(CHUNK * q), Batch::new(q)),
        |(pts, batch), c| {
            let start = c as u64 * CHUNK as u64;
            let count = (total - start).min(CHUNK as u64) as usize;
            pts.clear();
            source.fill(&sides, start, count, pts);
            cells.keys(pts, batch);
            (0..batch.len())
                .filter(|&p| !occupancy.insert(batch, p))
                .map(|p| batch.key(p))
                .collect::<Vec<_>>()
        },
    );
    let extra: HashSet<Vec<i64>> = overflow.into_iter().flatten().collect();
    let count = occupancy.count() + extra.len() as u64;
    let saturated = !source.adaptive() && count as f64 > SATURATION_FRACTION * total as f64;
    Ok(ScaleCount {
        eps,
        count,
        samples: total,
        saturated,
    })
}

/// Occupied anisotropic cells of a fixed cloud at one scale.
pub fn anisotropic_box_count(cloud: &PointCloud, alg: &StratifiedAlgebra, eps: f64) -> Result<u64> {
    Ok(count_cells(cloud, alg, MetricMode::Homogeneous, eps)?.count)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS deviation of `log N` from the fitted line.
    pub residual: f64,
}

/// Least-squares slope of `log N` against `log(1/ε)`.
pub fn dimension_fit(counts: &[(f64, u64)]) -> Result<Fit> {
    if counts.len() < 3 {
        return Err(Error::TooFewScales(counts.len()));
    }
    let pts: Vec<(f64, f64)> = counts.iter().map(|&(e, n)| ((1.0 / e).ln(), (n as f64).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::BadParams("scales must be distinct".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / k).sqrt();
    Ok(Fit {
        slope,
        intercept,
        residual,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxCountResult {
    pub mode: MetricMode,
    pub table: Vec<ScaleCount>,
    /// Fit over the unsaturated scales, if there are at least three.
    pub fit: Option<Fit>,
}

impl BoxCountResult {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Whether `N(ε)` never increases with `ε`.
    pub fn is_monotone(&self) -> bool {
        let mut rows: Vec<&ScaleCount> = self.table.iter().collect();
        rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
        rows.windows(2).all(|w| w[0].count >= w[1].count)
    }
}

/// Counts for a fixed cloud on nested partitions: the cell of a point at a
/// scale is its lattice cell there together with its cells at every coarser
/// scale in `scales`. Left-translated lattices at dyadic scales do not nest
/// in the homogeneous mode, and this keeps `N(ε)` nonincreasing in `ε`.
fn nested_counts(source: &dyn PointSource, alg: &StratifiedAlgebra, mode: MetricMode, scales: &[f64]) -> Result<Vec<ScaleCount>> {
    let q = alg.dim();
    if source.dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: source.dim(),
        });
    }
    if let Some(&e) = scales.iter().find(|e| e.is_nan() || **e <= 0.0 || e.is_infinite()) {
        return Err(Error::NonpositiveScale(e));
    }
    let mut order: Vec<usize> = (0..scales.len()).collect();
    order.sort_by(|&a, &b| scales[b].total_cmp(&scales[a]));
    let Some(&coarsest) = order.first() else {
        return Ok(Vec::new());
    };
    let first = Cells::new(alg, mode, scales[coarsest]);
    let total = source.len(&first.sides());
    let mut pts = Vec::with_capacity(total as usize * q);
    source.fill(&first.sides(), 0, total as usize, &mut pts);

    let mut ids = vec![0u64; total as usize];
    let mut batch = Batch::new(q);
    let mut table = vec![None; scales.len()];
    for &s in &order {
        let cells = Cells::new(alg, mode, scales[s]);
        let mut intern: HashMap<(u64, Vec<i64>), u64> = HashMap::new();
        for (c, chunk) in pts.chunks(CHUNK * q).enumerate() {
            cells.keys(chunk, &mut batch);
            for p in 0..batch.len() {
                let id = &mut ids[c * CHUNK + p];
                let next = intern.len() as u64;
                *id = *intern.entry((*id, batch.key(p))).or_insert(next);
            }
        }
        let count = intern.len() as u64;
        table[s] = Some(ScaleCount {
            eps: scales[s],
            count,
            samples: total,
            saturated: count as f64 > SATURATION_FRACTION * total as f64,
        });
    }
    Ok(table.into_iter().flatten().collect())
}

/// Box counts at every scale plus the fitted slope. Fixed clouds are counted
/// on nested partitions, see [`nested_counts`].
pub fn box_count(source: &dyn PointSource, alg: &StratifiedAlgebra, mode: MetricMode, scales: &[f64]) -> Result<BoxCountResult> {
    let table = if source.adaptive() {
        scales
            .iter()
            .map(|&e| count_cells(source, alg, mode, e))
            .collect::<Result<Vec<_>>>()?
    } else {
        nested_counts(source, alg, mode, scales)?
    };
    let usable: Vec<(f64, u64)> = table.iter().filter(|r| !r.saturated).map(|r| (r.eps, r.count)).collect();
    let fit = match dimension_fit(&usable) {
        Ok(f) => Some(f),
        Err(Error::TooFewScales(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BoxCountResult { mode, table, fit })
}

/// `2^{-a}, …, 2^{-b}`.
pub fn dyadic_scales(a: u32, b: u32) -> Vec<f64> {
    (a..=b).map(|k| 0.5_f64.powi(k as i32)).collect()
}

/// Writes rows `eps,N_homogeneous,N_euclidean`.
pub fn write_counts_csv(homogeneous: &BoxCountResult, euclidean: &BoxCountResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eps", "N_homogeneous", "N_euclidean"])
        .map_err(|e| Error::Parse(e.to_string()))?;
    for (h, e) in homogeneous.table.iter().zip(&euclidean.table) {
        w.write_record([h.eps.to_string(), h.count.to_string(), e.count.to_string()])
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inapplicable => "INAPPLICABLE",
        })
    }
}

pub const CAVEAT: &str = "a box-counting slope supports but does not certify positive (Q-1)-dimensional Hausdorff measure";

#[derive(Clone, Debug, Serialize)]
pub struct GromovReport {
    pub group: String,
    pub homogeneous_dim: usize,
    pub target: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub reason: String,
    pub full_rank_fraction: f64,
    pub rank_histogram: Vec<usize>,
    pub density: f64,
    pub homogeneous: BoxCountResult,
    pub euclidean: BoxCountResult,
    pub caveat: String,
}

#[derive(Serialize)]
struct ReportFragment<'a> {
    group: &'a str,
    verdict: Verdict,
    reason: &'a str,
    target: f64,
    tol: f64,
    slope_homogeneous: f64,
    residual_homogeneous: f64,
    slope_euclidean: f64,
    residual_euclidean: f64,
    full_rank_fraction: f64,
    rank_histogram: Vec<u64>,
    sampling_density: f64,
    caveat: &'a str,
}

impl GromovReport {
    /// TOML fragment with slopes, residuals and the verdict.
    pub fn to_toml(&self) -> String {
        let slope = |r: &BoxCountResult| r.fit.map_or(f64::NAN, |f| f.slope);
        let resid = |r: &BoxCountResult| r.fit.map_or(f64::NAN, |f| f.residual);
        let frag = ReportFragment {
            group: &self.group,
            verdict: self.verdict,
            reason: &self.reason,
            target: self.target,
            tol: self.tol,
            slope_homogeneous: slope(&self.homogeneous),
            residual_homogeneous: resid(&self.homogeneous),
            slope_euclidean: slope(&self.euclidean),
            residual_euclidean: resid(&self.euclidean),
            full_rank_fraction: self.full_rank_fraction,
            rank_histogram: self.rank_histogram.iter().map(|&c| c as u64).collect(),
            sampling_density: self.density,
            caveat: &self.caveat,
        };
        toml::to_string(&frag).expect("report serializes")
    }
}

/// Tests `dim Σ ≥ Q − 1` for `Σ = f(Ω)` by box counting, after checking that
/// the differential has full rank `q − 1` on almost all interior cells.
/// Counting samples the analytic generator behind `gm` when it has one.
pub fn gromov_experiment(gm: &GridMap, alg: &StratifiedAlgebra, scales: &[f64], tol: f64) -> Result<GromovReport> {
    gromov_experiment_with_density(gm, alg, scales, tol, DEFAULT_DENSITY)
}

/// [`gromov_experiment`] with the sampling density of [`SampledImage::with_density`].
pub fn gromov_experiment_with_density(
    gm: &GridMap,
    alg: &StratifiedAlgebra,
    scales: &[f64],
    tol: f64,
    density: f64,
) -> Result<GromovReport> {
    let q = alg.dim();
    if gm.m() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: gm.m(),
        });
    }
    let hist = rank_histogram(gm);
    let interior: usize = hist.iter().sum();
    let full = hist.get(q - 1).copied().unwrap_or(0);
    let full_rank_fraction = if interior == 0 { 0.0 } else { full as f64 / interior as f64 };

    let (homogeneous, euclidean) = match gm.analytic() {
        Some(map) => {
            let src = SampledImage::with_density(map?, gm.lower(), gm.upper(), density)?;
            (
                box_count(&src, alg, MetricMode::Homogeneous, scales)?,
                box_count(&src, alg, MetricMode::Euclidean, scales)?,
            )
        }
        None => {
            let src = SampledImage::with_density(gm, gm.lower(), gm.upper(), density)?;
            (
                box_count(&src, alg, MetricMode::Homogeneous, scales)?,
                box_count(&src, alg, MetricMode::Euclidean, scales)?,
            )
        }
    };
    let target = alg.homogeneous_dim() as f64 - 1.0;
    let (verdict, reason) = if gm.n() + 1 != q {
        (
            Verdict::Inapplicable,
            format!("parameter dimension {} is not q - 1 = {}", gm.n(), q - 1),
        )
    } else if full_rank_fraction < FULL_RANK_FRACTION {
        (
            Verdict::Inapplicable,
            format!(
                "differential has rank {} on only {:.1}% of interior cells",
                q - 1,
                100.0 * full_rank_fraction
            ),
        )
    } else {
        match homogeneous.slope() {
            None => (Verdict::Fail, "fewer than three unsaturated scales".to_string()),
            Some(s) if s >= target - tol => (Verdict::Pass, format!("slope {s:.3} >= {target} - {tol}")),
            Some(s) => (Verdict::Fail, format!("slope {s:.3} < {target} - {tol}")),
        }
    };
    Ok(GromovReport {
        group: alg.name().to_string(),
        homogeneous_dim: alg.homogeneous_dim(),
        target,
        tol,
        verdict,
        reason,
        full_rank_fraction,
        rank_histogram: hist,
        density,
        homogeneous,
        euclidean,
        caveat: CAVEAT.to_string(),
    })
}

/// Ready-made experiments for the dimension command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// The unit cube `[0, 1]^q`.
    Cube,
    /// `{x_1 = 0}` over `[0, 1]^{q−1}`.
    VerticalPlane,
    /// `(u, v) ↦ (cos u, sin u, u/2)` on `[−π, π] × [0, 0.05]`, a horizontal
    /// curve parametrized by a rank-one map.
    LegendrianCylinder,
    /// A smooth graph `x_1 = h(x_2, …, x_q)` over `[0, 1]^{q−1}`.
    Graph,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Cube, Preset::VerticalPlane, Preset::LegendrianCylinder, Preset::Graph];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Cube => "cube",
            Preset::VerticalPlane => "vertical-plane",
            Preset::LegendrianCylinder => "legendrian-cylinder",
            Preset::Graph => "graph",
        }
    }

    /// Generator and parameter box for a group of dimension `q`.
    pub fn setup(self, q: usize) -> Result<(Generator, Vec<f64>, Vec<f64>)> {
        if q < 2 {
            return Err(Error::BadParams("presets need a group of dimension at least 2".into()));
        }
        Ok(match self {
            Preset::Cube => (Generator::Identity { dim: q }, vec![0.0; q], vec![1.0; q]),
            Preset::VerticalPlane => (Generator::VerticalPlane { target: q }, vec![0.0; q - 1], vec![1.0; q - 1]),
            Preset::Graph => (
                Generator::Graph {
                    target: q,
                    amplitude: 0.3,
                    frequency: 2.0,
                },
                vec![0.0; q - 1],
                vec![1.0; q - 1],
            ),
            Preset::LegendrianCylinder => {
                if q != 3 {
                    return Err(Error::BadParams(
                        "the Legendrian cylinder lives in a 3-dimensional group".into(),
                    ));
                }
                (
                    Generator::LegendrianLift { radius: 1.0, source: 2 },
                    vec![-std::f64::consts::PI, 0.0],
                    vec![std::f64::consts::PI, 0.05],
                )
            }
        })
    }

    /// Sampling density for the counts. The solid cube needs `ε^{-4}`
    /// samples per unit density cubed, so it stays at the default.
    pub fn density(self) -> f64 {
        match self {
            Preset::Cube => DEFAULT_DENSITY,
            _ => 4.0,
        }
    }

    /// The sampled map whose differential is checked for full rank.
    pub fn grid(self, q: usize) -> Result<GridMap> {
        let (gen, lower, upper) = self.setup(q)?;
        match self {
            Preset::LegendrianCylinder => GridMap::from_generator_with_step(&gen, &lower, &upper, 1e-3),
            _ => {
                let per_axis = if lower.len() <= 2 { 65 } else { 17 };
                GridMap::from_generator(&gen, &lower, &upper, &vec![per_axis; lower.len()])
            }
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown preset {s:?}")))
    }
}

/// Runs [`gromov_experiment`] on a preset at its own sampling density.
pub fn run_preset(preset: Preset, alg: &StratifiedAlgebra, scales: &[f64], tol: f64) -> Result<GromovReport> {
    let gm = preset.grid(alg.dim())?;
    gromov_experiment_with_density(&gm, alg, scales, tol, preset.density())
}
