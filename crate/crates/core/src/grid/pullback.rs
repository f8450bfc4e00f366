use std::fmt::Write as _;

use crate::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};
use crate::exterior::{complement_wedge, eta_range, exterior_derivative, increasing_tuples, theta_form, Basis, KForm};
use crate::grid::gridmap::GridMap;
use crate::group::FrameField;
use crate::linalg::Matrix;
use crate::parallel::map_range;
use crate::scalar::{rat_to_f64, Rat};

/// Relative threshold for the numerical rank of finite-difference differentials.
pub const RANK_REL_TOL: f64 = 1e-8;

/// η-coordinates of the differential at a grid point: `coframe(f(y)) · Df(y)`,
/// whose column `i` holds `η_r(df(∂_i))`.
pub fn eta_differential(gm: &GridMap, frames: &FrameField, flat: usize) -> Matrix<f64> {
    frames
        .coframe_at_f64(gm.value(flat))
        .mul(&gm.differential_flat(flat))
        .expect("coframe and differential shapes agree")
}

/// A k-form on the parameter domain at every grid point, on the `du_I` basis.
#[derive(Clone, Debug)]
pub struct PullbackField {
    degree: usize,
    tuples: Vec<Vec<usize>>,
    coeffs: Vec<f64>,
}

impl PullbackField {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Index tuples `I ∈ I_{k,n}` in coefficient order.
    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn coeffs_at(&self, flat: usize) -> &[f64] {
        let w = self.tuples.len();
        &self.coeffs[flat * w..(flat + 1) * w]
    }

    pub fn form_at(&self, n: usize, flat: usize) -> KForm<f64> {
        KForm::from_terms(
            n,
            self.degree,
            Basis::Coordinate,
            self.tuples.iter().cloned().zip(self.coeffs_at(flat).iter().copied()),
        )
    }

    /// Euclidean norm of the coefficient vector at a point.
    pub fn norm_at(&self, flat: usize) -> f64 {
        self.coeffs_at(flat).iter().fold(0.0, |acc, c| acc + c * c).sqrt()
    }
}

fn check_target(gm: &GridMap, alg: &StratifiedAlgebra) -> Result<()> {
    if gm.m() != alg.dim() {
        return Err(Error::DimensionMismatch {
            expected: alg.dim(),
            got: gm.m(),
        });
    }
    Ok(())
}

/// Pulls back a constant-coefficient η-form through the sampled mapping.
pub fn pullback_form_field(gm: &GridMap, frames: &FrameField, form: &KForm<f64>) -> Result<PullbackField> {
    if form.basis() != Basis::LeftInvariant {
        return Err(Error::BasisMismatch);
    }
    if form.dim() != gm.m() || frames.dim() != gm.m() {
        return Err(Error::DimensionMismatch {
            expected: gm.m(),
            got: form.dim(),
        });
    }
    let n = gm.n();
    let k = form.degree();
    let tuples = increasing_tuples(k, n);
    let terms: Vec<(Vec<usize>, f64)> = form.terms().map(|(j, c)| (j.clone(), *c)).collect();
    let cells = map_range(gm.len(), |p| {
        if tuples.is_empty() {
            return Vec::new();
        }
        let a = eta_differential(gm, frames, p);
        tuples
            .iter()
            .map(|i| terms.iter().map(|(j, c)| c * a.select(j, i).det()).sum::<f64>())
            .collect::<Vec<f64>>()
    });
    Ok(PullbackField {
        degree: k,
        tuples,
        coeffs: cells.concat(),
    })
}

/// `f*(η_{j_1} ∧ … ∧ η_{j_k})` for 0-based indices `eta`.
pub fn pullback_field(gm: &GridMap, alg: &StratifiedAlgebra, eta: &[usize]) -> Result<PullbackField> {
    check_target(gm, alg)?;
    if let Some(&bad) = eta.iter().find(|&&i| i >= alg.dim()) {
        return Err(Error::Index(format!("η index {} out of range", bad + 1)));
    }
    let frames = FrameField::new(alg)?;
    let form = KForm::<f64>::wedge_of(alg.dim(), eta, Basis::LeftInvariant);
    pullback_form_field(gm, &frames, &form)
}

/// A nonnegative scalar per grid point with statistics over the points at
/// least `depth` nodes from the boundary.
#[derive(Clone, Debug)]
pub struct DefectField {
    pub label: String,
    values: Vec<f64>,
    included: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    tol: f64,
    max: f64,
    mean: f64,
    above: usize,
    count: usize,
    argmax: Option<(usize, Vec<f64>)>,
}

impl DefectField {
    pub fn new(label: impl Into<String>, gm: &GridMap, values: Vec<f64>, depth: usize, tol: f64) -> Self {
        assert_eq!(values.len(), gm.len());
        let included: Vec<bool> = (0..gm.len()).map(|p| gm.is_interior_at(p, depth)).collect();
        let (mut max, mut sum, mut above, mut count, mut arg) = (0.0_f64, 0.0, 0, 0, None);
        for (p, &v) in values.iter().enumerate() {
            if !included[p] {
                continue;
            }
            count += 1;
            sum += v;
            if v > tol {
                above += 1;
            }
            if arg.is_none() || v > max {
                max = v;
                arg = Some(p);
            }
        }
        Self {
            label: label.into(),
            argmax: arg.map(|p| (p, gm.point(p))),
            values,
            included,
            lower: gm.lower().to_vec(),
            upper: gm.upper().to_vec(),
            tol,
            max,
            mean: if count > 0 { sum / count as f64 } else { 0.0 },
            above,
            count,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_included(&self, flat: usize) -> bool {
        self.included[flat]
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Number of points in the statistics.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn count_above(&self) -> usize {
        self.above
    }

    pub fn fraction_above(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.above as f64 / self.count as f64
        }
    }

    /// Fraction above tolerance times the volume of the domain box.
    pub fn measure_above(&self) -> f64 {
        self.fraction_above() * self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product::<f64>()
    }

    pub fn argmax(&self) -> Option<&(usize, Vec<f64>)> {
        self.argmax.as_ref()
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: max {:.3e}, mean {:.3e}, {} of {} cells above {:.1e} ({:.1}%)",
            self.label,
            self.max,
            self.mean,
            self.above,
            self.count,
            self.tol,
            100.0 * self.fraction_above()
        );
        if let Some((_, p)) = &self.argmax {
            let coords: Vec<String> = p.iter().map(|x| format!("{x:.4}")).collect();
            let _ = write!(s, ", max at ({})", coords.join(", "));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefectMode {
    /// `(H_1)_{f(y)} ⊂ df_y(R^{q−1})`, for algebras with `m_1 < q − 1`.
    H1InImage,
    /// `df_y(R^{q−1}) ⊂ (H_1)_{f(y)}`, for algebras with `m_1 = q − 1`.
    ImageInH1,
}

fn frobenius_power(a: &Matrix<f64>, k: usize) -> f64 {
    a.frobenius().powi(k as i32)
}

/// Horizontality defect of a hypersurface `f: R^{q−1} → G`, normalized by
/// `|Df|_F^k` with `k` the degree of the tested forms.
pub fn horizontality_defect(gm: &GridMap, alg: &StratifiedAlgebra, mode: DefectMode, tol: f64) -> Result<DefectField> {
    check_target(gm, alg)?;
    let q = alg.dim();
    if gm.n() + 1 != q {
        return Err(Error::DimensionMismatch {
            expected: q - 1,
            got: gm.n(),
        });
    }
    let m1 = alg.offset(1);
    match mode {
        DefectMode::ImageInH1 if m1 != q - 1 => {
            return Err(Error::ModeMismatch(format!(
                "image_in_h1 needs m_1 = q - 1, here m_1 = {m1}, q = {q}"
            )))
        }
        DefectMode::H1InImage if m1 >= q - 1 => {
            return Err(Error::ModeMismatch(format!(
                "h1_in_image needs m_1 < q - 1, here m_1 = {m1}, q = {q}"
            )))
        }
        _ => {}
    }
    let frames = FrameField::new(alg)?;
    let all_cols: Vec<usize> = (0..q - 1).collect();
    let values = map_range(gm.len(), |p| {
        let a = eta_differential(gm, &frames, p);
        let df = gm.differential_flat(p);
        match mode {
            DefectMode::ImageInH1 => {
                let scale = frobenius_power(&df, 1);
                if scale == 0.0 {
                    return 0.0;
                }
                (m1..q)
                    .map(|s| (0..q - 1).map(|c| a[(s, c)].powi(2)).sum::<f64>().sqrt())
                    .fold(0.0, f64::max)
                    / scale
            }
            DefectMode::H1InImage => {
                let scale = frobenius_power(&df, q - 1);
                if scale == 0.0 {
                    return 0.0;
                }
                (0..m1)
                    .map(|s| {
                        let rows: Vec<usize> = (0..q).filter(|&r| r != s).collect();
                        a.select(&rows, &all_cols).det().abs()
                    })
                    .fold(0.0, f64::max)
                    / scale
            }
        }
    });
    let label = match mode {
        DefectMode::H1InImage => "defect (H1 in image)",
        DefectMode::ImageInH1 => "defect (image in H1)",
    };
    Ok(DefectField::new(label, gm, values, 1, tol))
}

/// Numerical rank of the differential at every point, histogram over interior points.
pub fn rank_histogram(gm: &GridMap) -> Vec<usize> {
    let ranks = map_range(gm.len(), |p| {
        gm.is_interior(p)
            .then(|| gm.differential_flat(p).numerical_rank(RANK_REL_TOL))
    });
    let mut hist = vec![0; gm.n().min(gm.m()) + 1];
    for r in ranks.into_iter().flatten() {
        hist[r] += 1;
    }
    hist
}

/// Residuals for one `s` with `d_s = κ + 1`.
#[derive(Clone, Debug)]
pub struct ChainStep {
    /// 0-based index `s`.
    pub s: usize,
    /// `θ_s ∧ d(η_{m_κ+1} ∧ … ∧ η_q) = sign · η_1 ∧ … ∧ η̂_s ∧ … ∧ η_q`, exactly.
    pub sign: i32,
    /// `|f*(η_1 ∧ … ∧ η̂_s ∧ … ∧ η_q)|`.
    pub direct: DefectField,
    /// `|f*θ_s ∧ d(f*(η_{m_κ+1} ∧ … ∧ η_q))|` with `d` taken by finite differences.
    pub implied: DefectField,
}

#[derive(Clone, Debug)]
pub struct ChainReport {
    pub kappa: usize,
    /// `|f*(η_{m_κ+1} ∧ … ∧ η_q)|`.
    pub step1: DefectField,
    pub steps: Vec<ChainStep>,
    /// Interior point counts by finite-difference rank.
    pub rank_histogram: Vec<usize>,
}

impl ChainReport {
    pub fn max_rank(&self) -> usize {
        self.rank_histogram.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    pub fn summary(&self) -> String {
        let mut s = format!("kappa = {}\nstep 1 {}\n", self.kappa, self.step1.summary());
        for st in &self.steps {
            let _ = writeln!(s, "s = {} (sign {:+})", st.s + 1, st.sign);
            let _ = writeln!(s, "  direct  {}", st.direct.summary());
            let _ = writeln!(s, "  implied {}", st.implied.summary());
        }
        let _ = write!(s, "rank histogram {:?}", self.rank_histogram);
        s
    }
}

fn to_f64(form: &KForm<Rat>) -> KForm<f64> {
    form.convert(rat_to_f64)
}

/// Exterior derivative of a coordinate-form field by central differences;
/// meaningful at points at least two nodes from the boundary.
fn numerical_d(gm: &GridMap, field: &PullbackField, flat: usize) -> KForm<f64> {
    let n = gm.n();
    let idx = gm.multi_index(flat);
    let mut out = KForm::zero(n, field.degree() + 1, Basis::Coordinate);
    for axis in 0..n {
        if idx[axis] == 0 || idx[axis] + 1 == gm.resolution()[axis] {
            continue;
        }
        let mut lo = idx.clone();
        let mut hi = idx.clone();
        lo[axis] -= 1;
        hi[axis] += 1;
        let (lo, hi) = (gm.flat_index(&lo).unwrap(), gm.flat_index(&hi).unwrap());
        let h2 = 2.0 * gm.step(axis);
        let partial = KForm::from_terms(
            n,
            field.degree(),
            Basis::Coordinate,
            field
                .tuples()
                .iter()
                .cloned()
                .zip(field.coeffs_at(hi).iter().zip(field.coeffs_at(lo)).map(|(a, b)| (a - b) / h2)),
        );
        let du = KForm::one_form(n, axis, Basis::Coordinate);
        out = out.add(&du.wedge(&partial).unwrap()).unwrap();
    }
    out
}

fn norm(form: &KForm<f64>) -> f64 {
    form.terms().fold(0.0, |acc, (_, c)| acc + c * c).sqrt()
}

fn wedge_label(from: usize, to: usize) -> String {
    if from == to {
        format!("η{from}")
    } else {
        format!("(η{from}∧…∧η{to})")
    }
}

/// Checks the chain `f*(η_{m_κ+1} ∧ … ∧ η_q) = 0 ⇒ f*(η_1 ∧ … ∧ η̂_s ∧ … ∧ η_q) = 0`
/// on a sampled mapping, both directly and through `f*θ_s ∧ d(…)`.
pub fn vanishing_chain_check(gm: &GridMap, alg: &StratifiedAlgebra, kappa: usize, tol: f64) -> Result<ChainReport> {
    if alg.is_commutative() {
        return Err(Error::Commutative);
    }
    if kappa == 0 || kappa >= alg.step() {
        return Err(Error::Precondition(format!(
            "kappa must lie in 1..{}, got {kappa}",
            alg.step()
        )));
    }
    check_target(gm, alg)?;
    let q = alg.dim();
    let frames = FrameField::new(alg)?;
    let omega = eta_range(q, alg.offset(kappa)..q);
    let omega_field = pullback_form_field(gm, &frames, &to_f64(&omega))?;
    let step1 = DefectField::new(
        format!("f*{}", wedge_label(alg.offset(kappa) + 1, q)),
        gm,
        (0..gm.len()).map(|p| omega_field.norm_at(p)).collect(),
        1,
        tol,
    );
    if step1.fraction_above() > tol {
        return Err(Error::PreconditionDefect(Box::new(step1)));
    }
    let d_omega = exterior_derivative(alg, &omega)?;
    let mut steps = Vec::new();
    for s in alg.layer(kappa + 1) {
        let theta = theta_form(alg, s)?;
        let chain = theta.wedge(&d_omega)?;
        let target = complement_wedge::<Rat>(q, s);
        let sign = if chain == target {
            1
        } else if chain == target.scale(&Rat::from_integer((-1).into())) {
            -1
        } else {
            return Err(Error::Internal(format!("θ_{} ∧ dω is not ±η̂_{}", s + 1, s + 1)));
        };
        let direct_field = pullback_form_field(gm, &frames, &to_f64(&target))?;
        let direct = DefectField::new(
            format!("f*(η̂{})", s + 1),
            gm,
            (0..gm.len()).map(|p| direct_field.norm_at(p)).collect(),
            1,
            tol,
        );
        let theta_field = pullback_form_field(gm, &frames, &to_f64(&theta))?;
        let implied_values = map_range(gm.len(), |p| {
            if !gm.is_interior_at(p, 2) {
                return 0.0;
            }
            let d = numerical_d(gm, &omega_field, p);
            norm(&theta_field.form_at(gm.n(), p).wedge(&d).unwrap())
        });
        let implied = DefectField::new(format!("f*θ{}∧d(f*ω)", s + 1), gm, implied_values, 2, tol);
        steps.push(ChainStep {
            s,
            sign,
            direct,
            implied,
        });
    }
    Ok(ChainReport {
        kappa,
        step1,
        steps,
        rank_histogram: rank_histogram(gm),
    })
}
