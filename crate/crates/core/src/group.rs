//! Group law in exponential coordinates, dilations, the left-invariant
//! frame and coframe, and the homogeneous quasi-norm.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::{CompiledPoly, Poly};
use crate::scalar::{Field, Rat, Ring};

/// Right-nested bracket `[w_1, [w_2, … [w_{N-1}, w_N]]]` of a word in `x, y`.
fn nested_bracket<S: Ring>(alg: &StratifiedAlgebra, word: &[bool], x: &[S], y: &[S]) -> Vec<S> {
    let pick = |letter: bool| if letter { y } else { x };
    let mut acc = pick(word[word.len() - 1]).to_vec();
    for &letter in word[..word.len() - 1].iter().rev() {
        if acc.iter().all(Zero::is_zero) {
            break;
        }
        acc = alg.bracket_in(pick(letter), &acc);
    }
    acc
}

/// `x · y` via the Dynkin series truncated at the step (exact for nilpotent
/// algebras), over any ring.
pub fn bch_product_in<S: Ring>(alg: &StratifiedAlgebra, x: &[S], y: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); alg.dim()];
    for (coeff, word) in alg.dynkin_terms() {
        let term = nested_bracket(alg, word, x, y);
        let c = S::from_rational(coeff);
        for (o, t) in out.iter_mut().zip(term) {
            if !t.is_zero() {
                *o = o.clone() + c.clone() * t;
            }
        }
    }
    out
}

pub fn bch_product<S: Ring>(alg: &StratifiedAlgebra, x: &[S], y: &[S]) -> Result<Vec<S>> {
    alg.check_len(x.len())?;
    alg.check_len(y.len())?;
    Ok(bch_product_in(alg, x, y))
}

/// Inverse in exponential coordinates.
pub fn inverse<S: Ring>(x: &[S]) -> Vec<S> {
    x.iter().cloned().map(|v| -v).collect()
}

/// `δ_r`: coordinate `i` scales by `r^{d_i}`.
pub fn dilation<S: Field + PartialOrd>(alg: &StratifiedAlgebra, x: &[S], r: &S) -> Result<Vec<S>> {
    alg.check_len(x.len())?;
    if *r <= S::zero() {
        return Err(Error::NonpositiveScale(if r.is_zero() { 0.0 } else { -r.magnitude() }));
    }
    let mut powers = vec![S::one()];
    for _ in 0..alg.step() {
        let next = powers.last().unwrap().clone() * r.clone();
        powers.push(next);
    }
    Ok(x.iter()
        .enumerate()
        .map(|(i, v)| v.clone() * powers[alg.degree(i)].clone())
        .collect())
}

/// Left-invariant frame `X_i(z)` (columns) and coframe `η_r(z)` (rows),
/// derived once as polynomial matrices in `z`.
#[derive(Clone, Debug)]
pub struct FrameField {
    q: usize,
    frame: Matrix<Poly>,
    coframe: Matrix<Poly>,
    frame_f64: Vec<CompiledPoly>,
    coframe_f64: Vec<CompiledPoly>,
}

impl FrameField {
    pub fn new(alg: &StratifiedAlgebra) -> Result<Self> {
        let q = alg.dim();
        let z: Vec<Poly> = (0..q).map(Poly::var).collect();
        let t = q;
        let mut columns = Vec::with_capacity(q);
        for i in 0..q {
            // Derivative at t = 0 of z · (t e_i).
            let mut y = vec![Poly::zero(); q];
            y[i] = Poly::var(t);
            let product = bch_product_in(alg, &z, &y);
            columns.push(product.iter().map(|p| p.linear_part_in(t)).collect::<Vec<_>>());
        }
        let frame = Matrix::from_columns(&columns);

        // frame = I + N with N nilpotent (it raises degree), so the inverse
        // is the finite series Σ (-N)^k.
        let identity = Matrix::<Poly>::identity(q);
        let neg_n = Matrix::from_fn(q, q, |r, c| identity[(r, c)].clone() - frame[(r, c)].clone());
        let mut coframe = identity.clone();
        let mut power = identity;
        for _ in 0..alg.step() {
            power = power.mul(&neg_n)?;
            coframe = Matrix::from_fn(q, q, |r, c| coframe[(r, c)].clone() + power[(r, c)].clone());
        }
        if !coframe.mul(&frame)?.is_identity() {
            return Err(Error::Internal("coframe is not inverse to the frame".into()));
        }
        let compile = |m: &Matrix<Poly>| {
            (0..q)
                .flat_map(|r| (0..q).map(move |c| (r, c)))
                .map(|(r, c)| m[(r, c)].compile())
                .collect()
        };
        Ok(Self {
            q,
            frame_f64: compile(&frame),
            coframe_f64: compile(&coframe),
            frame,
            coframe,
        })
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn frame_poly(&self) -> &Matrix<Poly> {
        &self.frame
    }

    pub fn coframe_poly(&self) -> &Matrix<Poly> {
        &self.coframe
    }

    /// Matrix whose column `i` is `X_i(z)`.
    pub fn frame_at<S: Ring>(&self, z: &[S]) -> Result<Matrix<S>> {
        self.check(z.len())?;
        Ok(Matrix::from_fn(self.q, self.q, |r, c| self.frame[(r, c)].eval(z)))
    }

    /// Matrix whose row `r` is `η_r(z)`.
    pub fn coframe_at<S: Ring>(&self, z: &[S]) -> Result<Matrix<S>> {
        self.check(z.len())?;
        Ok(Matrix::from_fn(self.q, self.q, |r, c| self.coframe[(r, c)].eval(z)))
    }

    pub fn frame_at_f64(&self, z: &[f64]) -> Matrix<f64> {
        Matrix::from_fn(self.q, self.q, |r, c| self.frame_f64[r * self.q + c].eval(z))
    }

    pub fn coframe_at_f64(&self, z: &[f64]) -> Matrix<f64> {
        Matrix::from_fn(self.q, self.q, |r, c| self.coframe_f64[r * self.q + c].eval(z))
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.q {
            return Err(Error::DimensionMismatch {
                expected: self.q,
                got: len,
            });
        }
        Ok(())
    }
}

pub fn frame<S: Ring>(alg: &StratifiedAlgebra, z: &[S]) -> Result<Matrix<S>> {
    FrameField::new(alg)?.frame_at(z)
}

pub fn coframe<S: Ring>(alg: &StratifiedAlgebra, z: &[S]) -> Result<Matrix<S>> {
    FrameField::new(alg)?.coframe_at(z)
}

/// The group law compiled to polynomials in `(x, y)` for fast `f64` use.
#[derive(Clone, Debug)]
pub struct CompiledGroupLaw {
    q: usize,
    product: Vec<CompiledPoly>,
}

impl CompiledGroupLaw {
    pub fn new(alg: &StratifiedAlgebra) -> Self {
        let q = alg.dim();
        let x: Vec<Poly> = (0..q).map(Poly::var).collect();
        let y: Vec<Poly> = (0..q).map(|i| Poly::var(q + i)).collect();
        let product = bch_product_in(alg, &x, &y).iter().map(Poly::compile).collect();
        Self { q, product }
    }

    /// Writes `x · y` into `out`; `scratch` must hold `2q` entries.
    #[inline]
    pub fn product_into(&self, x: &[f64], y: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        scratch[..self.q].copy_from_slice(x);
        scratch[self.q..2 * self.q].copy_from_slice(y);
        for (o, p) in out.iter_mut().zip(&self.product) {
            *o = p.eval(scratch);
        }
    }

    pub fn product(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut scratch = vec![0.0; 2 * self.q];
        let mut out = vec![0.0; self.q];
        self.product_into(x, y, &mut scratch, &mut out);
        out
    }
}

/// Homogeneous quasi-norm `max_i |w_i|^{1/d_i}`.
#[derive(Clone, Debug)]
pub struct HomogeneousNorm {
    exponents: Vec<f64>,
}

impl HomogeneousNorm {
    pub fn new(alg: &StratifiedAlgebra) -> Self {
        Self {
            exponents: alg.degrees().iter().map(|&d| 1.0 / d as f64).collect(),
        }
    }

    pub fn norm(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(&self.exponents)
            .map(|(x, e)| x.abs().powf(*e))
            .fold(0.0, f64::max)
    }
}

/// `d(x, y) = ‖x⁻¹ · y‖`.
pub fn quasi_distance(alg: &StratifiedAlgebra, metric: &HomogeneousNorm, x: &[f64], y: &[f64]) -> Result<f64> {
    let w = bch_product(alg, &inverse(x), y)?;
    Ok(metric.norm(&w))
}

/// Largest observed `d(x,z) / (d(x,y) + d(y,z))` over random triples in
/// the box `[-extent, extent]^q`.
pub fn quasi_triangle_constant(alg: &StratifiedAlgebra, samples: usize, extent: f64, seed: u64) -> f64 {
    let metric = HomogeneousNorm::new(alg);
    let law = CompiledGroupLaw::new(alg);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = alg.dim();
    let mut point = || -> Vec<f64> { (0..q).map(|_| rng.gen_range(-extent..=extent)).collect() };
    let dist = |a: &[f64], b: &[f64]| metric.norm(&law.product(&inverse(a), b));
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (x, y, z) = (point(), point(), point());
        let denom = dist(&x, &y) + dist(&y, &z);
        if denom > 0.0 {
            worst = worst.max(dist(&x, &z) / denom);
        }
    }
    worst
}

/// Exact rational point with small random numerators and denominators.
pub fn random_rational_point(q: usize, rng: &mut impl Rng) -> Vec<Rat> {
    (0..q)
        .map(|_| {
            let n: i64 = rng.gen_range(-9..=9);
            let d: i64 = rng.gen_range(1..=7);
            crate::scalar::ratio(n, d)
        })
        .collect()
}

pub fn is_zero_vector<S: Ring>(v: &[S]) -> bool {
    v.iter().all(Zero::is_zero)
}
