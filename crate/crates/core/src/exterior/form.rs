use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{format_rational, permutation_sign, signed, Field, Rat, Ring};

/// Which basis of one-forms a [`KForm`] is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// `dx_1, …, dx_n` on `R^n`.
    Coordinate,
    /// `η_1, …, η_q`, left-invariant, dual to the graded frame.
    LeftInvariant,
}

/// Strictly increasing index tuples of length `k` drawn from `0..n`, in
/// lexicographic order.
pub fn increasing_tuples(k: usize, n: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, k: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, k, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        go(0, k, n, &mut Vec::new(), &mut out);
    }
    out
}

/// Sort `seq` increasingly and return the permutation sign, or `None` on a
/// repeated index.
pub fn normalize(seq: &[usize]) -> Option<(Vec<usize>, i32)> {
    let sign = permutation_sign(seq)?;
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    Some((sorted, sign))
}

/// A constant-coefficient k-form on an ambient space of dimension `dim`,
/// stored sparsely on strictly increasing index tuples.
#[derive(Clone, PartialEq)]
pub struct KForm<S> {
    dim: usize,
    degree: usize,
    basis: Basis,
    coeffs: BTreeMap<Vec<usize>, S>,
}

impl<S: Ring> KForm<S> {
    pub fn zero(dim: usize, degree: usize, basis: Basis) -> Self {
        Self {
            dim,
            degree,
            basis,
            coeffs: BTreeMap::new(),
        }
    }

    /// Degree-0 form.
    pub fn scalar(dim: usize, value: S, basis: Basis) -> Self {
        let mut f = Self::zero(dim, 0, basis);
        f.add_term(Vec::new(), value);
        f
    }

    /// `dx_{i_1} ∧ … ∧ dx_{i_k}` for indices in any order; zero on repeats.
    pub fn wedge_of(dim: usize, indices: &[usize], basis: Basis) -> Self {
        let mut f = Self::zero(dim, indices.len(), basis);
        if let Some((sorted, sign)) = normalize(indices) {
            f.add_term(sorted, signed(S::one(), sign));
        }
        f
    }

    pub fn one_form(dim: usize, i: usize, basis: Basis) -> Self {
        Self::wedge_of(dim, &[i], basis)
    }

    /// Form with the given coefficients on sorted index tuples.
    pub fn from_terms(dim: usize, degree: usize, basis: Basis, terms: impl IntoIterator<Item = (Vec<usize>, S)>) -> Self {
        let mut f = Self::zero(dim, degree, basis);
        for (idx, c) in terms {
            debug_assert_eq!(idx.len(), degree);
            let (sorted, sign) = normalize(&idx).expect("repeated index in form term");
            f.add_term(sorted, signed(c, sign));
        }
        f
    }

    fn add_term(&mut self, idx: Vec<usize>, c: S) {
        if c.is_zero() {
            return;
        }
        let remove = {
            let slot = self.coeffs.entry(idx.clone()).or_insert_with(S::zero);
            *slot = slot.clone() + c;
            slot.is_zero()
        };
        if remove {
            self.coeffs.remove(&idx);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn coeff(&self, idx: &[usize]) -> S {
        self.coeffs.get(idx).cloned().unwrap_or_else(S::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &S)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficients on all of `I_{k,dim}` in lexicographic order.
    pub fn dense(&self) -> Vec<S> {
        increasing_tuples(self.degree, self.dim)
            .iter()
            .map(|idx| self.coeff(idx))
            .collect()
    }

    pub fn scale(&self, c: &S) -> Self {
        let mut out = Self::zero(self.dim, self.degree, self.basis);
        for (idx, v) in &self.coeffs {
            out.add_term(idx.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(self.degree, other.degree));
        }
        let mut out = self.clone();
        for (idx, v) in &other.coeffs {
            out.add_term(idx.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-S::one()))
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut out = Self::zero(self.dim, self.degree + other.degree, self.basis);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let joined: Vec<usize> = a.iter().chain(b).copied().collect();
                if let Some((sorted, sign)) = normalize(&joined) {
                    out.add_term(sorted, signed(ca.clone() * cb.clone(), sign));
                }
            }
        }
        Ok(out)
    }

    pub fn convert<T: Ring>(&self, f: impl Fn(&S) -> T) -> KForm<T> {
        let mut out = KForm::zero(self.dim, self.degree, self.basis);
        for (idx, v) in &self.coeffs {
            out.add_term(idx.clone(), f(v));
        }
        out
    }
}

pub fn wedge<S: Ring>(a: &KForm<S>, b: &KForm<S>) -> Result<KForm<S>> {
    a.wedge(b)
}

fn describe(idx: &[usize], basis: Basis) -> String {
    let sym = match basis {
        Basis::Coordinate => "dx",
        Basis::LeftInvariant => "η",
    };
    idx.iter().map(|i| format!("{sym}{}", i + 1)).collect::<Vec<_>>().join("∧")
}

impl KForm<Rat> {
    /// Human-readable sum, e.g. `-η1∧η2` or `1/2*dx1 + dx2`.
    pub fn pretty(&self) -> String {
        if self.coeffs.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (n, (idx, c)) in self.coeffs.iter().enumerate() {
            let negative = *c < Rat::from_i64(0);
            let mag = if negative { -c.clone() } else { c.clone() };
            out.push_str(match (n, negative) {
                (0, true) => "-",
                (0, false) => "",
                (_, true) => " - ",
                (_, false) => " + ",
            });
            let body = describe(idx, self.basis);
            match (idx.is_empty(), mag == Rat::from_i64(1)) {
                (true, _) => out.push_str(&format_rational(&mag)),
                (false, true) => out.push_str(&body),
                (false, false) => out.push_str(&format!("{}*{body}", format_rational(&mag))),
            }
        }
        out
    }
}

impl<S: fmt::Debug> fmt::Debug for KForm<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KForm(deg {}, ", self.degree)?;
        let mut map = f.debug_map();
        for (idx, c) in &self.coeffs {
            map.entry(&describe(idx, self.basis), c);
        }
        map.finish()?;
        write!(f, ")")
    }
}

/// A k-vector on the coordinate basis `e_1, …, e_n` (or the frame basis).
#[derive(Clone, Debug, PartialEq)]
pub struct Multivector<S> {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<Vec<usize>, S>,
}

impl<S: Field> Multivector<S> {
    /// `v_1 ∧ … ∧ v_k`: the coefficient on `e_I` is the minor of the rows `I`
    /// of the matrix with columns `v_j`.
    pub fn from_vectors(vectors: &[Vec<S>]) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let k = vectors.len();
        let m = Matrix::from_columns(vectors);
        let cols: Vec<usize> = (0..k).collect();
        let mut coeffs = BTreeMap::new();
        for idx in increasing_tuples(k, dim) {
            let d = m.select(&idx, &cols).det();
            if !d.is_zero() {
                coeffs.insert(idx, d);
            }
        }
        Ok(Self { dim, degree: k, coeffs })
    }

    pub fn zero(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, idx: &[usize]) -> S {
        self.coeffs.get(idx).cloned().unwrap_or_else(S::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Pairing `α(v)`, normalized so that `dx_I(e_J) = δ_{IJ}`.
pub fn evaluate<S: Field>(form: &KForm<S>, v: &Multivector<S>) -> Result<S> {
    if form.degree != v.degree {
        return Err(Error::DegreeMismatch(form.degree, v.degree));
    }
    if form.dim != v.dim {
        return Err(Error::DimensionMismatch {
            expected: form.dim,
            got: v.dim,
        });
    }
    Ok(form
        .coeffs
        .iter()
        .filter_map(|(idx, c)| v.coeffs.get(idx).map(|w| c.clone() * w.clone()))
        .fold(S::zero(), |acc, t| acc + t))
}

/// `∂f_J / ∂x_I`: determinant of rows `J` and columns `I` of `m`.
pub fn minor<S: Field>(rows: &[usize], cols: &[usize], m: &Matrix<S>) -> Result<S> {
    if rows.len() != cols.len() {
        return Err(Error::DegreeMismatch(rows.len(), cols.len()));
    }
    let in_range = |idx: &[usize], n: usize| idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&i| i < n);
    if !in_range(rows, m.rows()) || !in_range(cols, m.cols()) {
        return Err(Error::Index(format!(
            "minor indices {rows:?} x {cols:?} invalid for a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.select(rows, cols).det())
}

/// Pullback of a form on `R^m` under the linear map `l: R^n → R^m`.
pub fn pullback_linear<S: Field>(l: &Matrix<S>, form: &KForm<S>) -> Result<KForm<S>> {
    let (m, n) = (l.rows(), l.cols());
    if form.dim != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: form.dim,
        });
    }
    let k = form.degree;
    if k > m.min(n) {
        return Err(Error::DegreeExceedsDimension {
            degree: k,
            dim: m.min(n),
        });
    }
    let mut out = KForm::zero(n, k, Basis::Coordinate);
    for cols in increasing_tuples(k, n) {
        let mut acc = S::zero();
        for (rows, c) in &form.coeffs {
            acc = acc + c.clone() * l.select(rows, &cols).det();
        }
        out.add_term(cols, acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rat};

    fn dx(i: usize) -> KForm<Rat> {
        KForm::one_form(3, i, Basis::Coordinate)
    }

    #[test]
    fn tuples() {
        assert_eq!(increasing_tuples(2, 3), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(increasing_tuples(0, 3), vec![Vec::<usize>::new()]);
        assert!(increasing_tuples(4, 3).is_empty());
    }

    #[test]
    fn wedge_signs() {
        let a = dx(0).wedge(&dx(1)).unwrap();
        let b = dx(1).wedge(&dx(0)).unwrap();
        assert_eq!(a, b.scale(&rat(-1)));
        let c = dx(0).add(&dx(1)).unwrap().wedge(&dx(1)).unwrap();
        assert_eq!(c, a);
        assert!(dx(2).wedge(&dx(2)).unwrap().is_zero());
        let e12 = Multivector::from_vectors(&[vec![rat(1), rat(0), rat(0)], vec![rat(0), rat(1), rat(0)]]).unwrap();
        assert_eq!(evaluate(&a, &e12).unwrap(), rat(1));
        let eta = KForm::<Rat>::one_form(3, 0, Basis::LeftInvariant);
        assert!(matches!(eta.wedge(&dx(1)), Err(Error::BasisMismatch)));
    }

    #[test]
    fn evaluation_examples() {
        let xi1 = vec![rat(1), rat(0), rat(1)];
        let xi2 = vec![rat(0), rat(1), rat(0)];
        let v = Multivector::from_vectors(&[xi1, xi2]).unwrap();
        let f12 = KForm::<Rat>::wedge_of(3, &[0, 1], Basis::LeftInvariant);
        let f23 = KForm::<Rat>::wedge_of(3, &[1, 2], Basis::LeftInvariant);
        assert_eq!(evaluate(&f12, &v).unwrap(), rat(1));
        assert_eq!(evaluate(&f23, &v).unwrap(), rat(-1));
        assert_eq!(evaluate(&f12, &Multivector::zero(3, 2)).unwrap(), rat(0));
        assert!(evaluate(&dx(0), &v).is_err());
    }

    #[test]
    fn minors() {
        // f(x, y) = (x, y, xy) at (x, y) = (3, 2).
        let df = Matrix::from_rows(&[vec![rat(1), rat(0)], vec![rat(0), rat(1)], vec![rat(2), rat(3)]]);
        assert_eq!(minor(&[0, 2], &[0, 1], &df).unwrap(), rat(3));
        let id = Matrix::<Rat>::identity(3);
        assert_eq!(minor(&[0, 2], &[0, 2], &id).unwrap(), rat(1));
        assert_eq!(minor(&[0, 2], &[1, 2], &id).unwrap(), rat(0));
        let rank_one = Matrix::from_rows(&[vec![rat(1), rat(2)], vec![rat(3), rat(6)]]);
        assert_eq!(minor(&[0, 1], &[0, 1], &rank_one).unwrap(), rat(0));
        assert!(minor(&[0, 3], &[0, 1], &df).is_err());
        assert!(minor(&[1, 0], &[0, 1], &df).is_err());
    }

    #[test]
    fn pullback_examples() {
        let df = Matrix::from_rows(&[vec![rat(1), rat(0)], vec![rat(0), rat(1)], vec![rat(2), rat(3)]]);
        let form = dx(0).wedge(&dx(2)).unwrap();
        let pulled = pullback_linear(&df, &form).unwrap();
        assert_eq!(pulled.coeff(&[0, 1]), rat(3));
        let id = Matrix::<Rat>::identity(3);
        let g = dx(1).wedge(&dx(2)).unwrap().add(&dx(0).wedge(&dx(1)).unwrap()).unwrap();
        assert_eq!(pullback_linear(&id, &g).unwrap(), g);
        let three = dx(0).wedge(&dx(1)).unwrap().wedge(&dx(2)).unwrap();
        assert!(matches!(
            pullback_linear(&df, &three),
            Err(Error::DegreeExceedsDimension { .. })
        ));
    }

    #[test]
    fn pretty_printing() {
        let f = KForm::<Rat>::wedge_of(3, &[1, 0], Basis::LeftInvariant);
        assert_eq!(f.pretty(), "-η1∧η2");
        assert_eq!(KForm::scalar(3, rat(-1), Basis::LeftInvariant).pretty(), "-1");
    }
}
