//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Used to carry the group law and the left-invariant frame symbolically,
//! so the frame and its inverse are derived once per algebra and evaluated
//! afterwards.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::scalar::{format_rational, rat_to_f64, Rat, Ring};

/// Sorted `(variable, exponent)` pairs with positive exponents.
pub type Monomial = Vec<(u32, u32)>;

#[derive(Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rat>,
}

fn mul_monomials(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

impl Poly {
    pub fn constant(c: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        Self { terms }
    }

    pub fn var(index: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(index as u32, 1)], Rat::one());
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, mono: Monomial, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let remove = {
            let slot = self.terms.entry(mono.clone()).or_insert_with(Rat::zero);
            *slot += coeff;
            slot.is_zero()
        };
        if remove {
            self.terms.remove(&mono);
        }
    }

    /// Terms linear in `var`, with `var` divided out; all other terms dropped.
    pub fn linear_part_in(&self, var: usize) -> Poly {
        let var = var as u32;
        let mut out = Poly::zero();
        for (mono, c) in &self.terms {
            if mono.iter().any(|&(v, e)| v == var && e == 1) {
                let rest: Monomial = mono.iter().copied().filter(|&(v, _)| v != var).collect();
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    /// Constant term.
    pub fn constant_term(&self) -> Rat {
        self.terms.get(&Vec::new()).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval<S: Ring>(&self, point: &[S]) -> S {
        let mut acc = S::zero();
        for (mono, c) in &self.terms {
            let mut term = S::from_rational(c);
            for &(v, e) in mono {
                for _ in 0..e {
                    term = term * point[v as usize].clone();
                }
            }
            acc = acc + term;
        }
        acc
    }

    pub fn compile(&self) -> CompiledPoly {
        let mut out = CompiledPoly {
            coeffs: Vec::with_capacity(self.terms.len()),
            ends: Vec::with_capacity(self.terms.len()),
            factors: Vec::new(),
        };
        for (mono, c) in &self.terms {
            out.coeffs.push(rat_to_f64(c));
            out.factors.extend(mono.iter().copied());
            out.ends.push(out.factors.len() as u32);
        }
        out
    }

    /// Render with variable names supplied by `name`.
    pub fn display_with(&self, name: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (k, (mono, c)) in self.terms.iter().enumerate() {
            let negative = *c < Rat::zero();
            let mag = if negative { -c.clone() } else { c.clone() };
            if k == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            if !mag.is_one() || mono.is_empty() {
                factors.push(format_rational(&mag));
            }
            for &(v, e) in mono {
                if e == 1 {
                    factors.push(name(v as usize));
                } else {
                    factors.push(format!("{}^{}", name(v as usize), e));
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with(&|v| format!("x{}", v + 1)))
    }
}

impl Zero for Poly {
    fn zero() -> Self {
        Self::default()
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Poly {
    fn one() -> Self {
        Self::constant(Rat::one())
    }
}

impl Add for Poly {
    type Output = Poly;

    fn add(mut self, rhs: Poly) -> Poly {
        for (mono, c) in rhs.terms {
            self.add_term(mono, c);
        }
        self
    }
}

impl Sub for Poly {
    type Output = Poly;

    fn sub(self, rhs: Poly) -> Poly {
        self + (-rhs)
    }
}

impl Neg for Poly {
    type Output = Poly;

    fn neg(mut self) -> Poly {
        for c in self.terms.values_mut() {
            *c = -c.clone();
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;

    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(mul_monomials(ma, mb), ca * cb);
            }
        }
        out
    }
}

impl Ring for Poly {
    fn from_rational(r: &Rat) -> Self {
        Poly::constant(r.clone())
    }
}

/// A polynomial flattened for fast `f64` evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    coeffs: Vec<f64>,
    /// `ends[t]` is one past the last factor of term `t`.
    ends: Vec<u32>,
    factors: Vec<(u32, u32)>,
}

impl CompiledPoly {
    #[inline]
    pub fn eval(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        let mut start = 0;
        for (&c, &end) in self.coeffs.iter().zip(&self.ends) {
            let mut term = c;
            for &(v, e) in &self.factors[start..end as usize] {
                let x = point[v as usize];
                // Repeated products: `powi` is an opaque libcall even for e = 1.
                for _ in 0..e {
                    term *= x;
                }
            }
            start = end as usize;
            acc += term;
        }
        acc
    }

    /// Evaluates at many points at once; `vars[v]` holds variable `v` for
    /// every point and `term` is scratch of the same length as `out`.
    pub fn eval_columns(&self, vars: &[&[f64]], out: &mut [f64], term: &mut [f64]) {
        out.fill(0.0);
        let mut start = 0;
        for (&c, &end) in self.coeffs.iter().zip(&self.ends) {
            term.fill(c);
            for &(v, e) in &self.factors[start..end as usize] {
                let col = &vars[v as usize][..term.len()];
                for _ in 0..e {
                    for (t, x) in term.iter_mut().zip(col) {
                        *t *= x;
                    }
                }
            }
            start = end as usize;
            for (o, t) in out.iter_mut().zip(term.iter()) {
                *o += t;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}
