//! Maurer-Cartan differentials, the span test and the θ-forms built from
//! the structure constants.

use std::collections::BTreeMap;
use std::ops::Range;

use num_traits::Zero;

use crate::algebra::StratifiedAlgebra;
use crate::error::{Error, Result};
use crate::exterior::form::{Basis, KForm, Multivector};
use crate::linalg::Matrix;
use crate::scalar::{permutation_sign, rat, signed, Field, Rat, Ring};

fn check_index(alg: &StratifiedAlgebra, k: usize) -> Result<()> {
    if k >= alg.dim() {
        return Err(Error::Index(format!("index {} out of range 1..={}", k + 1, alg.dim())));
    }
    Ok(())
}

/// `η_i` for the 0-based index `i`.
pub fn eta(q: usize, i: usize) -> KForm<Rat> {
    KForm::one_form(q, i, Basis::LeftInvariant)
}

/// `η_a ∧ … ∧ η_{b-1}`; the empty range gives the scalar 1.
pub fn eta_range(q: usize, range: Range<usize>) -> KForm<Rat> {
    let idx: Vec<usize> = range.collect();
    KForm::wedge_of(q, &idx, Basis::LeftInvariant)
}

/// `η_1 ∧ … ∧ η̂_s ∧ … ∧ η_q`.
pub fn complement_wedge<S: Ring>(q: usize, s: usize) -> KForm<S> {
    let idx: Vec<usize> = (0..q).filter(|&i| i != s).collect();
    KForm::wedge_of(q, &idx, Basis::LeftInvariant)
}

/// `dη_k = Σ_{j<i, d_i<d_k} c^k_{j,i} η_i ∧ η_j` (0-based `k`).
pub fn maurer_cartan(alg: &StratifiedAlgebra, k: usize) -> Result<KForm<Rat>> {
    check_index(alg, k)?;
    let q = alg.dim();
    let dk = alg.degree(k);
    let mut terms = Vec::new();
    for i in 0..q {
        if alg.degree(i) >= dk {
            continue;
        }
        for j in 0..i {
            let c = alg.c(j, i, k);
            if !c.is_zero() {
                terms.push((vec![i, j], c.clone()));
            }
        }
    }
    Ok(KForm::from_terms(q, 2, Basis::LeftInvariant, terms))
}

/// Exterior derivative of a constant-coefficient form on the η-basis,
/// extended from the Maurer-Cartan equations by the graded Leibniz rule.
pub fn exterior_derivative(alg: &StratifiedAlgebra, form: &KForm<Rat>) -> Result<KForm<Rat>> {
    if form.basis() != Basis::LeftInvariant {
        return Err(Error::BasisMismatch);
    }
    let q = alg.dim();
    if form.dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: form.dim(),
        });
    }
    let differentials: Vec<KForm<Rat>> = (0..q).map(|k| maurer_cartan(alg, k)).collect::<Result<_>>()?;
    let mut out = KForm::zero(q, form.degree() + 1, Basis::LeftInvariant);
    for (idx, c) in form.terms() {
        for p in 0..idx.len() {
            let mut piece = KForm::scalar(q, signed(c.clone(), if p % 2 == 0 { 1 } else { -1 }), Basis::LeftInvariant);
            for (pos, &i) in idx.iter().enumerate() {
                let factor = if pos == p { differentials[i].clone() } else { eta(q, i) };
                piece = piece.wedge(&factor)?;
            }
            out = out.add(&piece)?;
        }
    }
    Ok(out)
}

/// Outcome of [`span_test`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanVerdict {
    /// The form vanishes on independent vectors: `X_s` lies in their span.
    Member,
    /// The form does not vanish: `X_s` is outside the span.
    NotMember,
    /// The vectors are dependent, so the form vanishes regardless and
    /// membership is not decided.
    DependentInput,
}

#[derive(Clone, Debug)]
pub struct SpanTest<S> {
    /// `(η_1 ∧ … ∧ η̂_s ∧ … ∧ η_q)(ξ_1 ∧ … ∧ ξ_{q−1})`.
    pub value: S,
    pub verdict: SpanVerdict,
}

impl<S> SpanTest<S> {
    /// Whether the form vanishes on the given vectors.
    pub fn vanishes(&self) -> bool {
        self.verdict != SpanVerdict::NotMember
    }
}

/// Decides whether `X_s` lies in the span of `ξ_1, …, ξ_{q−1}` (vectors in
/// frame coordinates) by evaluating the complementary η-wedge on them.
/// `tol` is zero for exact scalars.
pub fn span_test<S: Field>(s: usize, xis: &[Vec<S>], tol: f64) -> Result<SpanTest<S>> {
    let q = xis.len() + 1;
    if q < 3 {
        return Err(Error::Precondition(format!("span test needs q >= 3, got {q}")));
    }
    if s >= q {
        return Err(Error::Index(format!("s = {} out of range 1..={q}", s + 1)));
    }
    let v = Multivector::from_vectors(xis)?;
    if v.dim() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: v.dim(),
        });
    }
    let value = crate::exterior::form::evaluate(&complement_wedge(q, s), &v)?;
    let independent = Matrix::from_columns(xis).rank_with_tol(tol) == q - 1;
    let vanishes = value.magnitude() <= tol;
    let verdict = match (independent, vanishes) {
        (false, _) => SpanVerdict::DependentInput,
        (true, true) => SpanVerdict::Member,
        (true, false) => SpanVerdict::NotMember,
    };
    Ok(SpanTest { value, verdict })
}

/// Coefficients `γ^s_{k,l}` with `Σ γ^s_{k,l} c^r_{k,l} = δ_{s,r}` for every
/// `r` of degree above `κ = d_s − 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSolution {
    pub s: usize,
    pub kappa: usize,
    /// Nonzero entries keyed by 0-based `(k, l)`, `d_k = 1`, `d_l = κ`, `k < l`.
    pub coeffs: BTreeMap<(usize, usize), Rat>,
}

impl GammaSolution {
    pub fn get(&self, k: usize, l: usize) -> Rat {
        self.coeffs.get(&(k, l)).cloned().unwrap_or_else(|| rat(0))
    }
}

fn kappa_of(alg: &StratifiedAlgebra, s: usize) -> Result<usize> {
    if alg.is_commutative() {
        return Err(Error::Commutative);
    }
    check_index(alg, s)?;
    let ds = alg.degree(s);
    if ds < 2 {
        return Err(Error::Precondition(format!(
            "X_{} has degree 1; θ needs degree at least 2",
            s + 1
        )));
    }
    Ok(ds - 1)
}

pub fn gamma_coefficients(alg: &StratifiedAlgebra, s: usize) -> Result<GammaSolution> {
    let kappa = kappa_of(alg, s)?;
    let q = alg.dim();
    let pairs: Vec<(usize, usize)> = alg
        .layer(1)
        .flat_map(|k| alg.layer(kappa).filter(move |&l| k < l).map(move |l| (k, l)))
        .collect();
    let targets: Vec<usize> = (0..q).filter(|&r| alg.degree(r) > kappa).collect();
    let system = Matrix::from_fn(targets.len(), pairs.len(), |row, col| {
        let (k, l) = pairs[col];
        alg.c(k, l, targets[row]).clone()
    });
    let rhs: Vec<Rat> = targets.iter().map(|&r| if r == s { rat(1) } else { rat(0) }).collect();
    let x = system
        .solve(&rhs, 0.0)
        .ok_or_else(|| Error::Internal(format!("γ-system for s = {} is unsolvable", s + 1)))?;
    let coeffs = pairs.into_iter().zip(x).filter(|(_, v)| !v.is_zero()).collect();
    Ok(GammaSolution { s, kappa, coeffs })
}

/// `θ_s = Σ (−1)^h γ^s_{k,l} η_1 ∧ … ∧ η̂_k ∧ … ∧ η̂_l ∧ … ∧ η_{m_κ}`, where
/// `(−1)^h` is the sign of the permutation sorting `(…, l, k)`.
pub fn theta_form(alg: &StratifiedAlgebra, s: usize) -> Result<KForm<Rat>> {
    let gamma = gamma_coefficients(alg, s)?;
    let q = alg.dim();
    let top = alg.offset(gamma.kappa);
    let mut theta = KForm::zero(q, top - 2, Basis::LeftInvariant);
    for (&(k, l), g) in &gamma.coeffs {
        let rest: Vec<usize> = (0..top).filter(|&i| i != k && i != l).collect();
        let mut seq = rest.clone();
        seq.extend([l, k]);
        let sign = permutation_sign(&seq).ok_or_else(|| Error::Internal("repeated index in θ".into()))?;
        let term = KForm::wedge_of(q, &rest, Basis::LeftInvariant).scale(&signed(g.clone(), sign));
        theta = theta.add(&term)?;
    }
    Ok(theta)
}

#[derive(Clone, Debug)]
pub struct ThetaCheck {
    pub s: usize,
    pub r: usize,
    /// `θ_s ∧ dη_r ∧ η_{m_κ+1} ∧ … ∧ η_{m_{d_r−1}}`.
    pub lhs: KForm<Rat>,
    /// `δ_{r,s} η_1 ∧ … ∧ η_{m_{d_r−1}}`.
    pub rhs: KForm<Rat>,
    pub holds: bool,
}

pub fn theta_product_check(alg: &StratifiedAlgebra, s: usize, r: usize) -> Result<ThetaCheck> {
    let kappa = kappa_of(alg, s)?;
    check_index(alg, r)?;
    let dr = alg.degree(r);
    if dr <= kappa {
        return Err(Error::Precondition(format!(
            "need d_r > κ, got d_{} = {dr} with κ = {kappa}",
            r + 1
        )));
    }
    let q = alg.dim();
    let upper = alg.offset(dr - 1);
    let lhs = theta_form(alg, s)?
        .wedge(&maurer_cartan(alg, r)?)?
        .wedge(&eta_range(q, alg.offset(kappa)..upper))?;
    let delta = if r == s { rat(1) } else { rat(0) };
    let rhs = eta_range(q, 0..upper).scale(&delta);
    let holds = lhs == rhs || (lhs.is_zero() && rhs.is_zero());
    Ok(ThetaCheck { s, r, lhs, rhs, holds })
}

/// All 0-based `(s, r)` with `d_s = κ + 1 ≥ 2` and `d_r > κ`.
pub fn admissible_pairs(alg: &StratifiedAlgebra) -> Vec<(usize, usize)> {
    let q = alg.dim();
    let mut out = Vec::new();
    for s in 0..q {
        let ds = alg.degree(s);
        if ds < 2 {
            continue;
        }
        for r in 0..q {
            if alg.degree(r) >= ds {
                out.push((s, r));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{build_catalog, CATALOG_SUITE};
    use crate::exterior::form::{evaluate, Multivector};

    fn x(q: usize, coords: &[(usize, i64)]) -> Vec<Rat> {
        let mut v = vec![rat(0); q];
        for &(i, c) in coords {
            v[i] = rat(c);
        }
        v
    }

    #[test]
    fn maurer_cartan_examples() {
        let h = build_catalog("heisenberg").unwrap();
        let d3 = maurer_cartan(&h, 2).unwrap();
        assert_eq!(d3, eta(3, 1).wedge(&eta(3, 0)).unwrap());
        assert_eq!(d3.coeff(&[0, 1]), rat(-1));
        assert!(maurer_cartan(&h, 0).unwrap().is_zero());
        assert!(maurer_cartan(&h, 3).is_err());
        let e = build_catalog("engel").unwrap();
        assert_eq!(maurer_cartan(&e, 3).unwrap(), eta(4, 2).wedge(&eta(4, 0)).unwrap());
    }

    #[test]
    fn maurer_cartan_agrees_with_structure_constants() {
        for name in CATALOG_SUITE {
            let alg = build_catalog(name).unwrap();
            let q = alg.dim();
            for k in 0..q {
                let dk = maurer_cartan(&alg, k).unwrap();
                for i in 0..q {
                    for j in 0..q {
                        if i == j {
                            continue;
                        }
                        let v = Multivector::from_vectors(&[alg.basis_vector(i), alg.basis_vector(j)]).unwrap();
                        assert_eq!(&evaluate(&dk, &v).unwrap(), alg.c(j, i, k), "{name} k={k} i={i} j={j}");
                    }
                }
            }
        }
    }

    #[test]
    fn d_squared_vanishes() {
        for name in CATALOG_SUITE {
            let alg = build_catalog(name).unwrap();
            for k in 0..alg.dim() {
                let dd = exterior_derivative(&alg, &maurer_cartan(&alg, k).unwrap()).unwrap();
                assert!(dd.is_zero(), "{name}: d(dη_{}) = {:?}", k + 1, dd);
            }
        }
    }

    #[test]
    fn span_examples() {
        let t = span_test(2, &[x(3, &[(0, 1)]), x(3, &[(1, 1)])], 0.0).unwrap();
        assert_eq!((t.value, t.verdict), (rat(1), SpanVerdict::NotMember));
        let t = span_test(0, &[x(3, &[(0, 1)]), x(3, &[(1, 1)])], 0.0).unwrap();
        assert_eq!((t.value, t.verdict), (rat(0), SpanVerdict::Member));
        let t = span_test(0, &[x(3, &[(0, 1), (2, 1)]), x(3, &[(1, 1)])], 0.0).unwrap();
        assert_eq!((t.value, t.verdict), (rat(-1), SpanVerdict::NotMember));
        let t = span_test(0, &[x(3, &[(0, 1)]), x(3, &[(0, 2)])], 0.0).unwrap();
        assert_eq!(t.verdict, SpanVerdict::DependentInput);
        assert!(span_test(0, &[x(2, &[(0, 1)])], 0.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        let h = build_catalog("heisenberg").unwrap();
        assert_eq!(gamma_coefficients(&h, 2).unwrap().get(0, 1), rat(1));
        let e = build_catalog("engel").unwrap();
        assert_eq!(gamma_coefficients(&e, 3).unwrap().get(0, 2), rat(1));
        let f = build_catalog("free_step2(3)").unwrap();
        let g = gamma_coefficients(&f, 4).unwrap();
        assert_eq!(g.coeffs.len(), 1);
        assert_eq!(g.get(0, 2), rat(1));
        assert!(matches!(gamma_coefficients(&h, 0), Err(Error::Precondition(_))));
        let a = build_catalog("abelian2").unwrap();
        assert!(matches!(gamma_coefficients(&a, 0), Err(Error::Commutative)));
    }

    #[test]
    fn gamma_satisfies_delta_system() {
        for name in CATALOG_SUITE {
            let alg = build_catalog(name).unwrap();
            for s in (0..alg.dim()).filter(|&s| alg.degree(s) >= 2) {
                let g = gamma_coefficients(&alg, s).unwrap();
                for r in (0..alg.dim()).filter(|&r| alg.degree(r) > g.kappa) {
                    let sum = g
                        .coeffs
                        .iter()
                        .fold(rat(0), |acc, (&(k, l), v)| acc + v.clone() * alg.c(k, l, r).clone());
                    assert_eq!(sum, if r == s { rat(1) } else { rat(0) });
                }
            }
        }
    }

    #[test]
    fn theta_examples() {
        let h = build_catalog("heisenberg").unwrap();
        assert_eq!(theta_form(&h, 2).unwrap(), KForm::scalar(3, rat(-1), Basis::LeftInvariant));
        let e = build_catalog("engel").unwrap();
        assert_eq!(theta_form(&e, 2).unwrap(), KForm::scalar(4, rat(-1), Basis::LeftInvariant));
        assert_eq!(theta_form(&e, 3).unwrap(), eta(4, 1));
    }

    #[test]
    fn theta_products() {
        let h = build_catalog("heisenberg").unwrap();
        let c = theta_product_check(&h, 2, 2).unwrap();
        assert!(c.holds);
        assert_eq!(c.lhs, eta_range(3, 0..2));
        let e = build_catalog("engel").unwrap();
        assert_eq!(admissible_pairs(&e), vec![(2, 2), (2, 3), (3, 3)]);
        let c = theta_product_check(&e, 2, 3).unwrap();
        assert!(c.holds && c.lhs.is_zero());
        let c = theta_product_check(&e, 3, 3).unwrap();
        assert!(c.holds);
        assert_eq!(c.lhs, eta_range(4, 0..3));
        assert!(theta_product_check(&e, 3, 2).is_err());
        for name in CATALOG_SUITE {
            let alg = build_catalog(name).unwrap();
            for (s, r) in admissible_pairs(&alg) {
                assert!(theta_product_check(&alg, s, r).unwrap().holds, "{name} ({s}, {r})");
            }
        }
    }
}
