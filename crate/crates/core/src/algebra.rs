//! Stratified nilpotent Lie algebras given by structure constants on a
//! graded basis `X_1, …, X_q`.
//!
//! Every invariant is checked in exact rational arithmetic. Indices in the
//! public spec types ([`AlgebraSpec`], [`BracketEntry`]) are 1-based, as in
//! group spec files; everything else in the crate is 0-based.

use std::collections::BTreeMap;
use std::ops::Range;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{format_rational, parse_rational, rat, Rat, Ring};

/// Coefficient `c` of `X_k` in `[X_i, X_j]` (1-based indices).
#[derive(Clone, Debug, PartialEq)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: Rat,
}

impl BracketEntry {
    pub fn new(i: usize, j: usize, k: usize, c: Rat) -> Self {
        Self { i, j, k, c }
    }

    pub fn unit(i: usize, j: usize, k: usize) -> Self {
        Self::new(i, j, k, Rat::one())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraSpec {
    pub name: String,
    pub strata_dims: Vec<usize>,
    pub brackets: Vec<BracketEntry>,
}

#[derive(Deserialize, Serialize)]
struct TomlSpec {
    #[serde(default)]
    name: Option<String>,
    strata: Vec<usize>,
    #[serde(default)]
    bracket: Vec<TomlBracket>,
}

#[derive(Deserialize, Serialize)]
struct TomlBracket {
    i: usize,
    j: usize,
    k: usize,
    c: TomlCoeff,
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum TomlCoeff {
    Int(i64),
    Float(f64),
    Text(String),
}

impl TomlCoeff {
    fn to_rational(&self) -> Result<Rat> {
        match self {
            TomlCoeff::Int(n) => Ok(rat(*n)),
            // Shortest round-trip decimal, so 0.1 reads as 1/10.
            TomlCoeff::Float(x) if x.is_finite() => parse_rational(&format!("{x:e}")),
            TomlCoeff::Float(x) => Err(Error::Parse(format!("non-finite coefficient {x}"))),
            TomlCoeff::Text(s) => parse_rational(s),
        }
    }
}

impl AlgebraSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: TomlSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let brackets = raw
            .bracket
            .iter()
            .map(|b| Ok(BracketEntry::new(b.i, b.j, b.k, b.c.to_rational()?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: raw.name.unwrap_or_else(|| "unnamed".into()),
            strata_dims: raw.strata,
            brackets,
        })
    }

    pub fn to_toml(&self) -> String {
        let raw = TomlSpec {
            name: Some(self.name.clone()),
            strata: self.strata_dims.clone(),
            bracket: self
                .brackets
                .iter()
                .map(|b| TomlBracket {
                    i: b.i,
                    j: b.j,
                    k: b.k,
                    c: TomlCoeff::Text(format_rational(&b.c)),
                })
                .collect(),
        };
        toml::to_string(&raw).expect("group spec serializes")
    }
}

/// Canonical specs for the named families.
///
/// Accepted names: `heisenberg`, `heisenberg(n)`, `engel`, `free_step2(r)`,
/// `abelian(n)` and the shorthand `abelianN`.
pub fn catalog(name: &str) -> Result<AlgebraSpec> {
    let unknown = || Error::UnknownGroup(name.to_string());
    let trimmed = name.trim();
    let (family, arg) = match trimmed.split_once('(') {
        Some((f, rest)) => {
            let inner = rest.strip_suffix(')').ok_or_else(unknown)?;
            let n: usize = inner.trim().parse().map_err(|_| unknown())?;
            (f.trim(), Some(n))
        }
        None => match trimmed.strip_prefix("abelian") {
            Some(digits) if !digits.is_empty() => ("abelian", Some(digits.parse().map_err(|_| unknown())?)),
            _ => (trimmed, None),
        },
    };
    match (family, arg) {
        ("heisenberg", n) => {
            let n = n.unwrap_or(1);
            if n == 0 {
                return Err(unknown());
            }
            let brackets = (1..=n).map(|i| BracketEntry::unit(i, n + i, 2 * n + 1)).collect();
            Ok(AlgebraSpec {
                name: format!("heisenberg({n})"),
                strata_dims: vec![2 * n, 1],
                brackets,
            })
        }
        ("engel", None) => Ok(AlgebraSpec {
            name: "engel".into(),
            strata_dims: vec![2, 1, 1],
            brackets: vec![BracketEntry::unit(1, 2, 3), BracketEntry::unit(1, 3, 4)],
        }),
        ("free_step2", Some(r)) if r >= 2 => {
            let mut brackets = Vec::new();
            let mut next = r + 1;
            for i in 1..=r {
                for j in i + 1..=r {
                    brackets.push(BracketEntry::unit(i, j, next));
                    next += 1;
                }
            }
            Ok(AlgebraSpec {
                name: format!("free_step2({r})"),
                strata_dims: vec![r, r * (r - 1) / 2],
                brackets,
            })
        }
        ("abelian", Some(n)) if n >= 1 => Ok(AlgebraSpec {
            name: format!("abelian({n})"),
            strata_dims: vec![n],
            brackets: Vec::new(),
        }),
        _ => Err(unknown()),
    }
}

/// Names exercised by the exact identity suites.
pub const CATALOG_SUITE: [&str; 4] = ["heisenberg(1)", "heisenberg(2)", "engel", "free_step2(3)"];

/// A validated stratified Lie algebra. Immutable after construction.
#[derive(Clone, Debug)]
pub struct StratifiedAlgebra {
    name: String,
    strata: Vec<usize>,
    q: usize,
    /// Dense `c[i][j][k]`, flattened.
    c: Vec<Rat>,
    /// Nonzero constants `(i, j, k, c)` with both orderings of `(i, j)`.
    nonzero: Vec<(usize, usize, usize, Rat)>,
    degrees: Vec<usize>,
    offsets: Vec<usize>,
    dynkin: Vec<(Rat, Vec<bool>)>,
}

/// Outcome of one invariant in a validation report.
#[derive(Debug)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub outcome: Result<()>,
}

impl StratifiedAlgebra {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Dimension `q`.
    pub fn dim(&self) -> usize {
        self.q
    }

    /// Step `ι`.
    pub fn step(&self) -> usize {
        self.strata.len()
    }

    pub fn strata(&self) -> &[usize] {
        &self.strata
    }

    /// Degree `d_i` of the 0-based index `i` (degrees start at 1).
    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `m_0 = 0, m_1, …, m_ι`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `m_k`.
    pub fn offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// 0-based indices of layer `V_j` (`j` starts at 1).
    pub fn layer(&self, j: usize) -> Range<usize> {
        self.offsets[j - 1]..self.offsets[j]
    }

    /// Homogeneous dimension `Q = Σ_j j · dim V_j`.
    pub fn homogeneous_dim(&self) -> usize {
        self.strata.iter().enumerate().map(|(j, d)| (j + 1) * d).sum()
    }

    /// `Q` as the sum of the degrees of the basis; equals [`Self::homogeneous_dim`].
    pub fn homogeneous_dim_from_degrees(&self) -> usize {
        self.degrees.iter().sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.step() == 1
    }

    /// Structure constant `c^k_{i,j}`: the coefficient of `X_k` in `[X_i, X_j]`.
    pub fn c(&self, i: usize, j: usize, k: usize) -> &Rat {
        &self.c[(i * self.q + j) * self.q + k]
    }

    pub fn nonzero_constants(&self) -> &[(usize, usize, usize, Rat)] {
        &self.nonzero
    }

    /// Dynkin terms `(coefficient, word)` of the group law, truncated at the
    /// step; `true` letters stand for the second argument.
    pub fn dynkin_terms(&self) -> &[(Rat, Vec<bool>)] {
        &self.dynkin
    }

    /// Bracket of coefficient vectors over any ring.
    pub fn bracket_in<S: Ring>(&self, a: &[S], b: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.q];
        for (i, j, k, c) in &self.nonzero {
            if a[*i].is_zero() || b[*j].is_zero() {
                continue;
            }
            let term = S::from_rational(c) * a[*i].clone() * b[*j].clone();
            out[*k] = out[*k].clone() + term;
        }
        out
    }

    pub fn bracket(&self, a: &[Rat], b: &[Rat]) -> Result<Vec<Rat>> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.bracket_in(a, b))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.q {
            return Err(Error::DimensionMismatch {
                expected: self.q,
                got: len,
            });
        }
        Ok(())
    }

    /// Basis vector `e_i` (0-based).
    pub fn basis_vector<S: Ring>(&self, i: usize) -> Vec<S> {
        let mut v = vec![S::zero(); self.q];
        v[i] = S::one();
        v
    }

    /// Jacobi residual `[X_i,[X_j,X_k]] + [X_j,[X_k,X_i]] + [X_k,[X_i,X_j]]`.
    pub fn jacobi_residual(&self, i: usize, j: usize, k: usize) -> Vec<Rat> {
        let e = |n: usize| self.basis_vector::<Rat>(n);
        let t1 = self.bracket_in(&e(i), &self.bracket_in(&e(j), &e(k)));
        let t2 = self.bracket_in(&e(j), &self.bracket_in(&e(k), &e(i)));
        let t3 = self.bracket_in(&e(k), &self.bracket_in(&e(i), &e(j)));
        t1.into_iter().zip(t2).zip(t3).map(|((a, b), c)| a + b + c).collect()
    }

    fn check_antisymmetry(&self) -> Result<()> {
        for i in 0..self.q {
            for j in 0..self.q {
                for k in 0..self.q {
                    if !(self.c(i, j, k) + self.c(j, i, k)).is_zero() {
                        return Err(Error::AntisymmetryViolation((i + 1, j + 1, k + 1)));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_grading(&self) -> Result<()> {
        for (i, j, k, _) in &self.nonzero {
            if self.degrees[*i] + self.degrees[*j] != self.degrees[*k] {
                return Err(Error::GradingViolation((i + 1, j + 1, k + 1)));
            }
        }
        Ok(())
    }

    fn check_jacobi(&self) -> Result<()> {
        for i in 0..self.q {
            for j in i + 1..self.q {
                for k in j + 1..self.q {
                    let r = self.jacobi_residual(i, j, k);
                    if r.iter().any(|x| !x.is_zero()) {
                        let residual = r.iter().map(format_rational).collect::<Vec<_>>().join(", ");
                        return Err(Error::JacobiViolation {
                            triple: (i + 1, j + 1, k + 1),
                            residual: format!("({residual})"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// `[V_1, V_κ] = V_{κ+1}` for every `κ < ι`, by exact rank.
    fn check_bracket_generation(&self) -> Result<()> {
        for kappa in 1..self.step() {
            let target = self.layer(kappa + 1);
            let mut columns = Vec::new();
            for i in self.layer(1) {
                for j in self.layer(kappa) {
                    let b = self.bracket_in(&self.basis_vector::<Rat>(i), &self.basis_vector(j));
                    columns.push(b[target.clone()].to_vec());
                }
            }
            let rank = if columns.is_empty() {
                0
            } else {
                Matrix::from_columns(&columns).rank()
            };
            let expected = self.strata[kappa];
            if rank != expected {
                return Err(Error::StratificationError {
                    layer: kappa,
                    rank,
                    expected,
                });
            }
        }
        Ok(())
    }

    fn check_degrees(&self) -> Result<()> {
        for i in 0..self.q {
            let d = self.degrees[i];
            if !(self.offsets[d - 1] < i + 1 && i < self.offsets[d]) {
                return Err(Error::Internal(format!("degree of index {} inconsistent", i + 1)));
            }
        }
        if self.homogeneous_dim() != self.homogeneous_dim_from_degrees() {
            return Err(Error::Internal("homogeneous dimension formulas disagree".into()));
        }
        Ok(())
    }

    /// Re-run every invariant and report each separately.
    pub fn validate(&self) -> Vec<InvariantCheck> {
        vec![
            InvariantCheck {
                name: "antisymmetry",
                outcome: self.check_antisymmetry(),
            },
            InvariantCheck {
                name: "grading",
                outcome: self.check_grading(),
            },
            InvariantCheck {
                name: "jacobi",
                outcome: self.check_jacobi(),
            },
            InvariantCheck {
                name: "bracket generation",
                outcome: self.check_bracket_generation(),
            },
            InvariantCheck {
                name: "degrees and Q",
                outcome: self.check_degrees(),
            },
        ]
    }
}

/// Validate a spec and build the algebra.
pub fn build_algebra(spec: &AlgebraSpec) -> Result<StratifiedAlgebra> {
    let alg = assemble(spec)?;
    for check in alg.validate() {
        check.outcome?;
    }
    Ok(alg)
}

/// Per-invariant verdicts for a spec.
#[derive(Debug)]
pub struct SpecReport {
    pub name: String,
    pub strata: Vec<usize>,
    /// `Σ j · dim V_j`.
    pub homogeneous_dim: usize,
    pub checks: Vec<InvariantCheck>,
    /// Present when every check passed.
    pub algebra: Option<StratifiedAlgebra>,
}

impl SpecReport {
    pub fn passed(&self) -> bool {
        self.algebra.is_some()
    }
}

/// Like [`build_algebra`], but runs every invariant instead of stopping at
/// the first failure. Malformed entries are reported as a failed `structure` check.
pub fn check_spec(spec: &AlgebraSpec) -> SpecReport {
    let homogeneous_dim = spec.strata_dims.iter().enumerate().map(|(j, d)| (j + 1) * d).sum();
    let mut report = SpecReport {
        name: spec.name.clone(),
        strata: spec.strata_dims.clone(),
        homogeneous_dim,
        checks: Vec::new(),
        algebra: None,
    };
    match assemble(spec) {
        Err(e) => report.checks.push(InvariantCheck {
            name: "structure",
            outcome: Err(e),
        }),
        Ok(alg) => {
            report.checks = alg.validate();
            if report.checks.iter().all(|c| c.outcome.is_ok()) {
                report.algebra = Some(alg);
            }
        }
    }
    report
}

/// Builds the tensor of structure constants without checking the invariants.
fn assemble(spec: &AlgebraSpec) -> Result<StratifiedAlgebra> {
    if spec.strata_dims.is_empty() {
        return Err(Error::Precondition("strata_dims must be nonempty".into()));
    }
    if spec.strata_dims.contains(&0) {
        return Err(Error::Precondition("strata dimensions must be positive".into()));
    }
    let q: usize = spec.strata_dims.iter().sum();
    let mut offsets = vec![0];
    for d in &spec.strata_dims {
        offsets.push(offsets.last().unwrap() + d);
    }
    let mut degrees = Vec::with_capacity(q);
    for (layer, d) in spec.strata_dims.iter().enumerate() {
        degrees.extend(std::iter::repeat_n(layer + 1, *d));
    }

    let mut explicit: BTreeMap<(usize, usize, usize), Rat> = BTreeMap::new();
    for b in &spec.brackets {
        for idx in [b.i, b.j, b.k] {
            if idx == 0 || idx > q {
                return Err(Error::Index(format!(
                    "bracket entry ({}, {}, {}) out of range 1..={q}",
                    b.i, b.j, b.k
                )));
            }
        }
        if explicit.insert((b.i - 1, b.j - 1, b.k - 1), b.c.clone()).is_some() {
            return Err(Error::DuplicateEntry((b.i, b.j, b.k)));
        }
    }

    let mut c = vec![Rat::zero(); q * q * q];
    for (&(i, j, k), value) in &explicit {
        if i == j && !value.is_zero() {
            return Err(Error::AntisymmetryViolation((i + 1, j + 1, k + 1)));
        }
        if let Some(partner) = explicit.get(&(j, i, k)) {
            if !(partner + value).is_zero() {
                return Err(Error::AntisymmetryViolation((i + 1, j + 1, k + 1)));
            }
        }
        c[(i * q + j) * q + k] = value.clone();
        c[(j * q + i) * q + k] = -value.clone();
    }
    let mut nonzero = Vec::new();
    for i in 0..q {
        for j in 0..q {
            for k in 0..q {
                let v = &c[(i * q + j) * q + k];
                if !v.is_zero() {
                    nonzero.push((i, j, k, v.clone()));
                }
            }
        }
    }

    Ok(StratifiedAlgebra {
        name: spec.name.clone(),
        strata: spec.strata_dims.clone(),
        q,
        c,
        nonzero,
        degrees,
        offsets,
        dynkin: dynkin_terms(spec.strata_dims.len()),
    })
}

pub fn build_catalog(name: &str) -> Result<StratifiedAlgebra> {
    build_algebra(&catalog(name)?)
}

fn factorial(n: usize) -> Rat {
    (1..=n as i64).fold(Rat::one(), |acc, k| acc * rat(k))
}

/// Dynkin's expansion of `log(exp X exp Y)` through words of length `depth`,
/// with coefficients of identical right-nested words merged.
fn dynkin_terms(depth: usize) -> Vec<(Rat, Vec<bool>)> {
    fn blocks(remaining: usize, n: usize, current: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if current.len() == n {
            out.push(current.clone());
            return;
        }
        for total in 1..=remaining {
            for r in 0..=total {
                current.push((r, total - r));
                blocks(remaining - total, n, current, out);
                current.pop();
            }
        }
    }

    let mut merged: BTreeMap<Vec<bool>, Rat> = BTreeMap::new();
    for n in 1..=depth {
        let mut seqs = Vec::new();
        blocks(depth, n, &mut Vec::new(), &mut seqs);
        let sign = if n % 2 == 1 { Rat::one() } else { -Rat::one() };
        for seq in seqs {
            let length: usize = seq.iter().map(|(r, s)| r + s).sum();
            let mut word = Vec::with_capacity(length);
            let mut denom = rat(length as i64) * rat(n as i64);
            for &(r, s) in &seq {
                word.extend(std::iter::repeat_n(false, r));
                word.extend(std::iter::repeat_n(true, s));
                denom *= factorial(r) * factorial(s);
            }
            // Right-nested brackets vanish when the innermost pair repeats.
            if length >= 2 && word[length - 1] == word[length - 2] {
                continue;
            }
            *merged.entry(word).or_insert_with(Rat::zero) += sign.clone() / denom;
        }
    }
    merged
        .into_iter()
        .filter(|(_, c)| !c.is_zero())
        .map(|(w, c)| (c, w))
        .collect()
}
