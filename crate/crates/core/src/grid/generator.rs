use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::mapping::Mapping;
use crate::linalg::Matrix;

fn default_three() -> usize {
    3
}

fn default_two() -> usize {
    2
}

fn default_one() -> f64 {
    1.0
}

/// One monomial `coeff · Π y_i^{powers[i]}` contributing to output `component`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyTerm {
    pub component: usize,
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Serializable description of an analytic mapping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    /// `y ↦ (0, y)` from `R^{target−1}`.
    VerticalPlane {
        #[serde(default = "default_three")]
        target: usize,
    },
    /// `y ↦ (y, 0, …, 0)`.
    HorizontalPlane {
        #[serde(default = "default_two")]
        source: usize,
        #[serde(default = "default_three")]
        target: usize,
    },
    /// `y ↦ (h(y), y)` with `h(y) = a Σ_i sin(ω y_i + i/2)`.
    Graph {
        #[serde(default = "default_three")]
        target: usize,
        amplitude: f64,
        #[serde(default = "default_one")]
        frequency: f64,
    },
    /// `(u, …) ↦ (ρ cos u, ρ sin u, ρ² u / 2)`, a horizontal lift of the
    /// circle of radius `ρ`; extra source coordinates are ignored.
    LegendrianLift {
        #[serde(default = "default_one")]
        radius: f64,
        #[serde(default = "default_two")]
        source: usize,
    },
    /// Each output is a sum of `terms` random sines.
    RandomTrig {
        source: usize,
        target: usize,
        terms: usize,
        amplitude: f64,
        #[serde(default = "default_one")]
        frequency: f64,
        seed: u64,
    },
    Constant {
        source: usize,
        value: Vec<f64>,
    },
    Identity {
        dim: usize,
    },
    /// `y ↦ M y + b`.
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Vec<f64>,
    },
    Polynomial {
        source: usize,
        target: usize,
        terms: Vec<PolyTerm>,
    },
}

#[derive(Clone, Debug)]
struct Wave {
    component: usize,
    coeff: f64,
    freq: Vec<f64>,
    phase: f64,
}

/// A [`Generator`] ready for evaluation.
#[derive(Clone, Debug)]
pub struct AnalyticMap {
    desc: Generator,
    n: usize,
    m: usize,
    waves: Vec<Wave>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadParams(msg.into())
}

impl Generator {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("generator serializes")
    }

    pub fn build(&self) -> Result<AnalyticMap> {
        let (n, m) = match self {
            Generator::VerticalPlane { target } => {
                if *target < 2 {
                    return Err(bad("vertical plane needs target >= 2"));
                }
                (target - 1, *target)
            }
            Generator::HorizontalPlane { source, target } => {
                if source > target || *source == 0 {
                    return Err(bad("horizontal plane needs 0 < source <= target"));
                }
                (*source, *target)
            }
            Generator::Graph {
                target,
                amplitude,
                frequency,
            } => {
                if *target < 2 || !amplitude.is_finite() || !frequency.is_finite() {
                    return Err(bad("graph needs target >= 2 and finite parameters"));
                }
                (target - 1, *target)
            }
            Generator::LegendrianLift { radius, source } => {
                if !(radius.is_finite() && *radius > 0.0) || *source == 0 {
                    return Err(bad("legendrian lift needs a positive radius and source >= 1"));
                }
                (*source, 3)
            }
            Generator::RandomTrig {
                source,
                target,
                terms,
                amplitude,
                frequency,
                ..
            } => {
                if *source == 0 || *target == 0 || *terms == 0 || !amplitude.is_finite() || !frequency.is_finite() {
                    return Err(bad("random_trig needs positive sizes and finite parameters"));
                }
                (*source, *target)
            }
            Generator::Constant { source, value } => {
                if *source == 0 || value.is_empty() || value.iter().any(|v| !v.is_finite()) {
                    return Err(bad("constant map needs source >= 1 and a finite value"));
                }
                (*source, value.len())
            }
            Generator::Identity { dim } => {
                if *dim == 0 {
                    return Err(bad("identity needs dim >= 1"));
                }
                (*dim, *dim)
            }
            Generator::Linear { matrix, offset } => {
                let m = matrix.len();
                let n = matrix.first().map_or(0, Vec::len);
                if m == 0 || n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(bad("linear map needs a nonempty rectangular matrix"));
                }
                if !offset.is_empty() && offset.len() != m {
                    return Err(bad("offset length must match the matrix rows"));
                }
                (n, m)
            }
            Generator::Polynomial { source, target, terms } => {
                if terms.iter().any(|t| t.component >= *target || t.powers.len() != *source) {
                    return Err(bad("polynomial term has a bad component or power list"));
                }
                (*source, *target)
            }
        };
        let mut waves = Vec::new();
        if let Generator::RandomTrig {
            terms,
            amplitude,
            frequency,
            seed,
            ..
        } = self
        {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for component in 0..m {
                for _ in 0..*terms {
                    waves.push(Wave {
                        component,
                        coeff: amplitude * rng.gen_range(-1.0..1.0),
                        freq: (0..n).map(|_| frequency * rng.gen_range(-1.0..1.0)).collect(),
                        phase: rng.gen_range(0.0..std::f64::consts::TAU),
                    });
                }
            }
        }
        Ok(AnalyticMap {
            desc: self.clone(),
            n,
            m,
            waves,
        })
    }
}

impl AnalyticMap {
    pub fn descriptor(&self) -> &Generator {
        &self.desc
    }
}

impl Mapping for AnalyticMap {
    fn source_dim(&self) -> usize {
        self.n
    }

    fn target_dim(&self) -> usize {
        self.m
    }

    fn eval_into(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        match &self.desc {
            Generator::VerticalPlane { .. } => out[1..].copy_from_slice(y),
            Generator::HorizontalPlane { source, .. } => out[..*source].copy_from_slice(y),
            Generator::Graph {
                amplitude, frequency, ..
            } => {
                out[0] = amplitude
                    * y.iter()
                        .enumerate()
                        .map(|(i, v)| (frequency * v + 0.5 * i as f64).sin())
                        .sum::<f64>();
                out[1..].copy_from_slice(y);
            }
            Generator::LegendrianLift { radius, .. } => {
                let u = y[0];
                out[0] = radius * u.cos();
                out[1] = radius * u.sin();
                out[2] = radius * radius * u / 2.0;
            }
            Generator::RandomTrig { .. } => {
                for w in &self.waves {
                    let arg = w.phase + w.freq.iter().zip(y).map(|(f, v)| f * v).sum::<f64>();
                    out[w.component] += w.coeff * arg.sin();
                }
            }
            Generator::Constant { value, .. } => out.copy_from_slice(value),
            Generator::Identity { .. } => out.copy_from_slice(y),
            Generator::Linear { matrix, offset } => {
                for (r, row) in matrix.iter().enumerate() {
                    out[r] = row.iter().zip(y).map(|(a, v)| a * v).sum::<f64>() + offset.get(r).copied().unwrap_or(0.0);
                }
            }
            Generator::Polynomial { terms, .. } => {
                for t in terms {
                    out[t.component] += t.coeff * t.powers.iter().zip(y).map(|(&p, v)| v.powi(p as i32)).product::<f64>();
                }
            }
        }
    }

    fn jacobian(&self, y: &[f64]) -> Matrix<f64> {
        let (n, m) = (self.n, self.m);
        let mut jac = Matrix::zeros(m, n);
        match &self.desc {
            Generator::VerticalPlane { .. } => {
                for i in 0..n {
                    jac[(i + 1, i)] = 1.0;
                }
            }
            Generator::HorizontalPlane { .. } | Generator::Identity { .. } => {
                for i in 0..n {
                    jac[(i, i)] = 1.0;
                }
            }
            Generator::Graph {
                amplitude, frequency, ..
            } => {
                for i in 0..n {
                    jac[(0, i)] = amplitude * frequency * (frequency * y[i] + 0.5 * i as f64).cos();
                    jac[(i + 1, i)] = 1.0;
                }
            }
            Generator::LegendrianLift { radius, .. } => {
                jac[(0, 0)] = -radius * y[0].sin();
                jac[(1, 0)] = radius * y[0].cos();
                jac[(2, 0)] = radius * radius / 2.0;
            }
            Generator::RandomTrig { .. } => {
                for w in &self.waves {
                    let arg = w.phase + w.freq.iter().zip(y).map(|(f, v)| f * v).sum::<f64>();
                    let c = w.coeff * arg.cos();
                    for (i, f) in w.freq.iter().enumerate() {
                        jac[(w.component, i)] += c * f;
                    }
                }
            }
            Generator::Constant { .. } => {}
            Generator::Linear { matrix, .. } => {
                for (r, row) in matrix.iter().enumerate() {
                    for (c, a) in row.iter().enumerate() {
                        jac[(r, c)] = *a;
                    }
                }
            }
            Generator::Polynomial { terms, .. } => {
                for t in terms {
                    for i in 0..n {
                        let p = t.powers[i];
                        if p == 0 {
                            continue;
                        }
                        let mut d = t.coeff * p as f64;
                        for (j, (&q, v)) in t.powers.iter().zip(y).enumerate() {
                            d *= if j == i { v.powi(q as i32 - 1) } else { v.powi(q as i32) };
                        }
                        jac[(t.component, i)] += d;
                    }
                }
            }
        }
        jac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::mapping::FnMap;

    fn close(a: &Matrix<f64>, b: &Matrix<f64>, tol: f64) -> bool {
        (0..a.rows()).all(|r| (0..a.cols()).all(|c| (a[(r, c)] - b[(r, c)]).abs() < tol))
    }

    fn all_kinds() -> Vec<Generator> {
        vec![
            Generator::VerticalPlane { target: 3 },
            Generator::HorizontalPlane { source: 2, target: 3 },
            Generator::Graph {
                target: 3,
                amplitude: 0.3,
                frequency: 2.0,
            },
            Generator::LegendrianLift { radius: 1.5, source: 2 },
            Generator::RandomTrig {
                source: 2,
                target: 3,
                terms: 3,
                amplitude: 0.5,
                frequency: 2.0,
                seed: 7,
            },
            Generator::Constant {
                source: 2,
                value: vec![1.0, 2.0, 3.0],
            },
            Generator::Identity { dim: 3 },
            Generator::Linear {
                matrix: vec![vec![1.0, 2.0], vec![0.5, -1.0]],
                offset: vec![1.0, 0.0],
            },
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
                        component: 2,
                        coeff: -2.0,
                        powers: vec![2, 3],
                    },
                ],
            },
        ]
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        for g in all_kinds() {
            let map = g.build().unwrap();
            let n = map.source_dim();
            let y: Vec<f64> = (0..n).map(|i| 0.3 + 0.17 * i as f64).collect();
            let fd = FnMap::new(n, map.target_dim(), |p: &[f64], out: &mut [f64]| map.eval_into(p, out));
            assert!(close(&map.jacobian(&y), &fd.jacobian(&y), 1e-7), "{g:?}");
        }
    }

    #[test]
    fn toml_round_trip() {
        for g in all_kinds() {
            assert_eq!(Generator::from_toml(&g.to_toml()).unwrap(), g);
        }
        let g = Generator::from_toml("kind = \"legendrian_lift\"\n").unwrap();
        assert_eq!(g, Generator::LegendrianLift { radius: 1.0, source: 2 });
    }

    #[test]
    fn examples() {
        let lift = Generator::LegendrianLift { radius: 1.0, source: 1 }.build().unwrap();
        let t = 0.8_f64;
        let v = lift.eval(&[t]);
        assert!((v[0] - t.cos()).abs() < 1e-15 && (v[1] - t.sin()).abs() < 1e-15 && (v[2] - t / 2.0).abs() < 1e-15);
        let vp = Generator::VerticalPlane { target: 3 }.build().unwrap();
        assert_eq!(vp.eval(&[2.0, 5.0]), vec![0.0, 2.0, 5.0]);
        let flat = Generator::Graph {
            target: 3,
            amplitude: 0.0,
            frequency: 1.0,
        }
        .build()
        .unwrap();
        assert_eq!(flat.eval(&[2.0, 5.0]), vp.eval(&[2.0, 5.0]));
        assert!(Generator::LegendrianLift { radius: -1.0, source: 2 }.build().is_err());
        assert!(Generator::Linear {
            matrix: vec![vec![1.0], vec![1.0, 2.0]],
            offset: vec![]
        }
        .build()
        .is_err());
    }
}
