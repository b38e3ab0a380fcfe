use serde::{Deserialize, Serialize};

use super::algebra::{c, max_entry, projection_defect, tau, Op, TracialAlgebra};
use crate::error::{Error, Result};
use crate::prob::Filtration;

const AXIOM_TOL: f64 = 1e-10;

/// One level of a matrix filtration, given by its conditional expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NCLevel {
    /// `x ↦ Σ_i p_i x p_i` onto the block-diagonal algebra `⊕ p_i M_n p_i`.
    Pinch {
        #[serde(with = "ops_serde")]
        projections: Vec<Op>,
    },
    /// `x ↦ Σ_i τ(p_i x) / τ(p_i) p_i` onto the commutative span of the `p_i`.
    Abelian {
        #[serde(with = "ops_serde")]
        projections: Vec<Op>,
    },
    /// `x ↦ (id ⊗ τ_b)(x) ⊗ 1_b` for `n = a b`, onto `M_a ⊗ 1_b`.
    TensorTrace { a: usize, b: usize },
}

mod ops_serde {
    use super::super::algebra::{op_serde, Op};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct W(#[serde(with = "op_serde")] Op);

    pub fn serialize<S: Serializer>(xs: &[Op], s: S) -> Result<S::Ok, S::Error> {
        xs.iter()
            .map(|x| W(x.clone()))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Op>, D::Error> {
        Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
    }
}

impl NCLevel {
    fn apply(&self, x: &Op) -> Op {
        let n = x.nrows();
        match self {
            NCLevel::Pinch { projections } => {
                let mut out = Op::zeros(n, n);
                for p in projections {
                    out += p * x * p;
                }
                out
            }
            NCLevel::Abelian { projections } => {
                let mut out = Op::zeros(n, n);
                for p in projections {
                    out += p * (tau(&(p * x)) / tau(p));
                }
                out
            }
            NCLevel::TensorTrace { a, b } => {
                let (a, b) = (*a, *b);
                let mut out = Op::zeros(n, n);
                for ia in 0..a {
                    for ja in 0..a {
                        let mut s = c(0.0);
                        for ib in 0..b {
                            s += x[(ia * b + ib, ja * b + ib)];
                        }
                        s /= c(b as f64);
                        for ib in 0..b {
                            out[(ia * b + ib, ja * b + ib)] = s;
                        }
                    }
                }
                out
            }
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            NCLevel::Pinch { projections } | NCLevel::Abelian { projections } => {
                if projections.is_empty() {
                    return Err(Error::InvalidFiltration("empty projection family".into()));
                }
                let mut sum = Op::zeros(n, n);
                for (i, p) in projections.iter().enumerate() {
                    if p.nrows() != n || p.ncols() != n {
                        return Err(Error::DimensionMismatch {
                            expected: n,
                            got: p.nrows(),
                        });
                    }
                    let d = projection_defect(p);
                    if d > AXIOM_TOL {
                        return Err(Error::NotProjection(d));
                    }
                    if tau(p).re <= AXIOM_TOL {
                        return Err(Error::InvalidFiltration("zero projection in family".into()));
                    }
                    for q in &projections[i + 1..] {
                        if max_entry(&(p * q)) > AXIOM_TOL {
                            return Err(Error::InvalidFiltration(
                                "projections are not orthogonal".into(),
                            ));
                        }
                    }
                    sum += p;
                }
                if max_entry(&(sum - Op::identity(n, n))) > AXIOM_TOL {
                    return Err(Error::InvalidFiltration(
                        "projections do not sum to 1".into(),
                    ));
                }
                Ok(())
            }
            NCLevel::TensorTrace { a, b } => {
                if a * b != n {
                    return Err(Error::InvalidFiltration(format!(
                        "{a} x {b} does not factor {n}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Increasing chain of unital subalgebras `M_1 ⊂ … ⊂ M_K` of `M_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFiltration", into = "RawFiltration")]
pub struct NCFiltration {
    algebra: TracialAlgebra,
    levels: Vec<NCLevel>,
}

#[derive(Serialize, Deserialize)]
struct RawFiltration {
    n: usize,
    levels: Vec<NCLevel>,
}

impl TryFrom<RawFiltration> for NCFiltration {
    type Error = Error;

    fn try_from(raw: RawFiltration) -> Result<Self> {
        Self::new(raw.n, raw.levels)
    }
}

impl From<NCFiltration> for RawFiltration {
    fn from(f: NCFiltration) -> Self {
        Self {
            n: f.dim(),
            levels: f.levels,
        }
    }
}

fn unit(n: usize, i: usize, j: usize) -> Op {
    let mut e = Op::zeros(n, n);
    e[(i, j)] = c(1.0);
    e
}

impl NCFiltration {
    /// Checks every level on the matrix units: idempotent, unital, trace
    /// preserving, completely positive, and nested.
    pub fn new(n: usize, levels: Vec<NCLevel>) -> Result<Self> {
        let algebra = TracialAlgebra::new(n)?;
        if levels.is_empty() {
            return Err(Error::InvalidFiltration("no levels".into()));
        }
        for l in &levels {
            l.check(n)?;
        }
        let id = Op::identity(n, n);
        for (k, l) in levels.iter().enumerate() {
            if max_entry(&(l.apply(&id) - &id)) > AXIOM_TOL {
                return Err(Error::InvalidFiltration(format!(
                    "level {} is not unital",
                    k + 1
                )));
            }
            let mut choi = Op::zeros(n * n, n * n);
            for i in 0..n {
                for j in 0..n {
                    let e = unit(n, i, j);
                    let y = l.apply(&e);
                    if max_entry(&(l.apply(&y) - &y)) > AXIOM_TOL {
                        return Err(Error::InvalidFiltration(format!(
                            "level {} is not idempotent",
                            k + 1
                        )));
                    }
                    if (tau(&y) - tau(&e)).norm() > AXIOM_TOL {
                        return Err(Error::InvalidFiltration(format!(
                            "level {} is not trace preserving",
                            k + 1
                        )));
                    }
                    choi.view_mut((i * n, j * n), (n, n)).copy_from(&y);
                }
            }
            let eig = choi.symmetric_eigen();
            if eig.eigenvalues.iter().any(|v| *v < -AXIOM_TOL) {
                return Err(Error::InvalidFiltration(format!(
                    "level {} is not completely positive",
                    k + 1
                )));
            }
            if k > 0 {
                let lower = &levels[k - 1];
                for i in 0..n {
                    for j in 0..n {
                        let e = unit(n, i, j);
                        let want = lower.apply(&e);
                        if max_entry(&(lower.apply(&l.apply(&e)) - &want)) > AXIOM_TOL
                            || max_entry(&(l.apply(&want) - &want)) > AXIOM_TOL
                        {
                            return Err(Error::InvalidFiltration(format!(
                                "levels {k} and {} are not nested",
                                k + 1
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { algebra, levels })
    }

    /// `M_n` with the commutative filtration of a uniform space embedded on the diagonal.
    pub fn from_commutative(filt: &Filtration) -> Result<Self> {
        let n = filt.len();
        let w = filt.weights();
        if w.iter().any(|x| (x * n as f64 - 1.0).abs() > 1e-12) {
            return Err(Error::Unsupported(
                "diagonal embedding needs uniform weights".into(),
            ));
        }
        let levels = (1..=filt.depth())
            .map(|k| NCLevel::Abelian {
                projections: filt
                    .blocks(k)
                    .iter()
                    .map(|b| {
                        Op::from_fn(n, n, |i, j| {
                            c(if i == j && b.contains(&i) { 1.0 } else { 0.0 })
                        })
                    })
                    .collect(),
            })
            .collect();
        Self::new(n, levels)
    }

    pub fn algebra(&self) -> TracialAlgebra {
        self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[NCLevel] {
        &self.levels
    }

    pub fn check_level(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.depth() {
            return Err(Error::LevelRange {
                level: k,
                depth: self.depth(),
            });
        }
        Ok(())
    }

    /// `E_k x`, with `E_0 = 0`.
    pub fn cond_exp(&self, x: &Op, k: usize) -> Op {
        if k == 0 {
            return Op::zeros(x.nrows(), x.ncols());
        }
        self.levels[k - 1].apply(x)
    }

    /// `df_k = E_k f - E_{k-1} f` for `k = 1, …, K`.
    pub fn diffs(&self, f: &Op) -> Vec<Op> {
        let mut prev = Op::zeros(f.nrows(), f.ncols());
        (1..=self.depth())
            .map(|k| {
                let cur = self.cond_exp(f, k);
                let d = &cur - &prev;
                prev = cur;
                d
            })
            .collect()
    }

    pub fn is_measurable(&self, x: &Op, k: usize, tol: f64) -> bool {
        max_entry(&(self.cond_exp(x, k) - x)) <= tol * max_entry(x).max(1.0)
    }

    /// Smallest level containing `x`.
    pub fn measurability_level(&self, x: &Op, tol: f64) -> Option<usize> {
        (1..=self.depth()).find(|&k| self.is_measurable(x, k, tol))
    }
}

/// `M_2` with scalars, diagonal matrices, and the full algebra.
pub fn m2chain() -> NCFiltration {
    let e11 = Op::from_fn(2, 2, |i, j| c(if i == 0 && j == 0 { 1.0 } else { 0.0 }));
    let e22 = Op::from_fn(2, 2, |i, j| c(if i == 1 && j == 1 { 1.0 } else { 0.0 }));
    NCFiltration::new(
        2,
        vec![
            NCLevel::TensorTrace { a: 1, b: 2 },
            NCLevel::Pinch {
                projections: vec![e11, e22],
            },
            NCLevel::TensorTrace { a: 2, b: 1 },
        ],
    )
    .expect("fixture filtration is valid")
}
