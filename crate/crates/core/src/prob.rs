//! Finite probability spaces, refining filtrations and martingale differences.
//!
//! Levels are numbered from 1 to `K`. Level 0 stands for the zero map, so
//! `mart_diff(f, F, 1) = E_1 f`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EQ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpace {
    weights: Vec<f64>,
}

impl WeightedSpace {
    /// Builds a space from positive weights, normalizing them to sum 1.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("no points".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!("weight {w} is not positive")));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().fold(0.0, |s, &i| s + self.weights[i])
    }

    pub fn integral(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `‖values‖_p` for `p ∈ (0, ∞]`.
    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        if p.is_infinite() {
            return values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum();
        s.powf(1.0 / p)
    }
}

/// A real random variable on a finite weighted space.
#[derive(Debug, Clone, PartialEq)]
pub struct Rv {
    space: Arc<WeightedSpace>,
    values: Vec<f64>,
}

impl Rv {
    pub fn new(space: Arc<WeightedSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: values.len(),
            });
        }
        Ok(Self { space, values })
    }

    pub fn zeros(space: Arc<WeightedSpace>) -> Self {
        let n = space.len();
        Self {
            space,
            values: vec![0.0; n],
        }
    }

    pub fn constant(space: Arc<WeightedSpace>, c: f64) -> Self {
        let n = space.len();
        Self {
            space,
            values: vec![c; n],
        }
    }

    pub fn indicator(space: Arc<WeightedSpace>, set: &[usize]) -> Self {
        let mut values = vec![0.0; space.len()];
        for &i in set {
            values[i] = 1.0;
        }
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Rv {
        Rv {
            space: self.space.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Rv, f: impl Fn(f64, f64) -> f64) -> Rv {
        assert_eq!(
            self.len(),
            other.len(),
            "random variables on different spaces"
        );
        Rv {
            space: self.space.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Rv {
        self.map(|v| c * v)
    }

    pub fn abs(&self) -> Rv {
        self.map(f64::abs)
    }

    pub fn norm(&self, p: f64) -> f64 {
        self.space.lp_norm(&self.values, p)
    }

    pub fn integral(&self) -> f64 {
        self.space.integral(&self.values)
    }

    pub fn sup_dist(&self, other: &Rv) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Indices where the value is nonzero.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.values[i] != 0.0).collect()
    }
}

impl Add for &Rv {
    type Output = Rv;
    fn add(self, rhs: &Rv) -> Rv {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Rv {
    type Output = Rv;
    fn sub(self, rhs: &Rv) -> Rv {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul for &Rv {
    type Output = Rv;
    fn mul(self, rhs: &Rv) -> Rv {
        self.zip_with(rhs, |a, b| a * b)
    }
}

impl Neg for &Rv {
    type Output = Rv;
    fn neg(self) -> Rv {
        self.scale(-1.0)
    }
}

/// A nested chain of partitions of a weighted space.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtration {
    space: Arc<WeightedSpace>,
    levels: Vec<Vec<usize>>,
    blocks: Vec<Vec<Vec<usize>>>,
    masses: Vec<Vec<f64>>,
}

impl Filtration {
    /// `levels[k-1][i]` is the block id of point `i` at level `k`.
    pub fn new(space: WeightedSpace, levels: Vec<Vec<usize>>) -> Result<Self> {
        Self::with_space(Arc::new(space), levels)
    }

    pub fn with_space(space: Arc<WeightedSpace>, levels: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.len();
        if levels.is_empty() {
            return Err(Error::InvalidFiltration("no levels".into()));
        }
        let mut blocks = Vec::with_capacity(levels.len());
        for (k, level) in levels.iter().enumerate() {
            if level.len() != n {
                return Err(Error::InvalidFiltration(format!(
                    "level {} has {} entries for {} points",
                    k + 1,
                    level.len(),
                    n
                )));
            }
            let count = level.iter().max().map_or(0, |m| m + 1);
            let mut bl = vec![Vec::new(); count];
            for (i, &b) in level.iter().enumerate() {
                bl[b].push(i);
            }
            if bl.iter().any(Vec::is_empty) {
                return Err(Error::InvalidFiltration(format!(
                    "level {} block ids are not contiguous",
                    k + 1
                )));
            }
            if k > 0 {
                let prev = &levels[k - 1];
                for block in &bl {
                    if block.iter().any(|&i| prev[i] != prev[block[0]]) {
                        return Err(Error::InvalidFiltration(format!(
                            "level {} does not refine level {}",
                            k + 1,
                            k
                        )));
                    }
                }
            }
            blocks.push(bl);
        }
        let masses = blocks
            .iter()
            .map(|bl| bl.iter().map(|b| space.mass(b)).collect())
            .collect();
        Ok(Self {
            space,
            levels,
            blocks,
            masses,
        })
    }

    /// Builds a filtration from explicit partitions given as lists of point sets.
    pub fn from_partitions(space: WeightedSpace, partitions: &[Vec<Vec<usize>>]) -> Result<Self> {
        let n = space.len();
        let mut levels = Vec::with_capacity(partitions.len());
        for part in partitions {
            let mut ids = vec![usize::MAX; n];
            for (b, set) in part.iter().enumerate() {
                for &i in set {
                    if i >= n || ids[i] != usize::MAX {
                        return Err(Error::InvalidFiltration(format!(
                            "point {i} is out of range or listed twice"
                        )));
                    }
                    ids[i] = b;
                }
            }
            if ids.contains(&usize::MAX) {
                return Err(Error::InvalidFiltration("partition misses a point".into()));
            }
            levels.push(ids);
        }
        Self::new(space, levels)
    }

    pub fn space(&self) -> &Arc<WeightedSpace> {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        self.space.weights()
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Number of levels `K`.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Vec<usize>] {
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

    pub fn blocks(&self, k: usize) -> &[Vec<usize>] {
        &self.blocks[k - 1]
    }

    pub fn block_masses(&self, k: usize) -> &[f64] {
        &self.masses[k - 1]
    }

    pub fn block_of(&self, k: usize, point: usize) -> usize {
        self.levels[k - 1][point]
    }

    /// The level-`k` block containing `point`.
    pub fn block_containing(&self, k: usize, point: usize) -> &[usize] {
        &self.blocks[k - 1][self.levels[k - 1][point]]
    }

    pub fn mass(&self, set: &[usize]) -> f64 {
        self.space.mass(set)
    }

    pub fn rv(&self, values: Vec<f64>) -> Result<Rv> {
        Rv::new(self.space.clone(), values)
    }

    pub fn zeros(&self) -> Rv {
        Rv::zeros(self.space.clone())
    }

    pub fn constant(&self, c: f64) -> Rv {
        Rv::constant(self.space.clone(), c)
    }

    pub fn indicator(&self, set: &[usize]) -> Rv {
        Rv::indicator(self.space.clone(), set)
    }

    /// Block averages of `values` at level `k`; `k = 0` gives zeros.
    pub fn average(&self, values: &[f64], k: usize) -> Vec<f64> {
        if k == 0 {
            return vec![0.0; values.len()];
        }
        let w = self.weights();
        let avgs: Vec<f64> = self.blocks[k - 1]
            .iter()
            .zip(&self.masses[k - 1])
            .map(|(b, m)| b.iter().map(|&i| w[i] * values[i]).sum::<f64>() / m)
            .collect();
        self.levels[k - 1].iter().map(|&b| avgs[b]).collect()
    }

    /// Whether `values` is constant on every level-`k` block (within `tol`).
    pub fn is_measurable(&self, values: &[f64], k: usize, tol: f64) -> bool {
        if k == 0 {
            return values.iter().all(|v| v.abs() <= tol);
        }
        self.blocks[k - 1].iter().all(|b| {
            let v0 = values[b[0]];
            b.iter().all(|&i| (values[i] - v0).abs() <= tol)
        })
    }

    /// Whether a point set is a union of level-`k` blocks.
    pub fn is_set_measurable(&self, set: &[usize], k: usize) -> bool {
        let mut member = vec![false; self.len()];
        for &i in set {
            member[i] = true;
        }
        self.blocks[k - 1]
            .iter()
            .all(|b| b.iter().all(|&i| member[i] == member[b[0]]))
    }

    /// Smallest level at which the set is measurable, if any.
    pub fn measurability_level(&self, set: &[usize]) -> Option<usize> {
        (1..=self.depth()).find(|&k| self.is_set_measurable(set, k))
    }

    /// Union of the level-`k` blocks that meet `set`.
    pub fn hull(&self, set: &[usize], k: usize) -> Vec<usize> {
        let mut hit = vec![false; self.blocks[k - 1].len()];
        for &i in set {
            hit[self.levels[k - 1][i]] = true;
        }
        let mut out: Vec<usize> = (0..self.len())
            .filter(|&i| hit[self.levels[k - 1][i]])
            .collect();
        out.sort_unstable();
        out
    }

    /// Whether level `k` separates every point.
    pub fn is_discrete(&self, k: usize) -> bool {
        self.blocks[k - 1].len() == self.len()
    }
}

pub fn cond_exp(f: &Rv, filt: &Filtration, k: usize) -> Result<Rv> {
    filt.check_level(k)?;
    check_len(f, filt)?;
    filt.rv(filt.average(f.values(), k))
}

pub fn mart_diff(f: &Rv, filt: &Filtration, k: usize) -> Result<Rv> {
    filt.check_level(k)?;
    check_len(f, filt)?;
    let cur = filt.average(f.values(), k);
    let prev = filt.average(f.values(), k - 1);
    filt.rv(cur.iter().zip(&prev).map(|(a, b)| a - b).collect())
}

pub fn square_function(f: &Rv, filt: &Filtration) -> Result<Rv> {
    let view = MartingaleView::new(f.clone(), filt)?;
    let mut acc = vec![0.0; f.len()];
    for d in view.diffs() {
        for (a, v) in acc.iter_mut().zip(d.values()) {
            *a += v * v;
        }
    }
    filt.rv(acc.into_iter().map(f64::sqrt).collect())
}

pub fn cond_square_function(f: &Rv, filt: &Filtration) -> Result<Rv> {
    let view = MartingaleView::new(f.clone(), filt)?;
    let mut acc: Vec<f64> = view.diffs()[0].values().iter().map(|v| v * v).collect();
    for k in 2..=filt.depth() {
        let sq: Vec<f64> = view.diff(k).values().iter().map(|v| v * v).collect();
        for (a, v) in acc.iter_mut().zip(filt.average(&sq, k - 1)) {
            *a += v;
        }
    }
    filt.rv(acc.into_iter().map(f64::sqrt).collect())
}

fn check_len(f: &Rv, filt: &Filtration) -> Result<()> {
    if f.len() != filt.len() {
        return Err(Error::DimensionMismatch {
            expected: filt.len(),
            got: f.len(),
        });
    }
    Ok(())
}

/// A random variable together with its cached martingale differences.
#[derive(Debug, Clone)]
pub struct MartingaleView {
    f: Rv,
    diffs: Vec<Rv>,
}

impl MartingaleView {
    pub fn new(f: Rv, filt: &Filtration) -> Result<Self> {
        check_len(&f, filt)?;
        let mut diffs = Vec::with_capacity(filt.depth());
        let mut prev = vec![0.0; f.len()];
        for k in 1..=filt.depth() {
            let cur = filt.average(f.values(), k);
            diffs.push(filt.rv(cur.iter().zip(&prev).map(|(a, b)| a - b).collect())?);
            prev = cur;
        }
        Ok(Self { f, diffs })
    }

    pub fn f(&self) -> &Rv {
        &self.f
    }

    pub fn diffs(&self) -> &[Rv] {
        &self.diffs
    }

    /// `df_k` for `1 ≤ k ≤ K`.
    pub fn diff(&self, k: usize) -> &Rv {
        &self.diffs[k - 1]
    }

    /// `sup_k ‖df_k‖_∞`.
    pub fn max_diff(&self) -> f64 {
        self.diffs
            .iter()
            .fold(0.0, |m, d| m.max(d.norm(f64::INFINITY)))
    }
}

/// The four-point dyadic fixture: uniform weights, levels `{Ω}`, `{{0,1},{2,3}}`, points.
pub fn omega4() -> Filtration {
    Filtration::new(
        WeightedSpace::uniform(4).expect("four points"),
        vec![vec![0, 0, 0, 0], vec![0, 0, 1, 1], vec![0, 1, 2, 3]],
    )
    .expect("valid fixture")
}
