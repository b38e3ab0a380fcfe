//! Conditional medians, the median form of the BMO norm, median-based
//! atomic blocks, and weak `∞`-atoms.

use serde::{Deserialize, Serialize};

use crate::atoms::{validate_block, AtomicBlock, BlockRule, Subatom, Term};
use crate::error::{Error, Result};
use crate::norms::conjugate;
use crate::prob::{Filtration, Rv};

const MEDIAN_TOL: f64 = 1e-12;

/// Lowest `v` among `values` with `μ{f < v} ≤ m/2` and `μ{f > v} ≤ m/2`.
fn lowest_median(values: &[f64], weights: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let mut below = 0.0;
    for (t, &i) in order.iter().enumerate() {
        below += weights[i];
        let last_of_value = order.get(t + 1).is_none_or(|&j| values[j] != values[i]);
        if last_of_value && below >= total / 2.0 - MEDIAN_TOL * total {
            return values[i];
        }
    }
    values[order[order.len() - 1]]
}

/// Whether `v` satisfies both median inequalities on the given weighted sample.
pub fn is_median(v: f64, values: &[f64], weights: &[f64]) -> bool {
    let total: f64 = weights.iter().sum();
    let (mut above, mut below) = (0.0, 0.0);
    for (x, w) in values.iter().zip(weights) {
        if *x > v {
            above += w;
        } else if *x < v {
            below += w;
        }
    }
    above <= total / 2.0 + MEDIAN_TOL * total && below <= total / 2.0 + MEDIAN_TOL * total
}

/// Conditional median at level `k`: the lowest valid weighted median on each block.
pub fn cond_median(f: &Rv, filt: &Filtration, k: usize) -> Result<Rv> {
    filt.check_level(k)?;
    let w = filt.weights();
    let mut out = vec![0.0; filt.len()];
    for block in filt.blocks(k) {
        let vals: Vec<f64> = block.iter().map(|&i| f.values()[i]).collect();
        let ws: Vec<f64> = block.iter().map(|&i| w[i]).collect();
        let m = lowest_median(&vals, &ws);
        for &i in block {
            out[i] = m;
        }
    }
    filt.rv(out)
}

/// Every sample value that is a valid median, per level-`k` block.
pub fn all_valid_medians(f: &Rv, filt: &Filtration, k: usize) -> Result<Vec<Vec<f64>>> {
    filt.check_level(k)?;
    let w = filt.weights();
    Ok(filt
        .blocks(k)
        .iter()
        .map(|block| {
            let vals: Vec<f64> = block.iter().map(|&i| f.values()[i]).collect();
            let ws: Vec<f64> = block.iter().map(|&i| w[i]).collect();
            let mut ok: Vec<f64> = vals
                .iter()
                .copied()
                .filter(|&v| is_median(v, &vals, &ws))
                .collect();
            ok.sort_by(f64::total_cmp);
            ok.dedup();
            ok
        })
        .collect())
}

/// Conditional medians `α_1 f, …, α_K f`.
#[derive(Debug, Clone)]
pub struct MedianSequence {
    alphas: Vec<Rv>,
}

impl MedianSequence {
    pub fn new(f: &Rv, filt: &Filtration) -> Result<Self> {
        let alphas = (1..=filt.depth())
            .map(|k| cond_median(f, filt, k))
            .collect::<Result<_>>()?;
        Ok(Self { alphas })
    }

    /// Uses caller-supplied medians after checking both defining inequalities.
    pub fn from_alphas(f: &Rv, filt: &Filtration, alphas: Vec<Rv>) -> Result<Self> {
        if alphas.len() != filt.depth() {
            return Err(Error::DimensionMismatch {
                expected: filt.depth(),
                got: alphas.len(),
            });
        }
        let ms = Self { alphas };
        if !ms.is_valid(f, filt) {
            return Err(Error::Domain(
                "supplied values are not conditional medians".into(),
            ));
        }
        Ok(ms)
    }

    /// `α_k f` for `1 ≤ k ≤ K`.
    pub fn alpha(&self, k: usize) -> &Rv {
        &self.alphas[k - 1]
    }

    pub fn is_valid(&self, f: &Rv, filt: &Filtration) -> bool {
        let w = filt.weights();
        (1..=filt.depth()).all(|k| {
            let a = self.alpha(k).values();
            filt.is_measurable(a, k, 0.0)
                && filt.blocks(k).iter().all(|block| {
                    let vals: Vec<f64> = block.iter().map(|&i| f.values()[i]).collect();
                    let ws: Vec<f64> = block.iter().map(|&i| w[i]).collect();
                    is_median(a[block[0]], &vals, &ws)
                })
        })
    }
}

fn check_set(set: &[usize], filt: &Filtration, k: usize) -> Result<()> {
    filt.check_level(k)?;
    if set.iter().any(|&i| i >= filt.len()) {
        return Err(Error::Domain("point index out of range".into()));
    }
    if !filt.is_set_measurable(set, k) {
        return Err(Error::Domain(format!("set is not measurable at level {k}")));
    }
    Ok(())
}

fn indicator_vec(n: usize, pred: impl Fn(usize) -> bool) -> Vec<f64> {
    (0..n).map(|i| if pred(i) { 1.0 } else { 0.0 }).collect()
}

fn members(n: usize, set: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in set {
        m[i] = true;
    }
    m
}

/// `E_k(χ_{A ∩ {f ≤ α_k f}})` and whether it dominates `½ χ_A` pointwise.
pub fn cm_lemma_check(f: &Rv, filt: &Filtration, k: usize, set: &[usize]) -> Result<(Rv, bool)> {
    check_set(set, filt, k)?;
    let alpha = cond_median(f, filt, k)?;
    let inside = members(filt.len(), set);
    let chi = indicator_vec(filt.len(), |i| {
        inside[i] && f.values()[i] <= alpha.values()[i]
    });
    let lhs = filt.average(&chi, k);
    let ok = (0..filt.len()).all(|i| !inside[i] || lhs[i] >= 0.5 - MEDIAN_TOL);
    Ok((filt.rv(lhs)?, ok))
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max{‖E_1 f‖_∞, sup_k ‖E_k|f - α_k f|^{p'}‖_∞^{1/p'}, sup_{k≥2} ‖α_k f - α_{k-1} f‖_∞}`.
pub fn bmo_alpha_norm(f: &Rv, filt: &Filtration, ms: &MedianSequence, pprime: f64) -> Result<f64> {
    if !(pprime >= 1.0) {
        return Err(Error::Domain(format!(
            "exponent {pprime} must be at least 1"
        )));
    }
    let mut best = sup(&filt.average(f.values(), 1));
    for k in 1..=filt.depth() {
        let a = ms.alpha(k).values();
        let dev: Vec<f64> = f
            .values()
            .iter()
            .zip(a)
            .map(|(x, m)| (x - m).abs().powf(pprime))
            .collect();
        best = best.max(sup(&filt.average(&dev, k)).powf(1.0 / pprime));
        if k >= 2 {
            let prev = ms.alpha(k - 1).values();
            best = best.max(
                a.iter()
                    .zip(prev)
                    .fold(0.0, |m, (x, y)| m.max((x - y).abs())),
            );
        }
    }
    Ok(best)
}

/// A block built from a median construction, `b = first - second`, with the
/// bound the construction guarantees for its certified cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MedianBlock {
    pub block: AtomicBlock,
    pub cost: f64,
    pub bound: f64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl MedianBlock {
    pub fn values(&self) -> Vec<f64> {
        self.first
            .iter()
            .zip(&self.second)
            .map(|(a, b)| a - b)
            .collect()
    }
}

/// Smallest admissible subatom level for `set` under a block at `block_level`.
fn atom_level(filt: &Filtration, set: &[usize], block_level: usize) -> usize {
    filt.measurability_level(set)
        .unwrap_or(filt.depth())
        .max(block_level)
}

/// One subatom carrying `piece` on `set` at the smallest admissible level.
fn term_for(
    piece: &[f64],
    set: Vec<usize>,
    block_level: usize,
    filt: &Filtration,
    p: f64,
) -> Option<Term> {
    let norm = filt.space().lp_norm(piece, p);
    if norm == 0.0 {
        return None;
    }
    let level = atom_level(filt, &set, block_level);
    let damping = (level - block_level + 1) as f64;
    let lambda = norm * filt.mass(&set).powf(1.0 / conjugate(p)) * damping;
    let values = piece.iter().map(|v| v / lambda).collect();
    Some(Term {
        lambda,
        atom: Subatom { level, set, values },
    })
}

fn certify(block: AtomicBlock, filt: &Filtration, p: f64) -> Result<f64> {
    Ok(validate_block(&block, filt, BlockRule::hardy(p))?)
}

/// `b = |f - α_k f|^{p'-1} χ_{A∩{f>α_k f}} - [E_k(…) / E_k χ_{A∩{f≤α_k f}}] χ_{A∩{f≤α_k f}}`,
/// mirrored when the mass of `|f - α_k f|^{p'}` below the median dominates.
///
/// Certified as one subatom on `A`; the bound is `(1 + 2^{1/p'}) μ(A)^{1/p'} (∫_A |f - α_k f|^{p'})^{1/p}`.
pub fn build_block_power(
    set: &[usize],
    f: &Rv,
    filt: &Filtration,
    k: usize,
    pprime: f64,
) -> Result<MedianBlock> {
    if set.is_empty() {
        return Err(Error::Domain("empty set".into()));
    }
    if !(pprime >= 1.0 && pprime.is_finite()) {
        return Err(Error::Domain(format!(
            "exponent {pprime} must be finite and at least 1"
        )));
    }
    check_set(set, filt, k)?;
    let n = filt.len();
    let p = conjugate(pprime);
    let alpha = cond_median(f, filt, k)?;
    let inside = members(n, set);
    let d: Vec<f64> = (0..n).map(|i| f.values()[i] - alpha.values()[i]).collect();
    let w = filt.weights();
    let mass_of = |pred: &dyn Fn(f64) -> bool| -> f64 {
        (0..n)
            .filter(|&i| inside[i] && pred(d[i]))
            .map(|i| w[i] * d[i].abs().powf(pprime))
            .sum()
    };
    let mirrored = mass_of(&|x| x < 0.0) > mass_of(&|x| x > 0.0);
    let s = if mirrored { -1.0 } else { 1.0 };
    let top: Vec<f64> = (0..n)
        .map(|i| {
            if inside[i] && s * d[i] > 0.0 {
                d[i].abs().powf(pprime - 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let rest = indicator_vec(n, |i| inside[i] && s * d[i] <= 0.0);
    let num = filt.average(&top, k);
    let den = filt.average(&rest, k);
    let comp: Vec<f64> = (0..n)
        .map(|i| {
            if rest[i] > 0.0 && den[i] > 0.0 {
                num[i] / den[i]
            } else {
                0.0
            }
        })
        .collect();
    let first: Vec<f64> = top.iter().map(|v| s * v).collect();
    let second: Vec<f64> = comp.iter().map(|v| s * v).collect();
    let b: Vec<f64> = first.iter().zip(&second).map(|(a, c)| a - c).collect();
    let block = AtomicBlock::Cancel {
        level: k,
        terms: term_for(&b, set.to_vec(), k, filt, p).into_iter().collect(),
    };
    let cost = certify(block.clone(), filt, p)?;
    let integral: f64 = (0..n)
        .filter(|&i| inside[i])
        .map(|i| w[i] * d[i].abs().powf(pprime))
        .sum();
    let bound = (1.0 + 2f64.powf(1.0 / pprime))
        * filt.mass(set).powf(1.0 / pprime)
        * integral.powf(1.0 / p);
    Ok(MedianBlock {
        block,
        cost,
        bound,
        first,
        second,
    })
}

/// Dyadic slice index `j` with `2^{j-1} < v ≤ 2^j`.
fn dyadic_index(v: f64) -> i32 {
    let j = v.log2().ceil() as i32;
    if v <= 2f64.powi(j - 1) {
        j - 1
    } else if v > 2f64.powi(j) {
        j + 1
    } else {
        j
    }
}

/// `b = g - E_{k-1} g` with `g = |f - α_{k-1} f|^{p'} / (f - α_{k-1} f) χ_A`, the
/// compensator split over the dyadic level sets of `E_{k-1}(|f - α_{k-1} f|^{p'-1} χ_A)`.
///
/// The bound is `4 μ(A)^{1/p'} ‖|f - α_{k-1} f|^{p'-1} χ_A‖_p`.
pub fn build_block_mediandiff(
    set: &[usize],
    f: &Rv,
    filt: &Filtration,
    k: usize,
    pprime: f64,
) -> Result<MedianBlock> {
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    if set.is_empty() {
        return Err(Error::Domain("empty set".into()));
    }
    if !(pprime >= 1.0 && pprime.is_finite()) {
        return Err(Error::Domain(format!(
            "exponent {pprime} must be finite and at least 1"
        )));
    }
    check_set(set, filt, k)?;
    let n = filt.len();
    let p = conjugate(pprime);
    let alpha = cond_median(f, filt, k - 1)?;
    let inside = members(n, set);
    let d: Vec<f64> = (0..n).map(|i| f.values()[i] - alpha.values()[i]).collect();
    let g: Vec<f64> = (0..n)
        .map(|i| {
            if inside[i] && d[i] != 0.0 {
                d[i].signum() * d[i].abs().powf(pprime - 1.0)
            } else {
                0.0
            }
        })
        .collect();
    let eg = filt.average(&g, k - 1);
    let h_in: Vec<f64> = g.iter().map(|v| v.abs()).collect();
    let h = filt.average(&h_in, k - 1);

    let mut terms = Vec::new();
    if filt.space().lp_norm(&g, p) > 0.0 {
        let hull = filt.hull(set, k - 1);
        let damped = term_for(&g, set.to_vec(), k - 1, filt, p);
        let wide = term_for(&g, hull, k - 1, filt, p);
        terms.extend(match (damped, wide) {
            (Some(a), Some(b)) => Some(if b.lambda < a.lambda { b } else { a }),
            (a, b) => a.or(b),
        });
        let mut slices: Vec<(i32, Vec<usize>)> = Vec::new();
        for i in (0..n).filter(|&i| h[i] > 0.0) {
            let j = dyadic_index(h[i]);
            match slices.iter_mut().find(|(jj, _)| *jj == j) {
                Some((_, s)) => s.push(i),
                None => slices.push((j, vec![i])),
            }
        }
        slices.sort_by_key(|(j, _)| *j);
        for (_, slice) in slices {
            let piece: Vec<f64> = (0..n)
                .map(|i| if slice.contains(&i) { -eg[i] } else { 0.0 })
                .collect();
            terms.extend(term_for(&piece, slice, k - 1, filt, p));
        }
    }
    let block = AtomicBlock::Cancel {
        level: k - 1,
        terms,
    };
    let cost = certify(block.clone(), filt, p)?;
    let bound = 4.0 * filt.mass(set).powf(1.0 / pprime) * filt.space().lp_norm(&g, p);
    Ok(MedianBlock {
        block,
        cost,
        bound,
        first: g,
        second: eg,
    })
}

/// `b = b_1 - b_2` with `b_1 = χ_{A∩{f>α_k f}} - χ_{A∩{f<α_k f}}` and `b_2` the
/// compensator carried by the ties `A ∩ {f = α_k f}`.
///
/// Certified as one `∞`-subatom per level-`k` block of `A`; the bound is `μ(A)`.
pub fn build_block_sign(set: &[usize], f: &Rv, filt: &Filtration, k: usize) -> Result<MedianBlock> {
    if set.is_empty() {
        return Err(Error::Domain("empty set".into()));
    }
    check_set(set, filt, k)?;
    let n = filt.len();
    let alpha = cond_median(f, filt, k)?;
    let inside = members(n, set);
    let d: Vec<f64> = (0..n).map(|i| f.values()[i] - alpha.values()[i]).collect();
    let b1: Vec<f64> = (0..n)
        .map(|i| if inside[i] { sgn(d[i]) } else { 0.0 })
        .collect();
    let ties = indicator_vec(n, |i| inside[i] && d[i] == 0.0);
    let num = filt.average(&b1, k);
    let den = filt.average(&ties, k);
    let b2: Vec<f64> = (0..n)
        .map(|i| {
            if ties[i] > 0.0 && den[i] > 0.0 {
                num[i] / den[i]
            } else {
                0.0
            }
        })
        .collect();
    let b: Vec<f64> = b1.iter().zip(&b2).map(|(x, y)| x - y).collect();
    let mut terms = Vec::new();
    for block in filt.blocks(k).iter().filter(|bl| inside[bl[0]]) {
        let piece: Vec<f64> = (0..n)
            .map(|i| if block.contains(&i) { b[i] } else { 0.0 })
            .collect();
        terms.extend(term_for(&piece, block.clone(), k, filt, f64::INFINITY));
    }
    let block = AtomicBlock::Cancel { level: k, terms };
    let cost = certify(block.clone(), filt, f64::INFINITY)?;
    Ok(MedianBlock {
        block,
        cost,
        bound: filt.mass(set),
        first: b1,
        second: b2,
    })
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `b = χ_A - E_{k-1} χ_A` at level `k - 1`, split over the slices
/// `B_j = {(j-1)/N < E_{k-1} χ_A ≤ j/N}`.
///
/// Each slice is certified with the cheaper of one subatom on `B_j`, or the pair
/// `χ_{A∩B_j}` and `E_{k-1}(χ_A) χ_{B_j}`. The reported bound is
/// [`indicator_slice_bound`].
pub fn build_block_indicator(
    set: &[usize],
    filt: &Filtration,
    k: usize,
    slices: usize,
) -> Result<MedianBlock> {
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    if slices == 0 {
        return Err(Error::Domain("slice count must be positive".into()));
    }
    check_set(set, filt, k)?;
    let n = filt.len();
    let chi = filt.indicator(set).into_values();
    let e = filt.average(&chi, k - 1);
    let inf = f64::INFINITY;
    let mut terms = Vec::new();
    for slice in indicator_slices(&e, slices) {
        let piece: Vec<f64> = (0..n)
            .map(|i| {
                if slice.contains(&i) {
                    chi[i] - e[i]
                } else {
                    0.0
                }
            })
            .collect();
        let single = term_for(&piece, slice.clone(), k - 1, filt, inf);
        let top_set: Vec<usize> = slice.iter().copied().filter(|&i| chi[i] > 0.0).collect();
        let top: Vec<f64> = (0..n)
            .map(|i| if top_set.contains(&i) { 1.0 } else { 0.0 })
            .collect();
        let low: Vec<f64> = (0..n)
            .map(|i| if slice.contains(&i) { -e[i] } else { 0.0 })
            .collect();
        let pair: Vec<Term> = [
            term_for(&top, top_set, k - 1, filt, inf),
            term_for(&low, slice, k - 1, filt, inf),
        ]
        .into_iter()
        .flatten()
        .collect();
        let pair_cost: f64 = pair.iter().map(|t| t.lambda).sum();
        match single {
            Some(t) if t.lambda <= pair_cost => terms.push(t),
            None => {}
            Some(_) => terms.extend(pair),
        }
    }
    let block = AtomicBlock::Cancel {
        level: k - 1,
        terms,
    };
    let cost = certify(block.clone(), filt, inf)?;
    let bound = indicator_slice_bound(set, filt, k, slices)?;
    Ok(MedianBlock {
        block,
        cost,
        bound,
        first: chi,
        second: e,
    })
}

fn indicator_slices(e: &[f64], slices: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &v) in e.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        let j = ((v * slices as f64).ceil() as usize).clamp(1, slices);
        match out.iter_mut().find(|(jj, _)| *jj == j) {
            Some((_, s)) => s.push(i),
            None => out.push((j, vec![i])),
        }
    }
    out.sort_by_key(|(j, _)| *j);
    out.into_iter().map(|(_, s)| s).collect()
}

/// `μ(A) + Σ_j ‖E_{k-1}(χ_A) χ_{B_j}‖_∞ μ(B_j)`.
pub fn indicator_slice_bound(
    set: &[usize],
    filt: &Filtration,
    k: usize,
    slices: usize,
) -> Result<f64> {
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    check_set(set, filt, k)?;
    let e = filt.average(&filt.indicator(set).into_values(), k - 1);
    Ok(filt.mass(set)
        + indicator_slices(&e, slices.max(1))
            .iter()
            .map(|s| s.iter().fold(0.0, |m: f64, &i| m.max(e[i])) * filt.mass(s))
            .sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakAtom {
    pub level: usize,
    pub phi: Rv,
    pub set: Vec<usize>,
    pub w: Rv,
}

/// `w = (φ - E_{k-1} φ) / μ(supp φ)` for a level-`k` measurable `φ` with `|φ| ≤ 1`.
pub fn weak_atom(phi: &Rv, filt: &Filtration, k: usize) -> Result<WeakAtom> {
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    filt.check_level(k)?;
    if phi.values().iter().any(|v| v.abs() > 1.0 + 1e-12) {
        return Err(Error::Domain(
            "weak atom symbol exceeds 1 in absolute value".into(),
        ));
    }
    if !filt.is_measurable(phi.values(), k, 1e-12) {
        return Err(Error::Domain(format!(
            "symbol is not measurable at level {k}"
        )));
    }
    let set = phi.support();
    if set.is_empty() {
        return Err(Error::Domain("symbol vanishes identically".into()));
    }
    let mass = filt.mass(&set);
    let prev = filt.average(phi.values(), k - 1);
    let w = phi
        .values()
        .iter()
        .zip(&prev)
        .map(|(a, b)| (a - b) / mass)
        .collect();
    Ok(WeakAtom {
        level: k,
        phi: phi.clone(),
        set,
        w: filt.rv(w)?,
    })
}

/// The two-subatom form `w(ξ) = a_1 + a_2` of a weak atom attached to a block `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSplit {
    pub a1: Rv,
    pub a2: Rv,
    pub w: Rv,
    pub block: AtomicBlock,
    pub cost: f64,
}

/// Splits `w(ξ) = [E_k(χ_A ξ) - E_{k-1}(χ_A ξ)] / μ(A)` into the part on `B \ A`
/// and the part on `A`, where `B` is the level-`(k-1)` block containing `A`.
pub fn weak_atom_split(xi: &Rv, set: &[usize], filt: &Filtration, k: usize) -> Result<WeakSplit> {
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    filt.check_level(k)?;
    if xi.values().iter().any(|v| v.abs() > 1.0 + 1e-12) {
        return Err(Error::Domain("ξ exceeds 1 in absolute value".into()));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    let Some(first) = sorted.first() else {
        return Err(Error::Domain("empty set".into()));
    };
    if filt.block_containing(k, *first) != sorted.as_slice() {
        return Err(Error::Domain(format!("set is not a block of level {k}")));
    }
    let n = filt.len();
    let a_mass = filt.mass(&sorted);
    let parent = filt.block_containing(k - 1, *first).to_vec();
    let in_a = members(n, &sorted);
    let in_b = members(n, &parent);
    let w_pts = filt.weights();
    let c = sorted
        .iter()
        .map(|&i| w_pts[i] * xi.values()[i])
        .sum::<f64>()
        / filt.mass(&parent);
    let ek = filt.average(xi.values(), k);
    let a1: Vec<f64> = (0..n)
        .map(|i| {
            if in_b[i] && !in_a[i] {
                -c / a_mass
            } else {
                0.0
            }
        })
        .collect();
    let a2: Vec<f64> = (0..n)
        .map(|i| if in_a[i] { (ek[i] - c) / a_mass } else { 0.0 })
        .collect();
    let chi_xi: Vec<f64> = (0..n)
        .map(|i| if in_a[i] { xi.values()[i] } else { 0.0 })
        .collect();
    let cur = filt.average(&chi_xi, k);
    let prev = filt.average(&chi_xi, k - 1);
    let w: Vec<f64> = cur
        .iter()
        .zip(&prev)
        .map(|(x, y)| (x - y) / a_mass)
        .collect();

    let inf = f64::INFINITY;
    let rest: Vec<usize> = parent.iter().copied().filter(|&i| !in_a[i]).collect();
    let mut terms = Vec::new();
    for (piece, tight) in [(&a1, rest), (&a2, sorted.clone())] {
        if tight.is_empty() {
            continue;
        }
        let narrow = term_for(piece, tight, k - 1, filt, inf);
        let wide = term_for(piece, parent.clone(), k - 1, filt, inf);
        terms.extend(match (narrow, wide) {
            (Some(a), Some(b)) => Some(if b.lambda < a.lambda { b } else { a }),
            (a, b) => a.or(b),
        });
    }
    let block = AtomicBlock::Cancel {
        level: k - 1,
        terms,
    };
    let cost = certify(block.clone(), filt, inf)?;
    Ok(WeakSplit {
        a1: filt.rv(a1)?,
        a2: filt.rv(a2)?,
        w: filt.rv(w)?,
        block,
        cost,
    })
}
