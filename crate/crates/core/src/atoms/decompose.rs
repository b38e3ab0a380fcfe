use super::step2::decompose_delta_function;
use super::{AtomicBlock, DecompositionReport, PAtom, Subatom, Term};
use crate::error::Result;
use crate::norms::conjugate;
use crate::prob::{Filtration, MartingaleView, Rv};

/// Splits `f = g + h` where `h` collects the large jumps:
/// `dh_k = u_k - E_{k-1} u_k` with `u_k = df_k 1{|df_k| > 2 max_{j<k} |df_j|}` for `k ≥ 2`.
pub fn davis_split(f: &Rv, filt: &Filtration) -> Result<(Rv, Rv)> {
    let view = MartingaleView::new(f.clone(), filt)?;
    let n = filt.len();
    let mut running = view.diff(1).abs().into_values();
    let mut h = vec![0.0; n];
    for k in 2..=filt.depth() {
        let d = view.diff(k).values();
        let u: Vec<f64> = (0..n)
            .map(|i| {
                if d[i].abs() > 2.0 * running[i] {
                    d[i]
                } else {
                    0.0
                }
            })
            .collect();
        let eu = filt.average(&u, k - 1);
        for i in 0..n {
            h[i] += u[i] - eu[i];
            running[i] = running[i].max(d[i].abs());
        }
    }
    let h = filt.rv(h)?;
    Ok((f - &h, h))
}

/// A weighted list of atoms `Σ λ_j a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSum {
    pub terms: Vec<(f64, PAtom)>,
}

impl AtomSum {
    pub fn coefficient_mass(&self) -> f64 {
        self.terms.iter().fold(0.0, |s, (l, _)| s + l.abs())
    }

    pub fn values(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (l, a) in &self.terms {
            for (o, v) in out.iter_mut().zip(&a.values) {
                *o += l * v;
            }
        }
        out
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Splits a level-`k` cancelling piece over the level-`k` blocks it meets and
/// normalizes each part into a `p`-atom.
fn push_blockwise(out: &mut Vec<(f64, PAtom)>, piece: &[f64], k: usize, filt: &Filtration, p: f64) {
    let scale = max_abs(piece);
    if scale == 0.0 {
        return;
    }
    let pp = conjugate(p);
    for block in filt.blocks(k) {
        if block.iter().all(|&i| piece[i].abs() <= 1e-15 * scale) {
            continue;
        }
        let mut values = vec![0.0; piece.len()];
        for &i in block {
            values[i] = piece[i];
        }
        let lambda = filt.space().lp_norm(&values, p) * filt.mass(block).powf(1.0 / pp);
        if lambda == 0.0 {
            continue;
        }
        values.iter_mut().for_each(|v| *v /= lambda);
        out.push((
            lambda,
            PAtom {
                level: k,
                set: block.clone(),
                values,
            },
        ));
    }
}

/// Stopping-time decomposition of `g` into `2`-atoms.
///
/// The first-level part `E_1 g` becomes a first-level atom. The remaining
/// martingale is cut at the stopping times `ν_m = min{k : S_k > 2^m}` where
/// `S_k² = Σ_{2 ≤ j ≤ k+1} E_{j-1}|dg_j|²`, each stopped increment split over the
/// blocks of `{ν_m = k}`. The part of `g` beyond the last level is cut into
/// last-level atoms. If `g` cancels at some level, the cheaper of this and a
/// direct blockwise split at the deepest cancelling level is returned.
pub fn h1_atomic_decompose(g: &Rv, filt: &Filtration) -> Result<AtomSum> {
    let n = filt.len();
    let depth = filt.depth();
    let mut terms = Vec::new();
    let first = filt.average(g.values(), 1);
    let l1 = filt.space().lp_norm(&first, 1.0);
    if l1 > 0.0 {
        let values = first.iter().map(|v| v / l1).collect();
        terms.push((
            l1,
            PAtom {
                level: 1,
                set: (0..n).collect(),
                values,
            },
        ));
    }

    let view = MartingaleView::new(g.clone(), filt)?;
    // s2[k] for k = 1..=depth holds the predictable square function at step k.
    let mut s2 = vec![vec![0.0; n]; depth + 1];
    for k in 1..=depth {
        let mut acc = s2[k - 1].clone();
        if k < depth {
            let sq: Vec<f64> = view.diff(k + 1).values().iter().map(|v| v * v).collect();
            for (a, v) in acc.iter_mut().zip(filt.average(&sq, k)) {
                *a += v;
            }
        }
        s2[k] = acc;
    }
    let s: Vec<Vec<f64>> = s2
        .iter()
        .map(|r| r.iter().map(|v| v.sqrt()).collect())
        .collect();
    let positive = s[1..].iter().flatten().copied().filter(|v| *v > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    if hi > 0.0 {
        let m0 = lo.log2().floor() as i64 - 1;
        let m1 = hi.log2().ceil() as i64 + 1;
        // nu[i] = first k with S_k(i) > 2^m, or depth when never exceeded.
        let stop = |m: i64| -> Vec<usize> {
            let t = (m as f64).exp2();
            (0..n)
                .map(|i| (1..=depth).find(|&k| s[k][i] > t).unwrap_or(depth))
                .collect()
        };
        let mut nu_lo = stop(m0);
        for m in m0..m1 {
            let nu_hi = stop(m + 1);
            for k in 1..depth {
                let mut piece = vec![0.0; n];
                for i in 0..n {
                    if nu_lo[i] != k {
                        continue;
                    }
                    for j in k + 1..=nu_hi[i] {
                        piece[i] += view.diff(j).values()[i];
                    }
                }
                push_blockwise(&mut terms, &piece, k, filt, 2.0);
            }
            nu_lo = nu_hi;
        }
    }
    let last = filt.average(g.values(), depth);
    let tail: Vec<f64> = g.values().iter().zip(&last).map(|(a, b)| a - b).collect();
    push_blockwise(&mut terms, &tail, depth, filt, 2.0);
    let staged = AtomSum { terms };

    if l1 == 0.0 {
        let scale = max_abs(g.values());
        let deepest = (1..=depth)
            .rev()
            .find(|&k| max_abs(&filt.average(g.values(), k)) <= 1e-12 * scale.max(1e-300));
        if let Some(k) = deepest {
            let mut direct = Vec::new();
            push_blockwise(&mut direct, g.values(), k, filt, 2.0);
            let direct = AtomSum { terms: direct };
            if direct.coefficient_mass() < staged.coefficient_mass() {
                return Ok(direct);
            }
        }
    }
    Ok(staged)
}

/// Recertifies a `2`-atom term as a one-subatom `p`-block.
fn atom_block(lambda: f64, atom: &PAtom, filt: &Filtration, p: f64) -> AtomicBlock {
    let piece: Vec<f64> = atom.values.iter().map(|v| lambda * v).collect();
    let cancels = max_abs(&filt.average(&piece, atom.level)) <= 1e-12 * max_abs(&piece).max(1e-300);
    if !cancels {
        return AtomicBlock::FirstLevel { values: piece };
    }
    let l = filt.space().lp_norm(&piece, p) * filt.mass(&atom.set).powf(1.0 / conjugate(p));
    let values = piece.iter().map(|v| v / l).collect();
    AtomicBlock::Cancel {
        level: atom.level,
        terms: vec![Term {
            lambda: l,
            atom: Subatom {
                level: atom.level,
                set: atom.set.clone(),
                values,
            },
        }],
    }
}

/// Certified atomic-block decomposition of `f` for subatom exponent `p`.
///
/// The small-jump part of the Davis split goes through [`h1_atomic_decompose`];
/// each large-jump difference `dh_k` becomes one level-`(k-1)` block built from
/// the indicator expansion of its level sets. The atomic decomposition of `f`
/// itself is certified as well and the cheaper of the two is returned.
pub fn decompose_h1_to_blocks(f: &Rv, filt: &Filtration, p: f64) -> Result<DecompositionReport> {
    crate::norms::NormParams::new(p)?;
    let split = DecompositionReport::certify(f, davis_blocks(f, filt, p)?, filt, p)?;
    let atoms: Vec<AtomicBlock> = h1_atomic_decompose(f, filt)?
        .terms
        .iter()
        .map(|(l, a)| atom_block(*l, a, filt, p))
        .collect();
    let direct = DecompositionReport::certify(f, atoms, filt, p)?;
    Ok(if direct.cost < split.cost {
        direct
    } else {
        split
    })
}

fn davis_blocks(f: &Rv, filt: &Filtration, p: f64) -> Result<Vec<AtomicBlock>> {
    let (g, h) = davis_split(f, filt)?;
    let mut blocks = Vec::new();
    for (lambda, atom) in h1_atomic_decompose(&g, filt)?.terms {
        blocks.push(atom_block(lambda, &atom, filt, p));
    }
    let view = MartingaleView::new(h, filt)?;
    for k in 2..=filt.depth() {
        let d = view.diff(k).values();
        if max_abs(d) == 0.0 {
            continue;
        }
        let block = decompose_delta_function(d, filt, k)?;
        if block.lambda_mass() > 0.0 {
            blocks.push(block);
        }
    }
    Ok(blocks)
}
