//! Random instances: filtrations, sets, functions, blocks, and their matrix
//! counterparts.

use nalgebra::Complex;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::atoms::{AtomicBlock, Subatom, Term};
use crate::error::{Error, Result};
use crate::nc::{eigen_clusters, schatten_norm, tau, NCBlock, NCFiltration, NCLevel, NCTerm, Op};
use crate::norms::conjugate;
use crate::prob::{Filtration, Rv, WeightedSpace};

pub const MAX_POINTS: usize = 64;
pub const MAX_DEPTH: usize = 6;
pub const MAX_DIM: usize = 8;

/// Weights drawn from a flat Dirichlet distribution.
pub fn gen_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1) + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// A refining chain starting from the trivial partition, each level splitting
/// blocks at random.
pub fn gen_filtration<R: Rng + ?Sized>(
    rng: &mut R,
    points: usize,
    depth: usize,
) -> Result<Filtration> {
    if points == 0 || depth == 0 || points > MAX_POINTS || depth > MAX_DEPTH {
        return Err(Error::Config(format!(
            "need 1 <= points <= {MAX_POINTS} and 1 <= depth <= {MAX_DEPTH}; got points={points}, depth={depth}"
        )));
    }
    let mut levels = vec![vec![0usize; points]];
    for _ in 1..depth {
        let prev = levels.last().unwrap();
        let count = prev.iter().max().unwrap() + 1;
        let mut next = vec![0usize; points];
        let mut id = 0;
        for b in 0..count {
            let mut members: Vec<usize> = (0..points).filter(|&i| prev[i] == b).collect();
            let parts = if members.len() >= 2 && rng.random_bool(0.75) {
                rng.random_range(2..=members.len().min(3))
            } else {
                1
            };
            members.shuffle(rng);
            for (t, &i) in members.iter().enumerate() {
                next[i] = id
                    + if t < parts {
                        t
                    } else {
                        rng.random_range(0..parts)
                    };
            }
            id += parts;
        }
        levels.push(next);
    }
    Filtration::new(WeightedSpace::new(gen_weights(rng, points))?, levels)
}

/// Nonempty union of level-`k` blocks.
pub fn gen_measurable_set<R: Rng + ?Sized>(rng: &mut R, filt: &Filtration, k: usize) -> Vec<usize> {
    let blocks = filt.blocks(k);
    let mut pick: Vec<bool> = (0..blocks.len()).map(|_| rng.random_bool(0.5)).collect();
    if !pick.contains(&true) {
        pick[rng.random_range(0..blocks.len())] = true;
    }
    let mut set: Vec<usize> = blocks
        .iter()
        .zip(&pick)
        .filter(|(_, &p)| p)
        .flat_map(|(b, _)| b.iter().copied())
        .collect();
    set.sort_unstable();
    set
}

/// Nonempty subset of the points.
pub fn gen_set<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<usize> {
    let density = rng.random_range(0.1..0.9);
    let mut set: Vec<usize> = (0..n).filter(|_| rng.random_bool(density)).collect();
    if set.is_empty() {
        set.push(rng.random_range(0..n));
    }
    set
}

/// Gaussian values, small integers (many ties), or a sparse spike pattern.
pub fn gen_values<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    match rng.random_range(0..3) {
        0 => (0..n)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
        1 => (0..n).map(|_| rng.random_range(-3i32..=3) as f64).collect(),
        _ => (0..n)
            .map(|_| {
                if rng.random_bool(0.2) {
                    4.0 * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

pub fn gen_rv<R: Rng + ?Sized>(rng: &mut R, filt: &Filtration) -> Rv {
    filt.rv(gen_values(rng, filt.len()))
        .expect("length matches")
}

/// Values in `[-1, 1]` measurable at level `k`.
pub fn gen_unit_measurable<R: Rng + ?Sized>(rng: &mut R, filt: &Filtration, k: usize) -> Rv {
    let mut v = vec![0.0; filt.len()];
    for b in filt.blocks(k) {
        let x = if rng.random_bool(0.3) {
            rng.random_range(-1i32..=1) as f64
        } else {
            rng.random_range(-1.0..=1.0)
        };
        for &i in b {
            v[i] = x;
        }
    }
    filt.rv(v).expect("length matches")
}

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        -1.0
    }
}

/// A random valid `p`-block: mostly cancelling blocks with a compensating
/// subatom on the whole space, sometimes a first-level block.
pub fn gen_block<R: Rng + ?Sized>(rng: &mut R, filt: &Filtration, p: f64) -> AtomicBlock {
    let n = filt.len();
    let depth = filt.depth();
    if rng.random_bool(0.15) {
        let raw = gen_values(rng, n);
        return AtomicBlock::FirstLevel {
            values: filt.average(&raw, 1),
        };
    }
    let pp = conjugate(p);
    let k = rng.random_range(1..=depth);
    let mut terms = Vec::new();
    let mut sum = vec![0.0; n];
    for _ in 0..rng.random_range(1..=5) {
        let level = rng.random_range(k..=depth);
        let set = gen_measurable_set(rng, filt, level);
        let mut values = vec![0.0; n];
        for &i in &set {
            values[i] = rng.sample::<f64, _>(StandardNormal);
        }
        let norm = filt.space().lp_norm(&values, p);
        if norm == 0.0 {
            continue;
        }
        let bound = filt.mass(&set).powf(-1.0 / pp) / (level - k + 1) as f64;
        let s = rng.random_range(0.2..=1.0) * bound / norm;
        values.iter_mut().for_each(|v| *v *= s);
        let lambda = random_sign(rng) * rng.sample::<f64, _>(Exp1);
        for (acc, v) in sum.iter_mut().zip(&values) {
            *acc += lambda * v;
        }
        terms.push(Term {
            lambda,
            atom: Subatom { level, set, values },
        });
    }
    let e = filt.average(&sum, k);
    let en = filt.space().lp_norm(&e, p);
    if en > 0.0 {
        terms.push(Term {
            lambda: en,
            atom: Subatom {
                level: k,
                set: (0..n).collect(),
                values: e.iter().map(|v| -v / en).collect(),
            },
        });
    }
    AtomicBlock::Cancel { level: k, terms }
}

fn gaussian_op<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Op {
    Op::from_fn(n, n, |_, _| {
        Complex::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

/// A random complex matrix.
pub fn gen_op<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Op {
    gaussian_op(rng, n)
}

pub fn gen_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Op {
    let g = gaussian_op(rng, n);
    (&g + g.adjoint()) * Complex::new(0.5, 0.0)
}

/// Unitary factor of a complex Gaussian matrix.
pub fn gen_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Op {
    gaussian_op(rng, n).qr().q()
}

/// Orthogonal projection onto a random `rank`-dimensional subspace.
pub fn gen_projection<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> Op {
    let u = gen_unitary(rng, n);
    let v = u.columns(0, rank.min(n));
    v * v.adjoint()
}

fn basis_projection(u: &Op, set: &[usize]) -> Op {
    let n = u.nrows();
    let mut p = Op::zeros(n, n);
    for &i in set {
        let v = u.column(i);
        p += v * v.adjoint();
    }
    p
}

/// Splits one random block of size at least two.
fn refine<R: Rng + ?Sized>(rng: &mut R, part: &[Vec<usize>]) -> Option<Vec<Vec<usize>>> {
    let splittable: Vec<usize> = (0..part.len()).filter(|&i| part[i].len() >= 2).collect();
    let &b = splittable.get(rng.random_range(0..splittable.len().max(1)))?;
    let mut members = part[b].clone();
    members.shuffle(rng);
    let cut = rng.random_range(1..members.len());
    let mut out: Vec<Vec<usize>> = part
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != b)
        .map(|(_, s)| s.clone())
        .collect();
    out.push(members[..cut].to_vec());
    out.push(members[cut..].to_vec());
    Some(out)
}

/// Merges two random blocks.
fn coarsen<R: Rng + ?Sized>(rng: &mut R, part: &[Vec<usize>]) -> Option<Vec<Vec<usize>>> {
    if part.len() < 2 {
        return None;
    }
    let mut out = part.to_vec();
    out.shuffle(rng);
    let last = out.pop()?;
    out[0].extend(last);
    Some(out)
}

/// A random matrix filtration of `M_n` with scalars at level 1: either a chain
/// of partial traces, or commutative levels followed by pinchings in a random basis.
pub fn gen_nc_filtration<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    max_depth: usize,
) -> Result<NCFiltration> {
    if n == 0 || n > MAX_DIM || !(2..=MAX_DEPTH).contains(&max_depth) {
        return Err(Error::Config(format!(
            "need 1 <= dim <= {MAX_DIM} and 2 <= depth <= {MAX_DEPTH}; got dim={n}, depth={max_depth}"
        )));
    }
    let mut levels = vec![NCLevel::TensorTrace { a: 1, b: n }];
    let divisors: Vec<usize> = (2..n).filter(|d| n.is_multiple_of(*d)).collect();
    if !divisors.is_empty() && rng.random_bool(0.4) {
        let mut a = 1;
        while a < n && levels.len() < max_depth {
            let choices: Vec<usize> = (2..=n / a).filter(|d| (n / a).is_multiple_of(*d)).collect();
            a *= choices[rng.random_range(0..choices.len())];
            levels.push(NCLevel::TensorTrace { a, b: n / a });
        }
    } else {
        let u = gen_unitary(rng, n);
        let proj = |part: &[Vec<usize>]| {
            part.iter()
                .map(|s| basis_projection(&u, s))
                .collect::<Vec<_>>()
        };
        let mut part = vec![(0..n).collect::<Vec<_>>()];
        for _ in 0..rng.random_range(0..=2usize) {
            if levels.len() + 1 >= max_depth {
                break;
            }
            match refine(rng, &part) {
                Some(p) => {
                    part = p;
                    levels.push(NCLevel::Abelian {
                        projections: proj(&part),
                    });
                }
                None => break,
            }
        }
        let mut pinch: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        while levels.len() < max_depth {
            levels.push(NCLevel::Pinch {
                projections: proj(&pinch),
            });
            match coarsen(rng, &pinch) {
                Some(p) if rng.random_bool(0.8) => pinch = p,
                _ => break,
            }
        }
    }
    NCFiltration::new(n, levels)
}

/// A random nonzero spectral projection of a random element of `M_k`.
pub fn gen_level_projection<R: Rng + ?Sized>(rng: &mut R, filt: &NCFiltration, k: usize) -> Op {
    let h = filt.cond_exp(&gen_hermitian(rng, filt.dim()), k);
    let clusters = eigen_clusters(&h).expect("conditional expectations preserve adjoints");
    let mut pick: Vec<bool> = clusters.iter().map(|_| rng.random_bool(0.5)).collect();
    if !pick.contains(&true) {
        let i = rng.random_range(0..pick.len());
        pick[i] = true;
    }
    let n = filt.dim();
    let mut q = Op::zeros(n, n);
    for ((_, proj), take) in clusters.into_iter().zip(pick) {
        if take {
            q += proj;
        }
    }
    q
}

/// A random valid column `p`-block, built like [`gen_block`].
pub fn gen_nc_block<R: Rng + ?Sized>(
    rng: &mut R,
    filt: &NCFiltration,
    p: f64,
    first_level: bool,
) -> NCBlock {
    let n = filt.dim();
    let depth = filt.depth();
    if first_level && rng.random_bool(0.15) {
        return NCBlock::FirstLevel {
            value: filt.cond_exp(&gen_op(rng, n), 1),
        };
    }
    let pp = conjugate(p);
    let k = rng.random_range(1..=depth);
    let mut terms = Vec::new();
    let mut sum = Op::zeros(n, n);
    for _ in 0..rng.random_range(1..=6) {
        let level = rng.random_range(k..=depth);
        let proj = gen_level_projection(rng, filt, level);
        let raw = gen_op(rng, n) * &proj;
        let norm = schatten_norm(&raw, p);
        if norm == 0.0 {
            continue;
        }
        let bound = tau(&proj).re.powf(-1.0 / pp) / (level - k + 1) as f64;
        let atom = raw * Complex::new(rng.random_range(0.2..=1.0) * bound / norm, 0.0);
        let lambda = random_sign(rng) * rng.sample::<f64, _>(Exp1);
        sum += &atom * Complex::new(lambda, 0.0);
        terms.push(NCTerm {
            lambda,
            level,
            proj,
            atom,
        });
    }
    let e = filt.cond_exp(&sum, k);
    let en = schatten_norm(&e, p);
    if en > 0.0 {
        terms.push(NCTerm {
            lambda: en,
            level: k,
            proj: Op::identity(n, n),
            atom: e * Complex::new(-1.0 / en, 0.0),
        });
    }
    NCBlock::Cancel { level: k, terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{validate_block, BlockRule};
    use crate::nc::validate_nc_block;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = gen_filtration(&mut rng, 4, 3).unwrap();
        assert_eq!(f.depth(), 3);
        let one = gen_filtration(&mut rng, 1, 1).unwrap();
        assert_eq!(one.blocks(1).len(), 1);
        assert!(gen_filtration(&mut rng, 65, 2).is_err());
        for _ in 0..50 {
            let n = rng.random_range(1..=20);
            let d = rng.random_range(1..=n.min(6));
            let f = gen_filtration(&mut rng, n, d).unwrap();
            for p in [2.0, 3.0, f64::INFINITY] {
                let b = gen_block(&mut rng, &f, p);
                validate_block(&b, &f, BlockRule::hardy(p)).unwrap();
            }
        }
        for _ in 0..30 {
            let n = rng.random_range(1..=8);
            let d = rng.random_range(2..=6);
            let nc = gen_nc_filtration(&mut rng, n, d).unwrap();
            for p in [2.0, f64::INFINITY] {
                let b = gen_nc_block(&mut rng, &nc, p, true);
                validate_nc_block(&b, &nc, p).unwrap();
            }
        }
    }
}
