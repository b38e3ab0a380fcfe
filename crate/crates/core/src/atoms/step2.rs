use super::{AtomicBlock, Subatom, Term};
use crate::error::{Error, Result};
use crate::prob::Filtration;

/// Index `j ≥ 1` with `v ∈ (1/(j+1), 1/j]`.
pub(crate) fn slice_index(v: f64) -> usize {
    ((1.0 / v).floor() as usize).max(1)
}

/// Groups the points where `v > 0` by their level-set index.
fn level_sets(v: &[f64]) -> Vec<(usize, Vec<usize>)> {
    let mut sets: Vec<(usize, Vec<usize>)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let j = slice_index(x);
        match sets.iter_mut().find(|(jj, _)| *jj == j) {
            Some((_, s)) => s.push(i),
            None => sets.push((j, vec![i])),
        }
    }
    sets.sort_by_key(|(j, _)| *j);
    sets
}

/// Block at level `k - 1` representing `Δ_k(χ_{A0})`, built from the level sets
/// of `E_k χ_{A0}` and `E_{k-1} χ_{A0}`.
///
/// Every subatom meets its `∞`-bound, so the block is valid for every `p`.
pub fn decompose_delta_indicator(a0: &[usize], filt: &Filtration, k: usize) -> Result<AtomicBlock> {
    if a0.is_empty() {
        return Err(Error::Domain("empty set".into()));
    }
    if a0.iter().any(|&i| i >= filt.len()) {
        return Err(Error::DimensionMismatch {
            expected: filt.len(),
            got: a0.len(),
        });
    }
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    filt.check_level(k)?;
    let chi = filt.indicator(a0).into_values();
    let cur = filt.average(&chi, k);
    let prev = filt.average(&chi, k - 1);
    if cur.iter().zip(&prev).all(|(a, b)| (a - b).abs() <= 1e-12) {
        return Ok(AtomicBlock::empty(k - 1));
    }
    let n = filt.len();
    let mut terms = Vec::new();
    for (level, v, weight, sign) in [(k, &cur, 2.0, 1.0), (k - 1, &prev, 1.0, -1.0)] {
        for (j, set) in level_sets(v) {
            let lambda = weight / j as f64 * filt.mass(&set);
            let mut values = vec![0.0; n];
            for &i in &set {
                values[i] = v[i] / lambda;
            }
            terms.push(Term {
                lambda: sign * lambda,
                atom: Subatom { level, set, values },
            });
        }
    }
    Ok(AtomicBlock::Cancel {
        level: k - 1,
        terms,
    })
}

/// Block at level `k - 1` representing a level-`k` measurable `d` with `E_{k-1} d = 0`,
/// expanded as `Σ_B β_B Δ_k(χ_B)` over the level-`k` blocks.
pub fn decompose_delta_function(d: &[f64], filt: &Filtration, k: usize) -> Result<AtomicBlock> {
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    filt.check_level(k)?;
    let mut terms = Vec::new();
    for block in filt.blocks(k) {
        let beta = d[block[0]];
        if beta == 0.0 {
            continue;
        }
        if let AtomicBlock::Cancel { terms: ts, .. } = decompose_delta_indicator(block, filt, k)? {
            terms.extend(ts.into_iter().map(|t| Term {
                lambda: beta * t.lambda,
                atom: t.atom,
            }));
        }
    }
    Ok(AtomicBlock::Cancel {
        level: k - 1,
        terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{validate_block, BlockRule};
    use crate::prob::omega4;

    #[test]
    fn slices_are_half_open() {
        assert_eq!(slice_index(1.0), 1);
        assert_eq!(slice_index(0.5), 2);
        assert_eq!(slice_index(0.26), 3);
        assert_eq!(slice_index(0.25), 4);
    }

    #[test]
    fn fixture_block() {
        let f4 = omega4();
        let b = decompose_delta_indicator(&[0], &f4, 2).unwrap();
        let vals = b.values(4);
        for (v, e) in vals.iter().zip([0.25, 0.25, -0.25, -0.25]) {
            assert!((v - e).abs() < 1e-15);
        }
        let cost = validate_block(&b, &f4, BlockRule::hardy(f64::INFINITY)).unwrap();
        assert!((cost - 0.75).abs() < 1e-15);
        let AtomicBlock::Cancel { level, terms } = &b else {
            panic!()
        };
        assert_eq!(*level, 1);
        assert_eq!(terms.len(), 2);
        assert_eq!(terms[0].atom.set, vec![0, 1]);
        assert!((terms[0].lambda - 0.5).abs() < 1e-15);
        assert_eq!(terms[0].atom.values, vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(terms[1].atom.set, vec![0, 1, 2, 3]);
        assert!((terms[1].lambda + 0.25).abs() < 1e-15);
        assert_eq!(terms[1].atom.values, vec![1.0; 4]);
    }

    #[test]
    fn trivial_cases() {
        let f4 = omega4();
        assert_eq!(
            decompose_delta_indicator(&[0, 1], &f4, 3)
                .unwrap()
                .lambda_mass(),
            0.0
        );
        assert_eq!(
            decompose_delta_indicator(&[0, 1, 2, 3], &f4, 3)
                .unwrap()
                .lambda_mass(),
            0.0
        );
        assert!(decompose_delta_indicator(&[], &f4, 2).is_err());
        assert!(decompose_delta_indicator(&[0], &f4, 1).is_err());
    }
}
