use microlp::{ComparisonOp, OptimizationDirection, Problem, SolveOutcome, Variable};
use nalgebra::{DMatrix, DVector};

use super::{AtomicBlock, DecompositionReport, Subatom, Term};
use crate::error::{Error, Result};
use crate::prob::{Filtration, Rv};

pub const LP_MAX_POINTS: usize = 8;

/// Exact gauge value together with an optimal certified decomposition.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub report: DecompositionReport,
}

struct Column {
    block_level: usize,
    atom_level: usize,
    set: Vec<usize>,
    values: Vec<f64>,
    var: Variable,
}

/// Exact `p = ∞` atomic-block gauge of `f` on at most [`LP_MAX_POINTS`] points.
pub fn atb_norm_lp(f: &Rv, filt: &Filtration) -> Result<f64> {
    Ok(atb_norm_lp_with_certificate(f, filt)?.value)
}

/// Solves the gauge linear program.
///
/// For every cancellation level `k` and every nonempty set `A` measurable at the
/// last level, the extreme `∞`-subatoms on `A` are the sign patterns scaled to
/// `μ(A)^{-1} / (k_A - k + 1)` with `k_A` the smallest admissible level; larger
/// levels only shrink the scale. The first-level part is split into positive
/// and negative parts per first-level block.
pub fn atb_norm_lp_with_certificate(f: &Rv, filt: &Filtration) -> Result<LpSolution> {
    let n = filt.len();
    if n > LP_MAX_POINTS {
        return Err(Error::Size(format!(
            "{n} points exceeds the LP limit of {LP_MAX_POINTS}"
        )));
    }
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let depth = filt.depth();
    let w = filt.weights();
    let last = filt.blocks(depth);
    let mut lp = Problem::new(OptimizationDirection::Minimize);

    let first: Vec<(usize, Variable, Variable)> = filt
        .block_masses(1)
        .iter()
        .enumerate()
        .map(|(b, &m)| {
            (
                b,
                lp.add_var(m, (0.0, f64::INFINITY)),
                lp.add_var(m, (0.0, f64::INFINITY)),
            )
        })
        .collect();

    let mut columns = Vec::new();
    for mask in 1usize..(1 << last.len()) {
        let mut set: Vec<usize> = (0..last.len())
            .filter(|b| mask & (1 << b) != 0)
            .flat_map(|b| last[b].iter().copied())
            .collect();
        set.sort_unstable();
        let m_level = filt.measurability_level(&set).unwrap_or(depth);
        let mass = filt.mass(&set);
        for k in 1..=depth {
            let atom_level = k.max(m_level);
            let scale = 1.0 / (mass * (atom_level - k + 1) as f64);
            for signs in 0usize..(1 << set.len()) {
                let mut values = vec![0.0; n];
                for (t, &i) in set.iter().enumerate() {
                    values[i] = if signs & (1 << t) != 0 { -scale } else { scale };
                }
                let var = lp.add_var(1.0, (0.0, f64::INFINITY));
                columns.push(Column {
                    block_level: k,
                    atom_level,
                    set: set.clone(),
                    values,
                    var,
                });
            }
        }
    }

    // Equality rows over (first-level variables, then columns), kept for polishing.
    let nf = 2 * first.len();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    for i in 0..n {
        let b = filt.block_of(1, i);
        let mut row = vec![(2 * b, 1.0), (2 * b + 1, -1.0)];
        row.extend(
            columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.values[i] != 0.0)
                .map(|(j, c)| (nf + j, c.values[i])),
        );
        rows.push((row, f.values()[i]));
    }
    for k in 1..=depth {
        for block in filt.blocks(k) {
            let row: Vec<(usize, f64)> = columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.block_level == k)
                .filter_map(|(j, c)| {
                    let s: f64 = block.iter().map(|&i| w[i] * c.values[i]).sum();
                    (s != 0.0).then_some((nf + j, s))
                })
                .collect();
            if !row.is_empty() {
                rows.push((row, 0.0));
            }
        }
    }
    let var = |idx: usize| -> Variable {
        if idx < nf {
            if idx.is_multiple_of(2) {
                first[idx / 2].1
            } else {
                first[idx / 2].2
            }
        } else {
            columns[idx - nf].var
        }
    };
    for (row, rhs) in &rows {
        lp.add_constraint(
            row.iter().map(|&(j, a)| (var(j), a)).collect::<Vec<_>>(),
            ComparisonOp::Eq,
            *rhs,
        );
    }

    let solution = match lp.solve() {
        Ok(SolveOutcome::Solution(s)) => s,
        Ok(_) => return Err(Error::Solver("interrupted".into())),
        Err(e) => return Err(Error::Solver(e.to_string())),
    };
    let mut x: Vec<f64> = (0..nf + columns.len()).map(|j| solution[var(j)]).collect();
    polish(&mut x, &rows);
    let masses = filt.block_masses(1);
    let value = (0..nf).map(|j| masses[j / 2] * x[j]).sum::<f64>() + x[nf..].iter().sum::<f64>();

    let mut first_values = vec![0.0; n];
    for i in 0..n {
        let b = filt.block_of(1, i);
        first_values[i] = x[2 * b] - x[2 * b + 1];
    }
    let mut blocks = Vec::new();
    if first_values.iter().any(|v| v.abs() > 1e-12) {
        blocks.push(AtomicBlock::FirstLevel {
            values: first_values,
        });
    }
    for k in 1..=depth {
        let terms: Vec<Term> = columns
            .iter()
            .enumerate()
            .filter(|(j, c)| c.block_level == k && x[nf + j] > 0.0)
            .map(|(j, c)| Term {
                lambda: x[nf + j],
                atom: Subatom {
                    level: c.atom_level,
                    set: c.set.clone(),
                    values: c.values.clone(),
                },
            })
            .collect();
        if !terms.is_empty() {
            blocks.push(AtomicBlock::Cancel { level: k, terms });
        }
    }
    let report = DecompositionReport::certify(f, blocks, filt, f64::INFINITY)?;
    Ok(LpSolution { value, report })
}

/// Re-solves the equality rows on the support of `x` by least squares, which
/// recovers the simplex vertex to working precision. Small entries are dropped
/// and the refined point is kept only if it stays nonnegative and fits better.
fn polish(x: &mut [f64], rows: &[(Vec<(usize, f64)>, f64)]) {
    let scale = x.iter().fold(0.0, |m: f64, v| m.max(v.abs())).max(1e-300);
    let support: Vec<usize> = (0..x.len()).filter(|&j| x[j] > 1e-11 * scale).collect();
    if support.is_empty() {
        return;
    }
    let pos: std::collections::HashMap<usize, usize> =
        support.iter().enumerate().map(|(c, &j)| (j, c)).collect();
    let mut a = DMatrix::<f64>::zeros(rows.len(), support.len());
    let mut b = DVector::<f64>::zeros(rows.len());
    for (r, (row, rhs)) in rows.iter().enumerate() {
        for &(j, v) in row {
            if let Some(&c) = pos.get(&j) {
                a[(r, c)] = v;
            }
        }
        b[r] = *rhs;
    }
    let misfit = |y: &[f64]| -> f64 {
        rows.iter().fold(0.0, |m: f64, (row, rhs)| {
            m.max((row.iter().map(|&(j, v)| v * y[j]).sum::<f64>() - rhs).abs())
        })
    };
    let Ok(sol) = a.clone().svd(true, true).solve(&b, 1e-13) else {
        return;
    };
    let mut y = vec![0.0; x.len()];
    for (c, &j) in support.iter().enumerate() {
        y[j] = sol[c];
    }
    if y.iter().all(|&v| v >= -1e-12 * scale) {
        y.iter_mut().for_each(|v| *v = v.max(0.0));
        if misfit(&y) <= misfit(x) {
            x.copy_from_slice(&y);
        }
    }
}
