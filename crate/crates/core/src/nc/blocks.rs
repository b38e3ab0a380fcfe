use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::algebra::{
    c, eigen_clusters, max_entry, op_serde, projection_defect, schatten_norm, tau, Op,
};
use super::filtration::NCFiltration;
use super::norms::{col_bmo_norm, nc_max_diff};
use crate::atoms::BOUND_TOL;
use crate::error::{Error, Result, Violation};
use crate::norms::conjugate;
use crate::prob::EQ_TOL;

const PROJ_TOL: f64 = 1e-10;

/// `λ a` with `a q = a`, `q` a projection in `M_level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NCTerm {
    pub lambda: f64,
    pub level: usize,
    #[serde(with = "op_serde")]
    pub proj: Op,
    #[serde(with = "op_serde")]
    pub atom: Op,
}

/// A column atomic block: an element of `M_1`, or a sum of column subatoms
/// cancelling at a common level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NCBlock {
    FirstLevel {
        #[serde(with = "op_serde")]
        value: Op,
    },
    Cancel {
        level: usize,
        terms: Vec<NCTerm>,
    },
}

impl NCBlock {
    pub fn value(&self, n: usize) -> Op {
        match self {
            NCBlock::FirstLevel { value } => value.clone(),
            NCBlock::Cancel { terms, .. } => {
                let mut out = Op::zeros(n, n);
                for t in terms {
                    out += &t.atom * c(t.lambda);
                }
                out
            }
        }
    }

    pub fn lambda_mass(&self) -> f64 {
        match self {
            NCBlock::FirstLevel { value } => schatten_norm(value, 1.0),
            NCBlock::Cancel { terms, .. } => terms.iter().fold(0.0, |s, t| s + t.lambda.abs()),
        }
    }

    pub fn terms(&self) -> &[NCTerm] {
        match self {
            NCBlock::FirstLevel { .. } => &[],
            NCBlock::Cancel { terms, .. } => terms,
        }
    }
}

/// Validates a column `p`-block and returns its certified cost.
pub fn validate_nc_block(
    b: &NCBlock,
    filt: &NCFiltration,
    p: f64,
) -> std::result::Result<f64, Violation> {
    validate_nc_block_scaled(b, filt, p, 1.0)
}

/// As [`validate_nc_block`] with every subatom bound multiplied by `multiplier`.
pub fn validate_nc_block_scaled(
    b: &NCBlock,
    filt: &NCFiltration,
    p: f64,
    multiplier: f64,
) -> std::result::Result<f64, Violation> {
    let n = filt.dim();
    match b {
        NCBlock::FirstLevel { value } => {
            if value.nrows() != n || value.ncols() != n {
                return Err(Violation::Shape);
            }
            if !filt.is_measurable(value, 1, EQ_TOL) {
                return Err(Violation::NotFirstLevel);
            }
            Ok(schatten_norm(value, 1.0))
        }
        NCBlock::Cancel { level, terms } => {
            let k = *level;
            if k == 0 || k > filt.depth() {
                return Err(Violation::Level {
                    term: 0,
                    level: k,
                    min: 1,
                    max: filt.depth(),
                });
            }
            let pp = conjugate(p);
            let mut sum = Op::zeros(n, n);
            let mut scale = 0.0;
            for (j, t) in terms.iter().enumerate() {
                if t.atom.nrows() != n
                    || t.proj.nrows() != n
                    || t.atom.ncols() != n
                    || t.proj.ncols() != n
                {
                    return Err(Violation::Shape);
                }
                if !t.lambda.is_finite()
                    || t.atom
                        .iter()
                        .any(|z| !z.re.is_finite() || !z.im.is_finite())
                {
                    return Err(Violation::NonFinite);
                }
                if t.level < k || t.level > filt.depth() {
                    return Err(Violation::Level {
                        term: j,
                        level: t.level,
                        min: k,
                        max: filt.depth(),
                    });
                }
                if projection_defect(&t.proj) > PROJ_TOL {
                    return Err(Violation::Column { term: j });
                }
                let tq = tau(&t.proj).re;
                if tq <= PROJ_TOL {
                    return Err(Violation::EmptySet { term: j });
                }
                if !filt.is_measurable(&t.proj, t.level, PROJ_TOL) {
                    return Err(Violation::Measurability {
                        term: j,
                        level: t.level,
                    });
                }
                let a_scale = max_entry(&t.atom);
                if max_entry(&(&t.atom * &t.proj - &t.atom)) > PROJ_TOL * a_scale.max(1.0) {
                    return Err(Violation::Column { term: j });
                }
                let norm = schatten_norm(&t.atom, p);
                let bound = multiplier * tq.powf(-1.0 / pp) / (t.level - k + 1) as f64;
                if norm > bound + BOUND_TOL * bound.max(1.0) {
                    return Err(Violation::NormBound {
                        term: j,
                        norm,
                        bound,
                    });
                }
                sum += &t.atom * c(t.lambda);
                scale += t.lambda.abs() * a_scale;
            }
            let defect = max_entry(&filt.cond_exp(&sum, k));
            if defect > EQ_TOL * scale.max(1.0) {
                return Err(Violation::Cancellation { level: k, defect });
            }
            Ok(terms.iter().fold(0.0, |s, t| s + t.lambda.abs()))
        }
    }
}

/// Slice index `j ≥ 1` with `v ∈ (1/(j+1), 1/j]`, robust to roundoff at the endpoints.
fn slice_of(v: f64) -> usize {
    ((1.0 / v + 1e-9).floor() as usize).max(1)
}

/// Block at level `k - 1` equal to `Δ_k(p) = E_k p - E_{k-1} p`, built from the
/// spectral projections `q_j = χ_{(1/(j+1), 1/j]}` of `E_k p` and `E_{k-1} p`.
pub fn decompose_delta_projection(p: &Op, filt: &NCFiltration, k: usize) -> Result<NCBlock> {
    filt.algebra().check(p)?;
    let d = projection_defect(p);
    if d > PROJ_TOL {
        return Err(Error::NotProjection(d));
    }
    if k < 2 {
        return Err(Error::LevelRange {
            level: k,
            depth: filt.depth(),
        });
    }
    filt.check_level(k)?;
    let cur = filt.cond_exp(p, k);
    let prev = filt.cond_exp(p, k - 1);
    if max_entry(&(&cur - &prev)) <= 1e-12 {
        return Ok(NCBlock::Cancel {
            level: k - 1,
            terms: Vec::new(),
        });
    }
    let n = filt.dim();
    let mut terms = Vec::new();
    for (level, x, weight, sign) in [(k, &cur, 2.0, 1.0), (k - 1, &prev, 1.0, -1.0)] {
        let mut slices: Vec<(usize, Op)> = Vec::new();
        for (v, proj) in eigen_clusters(x)? {
            if v <= 1e-12 {
                continue;
            }
            let j = slice_of(v);
            match slices.iter_mut().find(|(jj, _)| *jj == j) {
                Some((_, q)) => *q += proj,
                None => slices.push((j, proj)),
            }
        }
        slices.sort_by_key(|(j, _)| *j);
        for (j, q) in slices {
            let lambda = weight / j as f64 * tau(&q).re;
            let atom = (&q * x) * c(1.0 / lambda);
            terms.push(NCTerm {
                lambda: sign * lambda,
                level,
                proj: q,
                atom,
            });
        }
    }
    debug_assert!(terms.iter().all(|t| t.atom.nrows() == n));
    Ok(NCBlock::Cancel {
        level: k - 1,
        terms,
    })
}

/// Result of keeping the first `N` terms of a block and moving the rest into
/// one first-level correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub block: NCBlock,
    /// Factor by which the truncated block's subatom bounds are relaxed.
    pub multiplier: f64,
    /// Certified atomic-block cost of `b - b'`.
    pub distance: f64,
    /// `Σ_{j>N} |λ_j|`.
    pub tail_mass: f64,
}

/// `b' = Σ_{j≤N} λ_j a_j + E_1(Σ_{j>N} λ_j a_j)` as a level-1 block.
///
/// The correction is one subatom on `1` with coefficient
/// `max(‖E_1 tail‖_1, ‖E_1 tail‖_p / k)`; with `M_1` the scalars this is `‖E_1 tail‖_1`.
pub fn truncate_block(b: &NCBlock, keep: usize, filt: &NCFiltration, p: f64) -> Result<Truncation> {
    validate_nc_block(b, filt, p)?;
    let (k, terms) = match b {
        NCBlock::Cancel { level, terms } if terms.len() > keep => (*level, terms),
        _ => {
            return Ok(Truncation {
                block: b.clone(),
                multiplier: 1.0,
                distance: 0.0,
                tail_mass: 0.0,
            })
        }
    };
    let n = filt.dim();
    let mult = k as f64;
    let mut tail = Op::zeros(n, n);
    for t in &terms[keep..] {
        tail += &t.atom * c(t.lambda);
    }
    let tail_mass: f64 = terms[keep..].iter().fold(0.0, |s, t| s + t.lambda.abs());
    let e1 = filt.cond_exp(&tail, 1);
    let correction = |sign: f64| -> Option<NCTerm> {
        let lambda = schatten_norm(&e1, 1.0).max(schatten_norm(&e1, p) / mult);
        (lambda > 0.0).then(|| NCTerm {
            lambda,
            level: 1,
            proj: Op::identity(n, n),
            atom: &e1 * c(sign / lambda),
        })
    };
    let mut kept: Vec<NCTerm> = terms[..keep].to_vec();
    kept.extend(correction(1.0));
    let block = NCBlock::Cancel {
        level: 1,
        terms: kept,
    };
    validate_nc_block_scaled(&block, filt, p, mult)?;
    let mut rest: Vec<NCTerm> = terms[keep..].to_vec();
    rest.extend(correction(-1.0));
    let diff = NCBlock::Cancel {
        level: 1,
        terms: rest,
    };
    let distance = mult * validate_nc_block_scaled(&diff, filt, p, mult)?;
    Ok(Truncation {
        block,
        multiplier: mult,
        distance,
        tail_mass,
    })
}

/// `τ(f φ*)`.
pub fn nc_pairing(f: &Op, phi: &Op) -> Result<Complex<f64>> {
    if f.shape() != phi.shape() {
        return Err(Error::DimensionMismatch {
            expected: f.nrows(),
            got: phi.nrows(),
        });
    }
    Ok(tau(&(f * phi.adjoint())))
}

/// `(|τ(b φ*)|, cost(b) · (‖φ‖_bmo_c + sup_k ‖dφ_k‖_∞))`, or `‖E_1 φ‖_∞` in
/// place of the bracket for first-level blocks. Only `p = 2` is supported.
pub fn nc_duality_bound_check(
    b: &NCBlock,
    phi: &Op,
    filt: &NCFiltration,
    p: f64,
) -> Result<(f64, f64)> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!(
            "duality bound is only exact at p = 2, got p = {p}"
        )));
    }
    filt.algebra().check(phi)?;
    let cost = validate_nc_block(b, filt, 2.0)?;
    let lhs = nc_pairing(&b.value(filt.dim()), phi)?.norm();
    let rhs = match b {
        NCBlock::FirstLevel { .. } => cost * schatten_norm(&filt.cond_exp(phi, 1), f64::INFINITY),
        NCBlock::Cancel { .. } => cost * (col_bmo_norm(phi, filt)? + nc_max_diff(phi, filt)),
    };
    Ok((lhs, rhs))
}

pub fn nc_duality_bound_check_p2(b: &NCBlock, phi: &Op, filt: &NCFiltration) -> Result<(f64, f64)> {
    nc_duality_bound_check(b, phi, filt, 2.0)
}
