//! Hardy, BMO and Lipschitz-type norms on a finite filtration.

use crate::atoms::{validate_block, AtomicBlock, BlockRule};
use crate::error::{Error, Result};
use crate::prob::{cond_square_function, square_function, Filtration, MartingaleView, Rv};

/// Conjugate exponent `p'` with `1/p + 1/p' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub p: f64,
    pub pprime: f64,
}

impl NormParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(Error::Domain(format!("exponent {p} must exceed 1")));
        }
        Ok(Self {
            p,
            pprime: conjugate(p),
        })
    }

    pub fn infinity() -> Self {
        Self {
            p: f64::INFINITY,
            pprime: 1.0,
        }
    }
}

/// Little Hardy norm `‖s(f)‖_1`.
pub fn h1_norm(f: &Rv, filt: &Filtration) -> Result<f64> {
    Ok(cond_square_function(f, filt)?.norm(1.0))
}

/// Hardy norm `‖S(f)‖_1`.
pub fn big_h1_norm(f: &Rv, filt: &Filtration) -> Result<f64> {
    Ok(square_function(f, filt)?.norm(1.0))
}

fn sup(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn centered_moment(f: &Rv, filt: &Filtration, k: usize, center: usize, moment: f64) -> f64 {
    let c = filt.average(f.values(), center);
    let dev: Vec<f64> = f
        .values()
        .iter()
        .zip(&c)
        .map(|(v, m)| (v - m).abs().powf(moment))
        .collect();
    sup(&filt.average(&dev, k)).powf(1.0 / moment)
}

/// `sup_k ‖(E_k |f - E_k f|^m)^{1/m}‖_∞`.
pub fn bmo_norm(f: &Rv, filt: &Filtration, moment: f64) -> Result<f64> {
    if !(moment >= 1.0) {
        return Err(Error::Domain(format!("moment {moment} must be at least 1")));
    }
    Ok((1..=filt.depth()).fold(0.0, |m, k| m.max(centered_moment(f, filt, k, k, moment))))
}

/// `sup_k ‖(E_k |f - E_{k-1} f|^2)^{1/2}‖_∞` with `E_0 = 0`.
pub fn big_bmo_norm(f: &Rv, filt: &Filtration) -> Result<f64> {
    Ok((1..=filt.depth()).fold(0.0, |m, k| m.max(centered_moment(f, filt, k, k - 1, 2.0))))
}

/// `(‖f‖_BMO, ‖f‖_bmo + sup_k ‖df_k‖_∞)`.
pub fn bmo_equiv_gap(f: &Rv, filt: &Filtration) -> Result<(f64, f64)> {
    let view = MartingaleView::new(f.clone(), filt)?;
    Ok((
        big_bmo_norm(f, filt)?,
        bmo_norm(f, filt, 2.0)? + view.max_diff(),
    ))
}

/// `Σ_k ‖df_k‖_1`.
pub fn diag_norm(f: &Rv, filt: &Filtration) -> Result<f64> {
    let view = MartingaleView::new(f.clone(), filt)?;
    Ok(view.diffs().iter().fold(0.0, |s, d| s + d.norm(1.0)))
}

fn check_pq(p0: f64, q: f64) -> Result<()> {
    if !(p0 > 0.0 && p0 < 1.0 && q > 1.0 && q.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < p0 < 1 < q < ∞, got p0={p0}, q={q}"
        )));
    }
    Ok(())
}

/// Per-set quantity `[(avg_A |f - E_k f|^q)^{1/q} + ‖df_k‖_∞]` and `μ(A)`.
fn lambda_terms(f: &Rv, filt: &Filtration, q: f64, max_union: usize) -> Result<Vec<(f64, f64)>> {
    let view = MartingaleView::new(f.clone(), filt)?;
    let w = filt.weights();
    let mut out = Vec::new();
    for k in 1..=filt.depth() {
        let c = filt.average(f.values(), k);
        let dev: Vec<f64> = f
            .values()
            .iter()
            .zip(&c)
            .map(|(v, m)| (v - m).abs().powf(q))
            .collect();
        let d = view.diff(k).norm(f64::INFINITY);
        let blocks = filt.blocks(k);
        let masses = filt.block_masses(k);
        let integrals: Vec<f64> = blocks
            .iter()
            .map(|b| b.iter().map(|&i| w[i] * dev[i]).sum())
            .collect();
        let mut push =
            |mass: f64, integral: f64| out.push(((integral / mass).powf(1.0 / q) + d, mass));
        for (m, s) in masses.iter().zip(&integrals) {
            push(*m, *s);
        }
        if max_union >= 2 {
            for i in 0..blocks.len() {
                for j in i + 1..blocks.len() {
                    push(masses[i] + masses[j], integrals[i] + integrals[j]);
                }
            }
        }
    }
    Ok(out)
}

/// `sup_{k, A} μ(A)^{1 - 1/p0} [(avg_A |f - E_k f|^q)^{1/q} + ‖df_k‖_∞]` over level-`k` blocks `A`.
///
/// Unions of blocks never exceed the largest of their members, so scanning
/// blocks gives the supremum over all level-`k` measurable sets.
pub fn lambda_pq_norm(f: &Rv, filt: &Filtration, p0: f64, q: f64) -> Result<f64> {
    check_pq(p0, q)?;
    let e = 1.0 - 1.0 / p0;
    Ok(lambda_terms(f, filt, q, 1)?
        .into_iter()
        .fold(0.0, |m, (v, mass)| m.max(mass.powf(e) * v)))
}

/// As [`lambda_pq_norm`] but also scanning unions of two blocks.
pub fn lambda_pq_norm_pairs(f: &Rv, filt: &Filtration, p0: f64, q: f64) -> Result<f64> {
    check_pq(p0, q)?;
    let e = 1.0 - 1.0 / p0;
    Ok(lambda_terms(f, filt, q, 2)?
        .into_iter()
        .fold(0.0, |m, (v, mass)| m.max(mass.powf(e) * v)))
}

/// The `p0 → 1` limit of [`lambda_pq_norm`]: the largest unweighted block quantity.
pub fn lambda_pq_limit(f: &Rv, filt: &Filtration, q: f64) -> Result<f64> {
    Ok(lambda_terms(f, filt, q, 1)?
        .into_iter()
        .fold(0.0, |m, (v, _)| m.max(v)))
}

/// `(Σ_i |b_i|^{p0})^{1/p0}` for a validated `(p0, q)` block decomposition of `f`.
pub fn hp_atb_quasinorm_upper(
    f: &Rv,
    filt: &Filtration,
    p0: f64,
    q: f64,
    blocks: &[AtomicBlock],
) -> Result<f64> {
    check_pq(p0, q)?;
    let rule = BlockRule::Quasi { p0, q };
    let mut residual = f.values().to_vec();
    let mut total = 0.0;
    for b in blocks {
        let cost = validate_block(b, filt, rule)?;
        total += cost.powf(p0);
        for (r, v) in residual.iter_mut().zip(b.values(filt.len())) {
            *r -= v;
        }
    }
    let res = sup(&residual);
    if res > 1e-9 * sup(f.values()).max(1.0) {
        return Err(Error::Reconstruction { residual: res });
    }
    Ok(total.powf(1.0 / p0))
}
