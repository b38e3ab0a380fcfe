use super::algebra::{max_eigenvalue, psd_sqrt, schatten_norm, tau, Op};
use super::filtration::NCFiltration;
use crate::error::Result;

fn trace_of_sqrt(x: &Op) -> Result<f64> {
    Ok(tau(&psd_sqrt(x)?).re)
}

/// `‖(Σ_k df_k* df_k)^{1/2}‖_1`.
pub fn col_big_h1_norm(f: &Op, filt: &NCFiltration) -> Result<f64> {
    let n = f.nrows();
    let mut s = Op::zeros(n, n);
    for d in filt.diffs(f) {
        s += d.adjoint() * &d;
    }
    trace_of_sqrt(&s)
}

/// `‖(|df_1|² + Σ_{k≥2} E_{k-1}(df_k* df_k))^{1/2}‖_1`.
pub fn col_h1_norm(f: &Op, filt: &NCFiltration) -> Result<f64> {
    let n = f.nrows();
    let mut s = Op::zeros(n, n);
    for (i, d) in filt.diffs(f).iter().enumerate() {
        let sq = d.adjoint() * d;
        s += if i == 0 { sq } else { filt.cond_exp(&sq, i) };
    }
    trace_of_sqrt(&s)
}

fn col_moment(f: &Op, filt: &NCFiltration, k: usize, center: usize) -> Result<f64> {
    let x = f - filt.cond_exp(f, center);
    let m = filt.cond_exp(&(x.adjoint() * &x), k);
    Ok(max_eigenvalue(&m)?.max(0.0).sqrt())
}

/// `sup_k ‖E_k((f - E_{k-1} f)*(f - E_{k-1} f))‖_∞^{1/2}` with `E_0 = 0`.
pub fn col_big_bmo_norm(f: &Op, filt: &NCFiltration) -> Result<f64> {
    (1..=filt.depth()).try_fold(0.0f64, |m, k| Ok(m.max(col_moment(f, filt, k, k - 1)?)))
}

/// `sup_k ‖E_k((f - E_k f)*(f - E_k f))‖_∞^{1/2}`.
pub fn col_bmo_norm(f: &Op, filt: &NCFiltration) -> Result<f64> {
    (1..=filt.depth()).try_fold(0.0f64, |m, k| Ok(m.max(col_moment(f, filt, k, k)?)))
}

pub fn row_big_h1_norm(f: &Op, filt: &NCFiltration) -> Result<f64> {
    col_big_h1_norm(&f.adjoint(), filt)
}

pub fn row_bmo_norm(f: &Op, filt: &NCFiltration) -> Result<f64> {
    col_bmo_norm(&f.adjoint(), filt)
}

/// `Σ_k ‖df_k‖_1`.
pub fn nc_diag_norm(f: &Op, filt: &NCFiltration) -> f64 {
    filt.diffs(f)
        .iter()
        .fold(0.0, |s, d| s + schatten_norm(d, 1.0))
}

/// `sup_k ‖df_k‖_∞`.
pub fn nc_max_diff(f: &Op, filt: &NCFiltration) -> f64 {
    filt.diffs(f)
        .iter()
        .fold(0.0, |m, d| m.max(schatten_norm(d, f64::INFINITY)))
}
