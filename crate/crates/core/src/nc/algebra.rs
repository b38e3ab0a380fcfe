use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

/// A complex `n × n` matrix.
pub type Op = DMatrix<Complex<f64>>;

/// Eigenvalues closer than this are treated as one eigenvalue.
const CLUSTER_GAP: f64 = 1e-9;
/// Interval endpoints within this distance of an eigenvalue count as equal to it.
const EDGE_TOL: f64 = 1e-12;
/// Roundoff negatives down to this size are clamped to zero in square roots.
const PSD_CLAMP: f64 = 1e-12;

/// `M_n` with the normalized trace `τ(x) = tr(x) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TracialAlgebra {
    n: usize,
}

impl TracialAlgebra {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("matrix dimension must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> Op {
        Op::identity(self.n, self.n)
    }

    pub fn zeros(&self) -> Op {
        Op::zeros(self.n, self.n)
    }

    pub fn check(&self, x: &Op) -> Result<()> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.nrows().max(x.ncols()),
            });
        }
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        Ok(())
    }
}

pub fn c(re: f64) -> Complex<f64> {
    Complex::new(re, 0.0)
}

/// Builds an operator from real entries given row by row.
pub fn real_op(rows: &[&[f64]]) -> Op {
    let n = rows.len();
    Op::from_fn(n, rows.first().map_or(0, |r| r.len()), |i, j| c(rows[i][j]))
}

/// `τ(x) = tr(x) / n`.
pub fn tau(x: &Op) -> Complex<f64> {
    x.trace() / c(x.nrows() as f64)
}

/// Largest entry modulus.
pub fn max_entry(x: &Op) -> f64 {
    x.iter().fold(0.0, |m, z| m.max(z.norm()))
}

pub fn hermitian_defect(x: &Op) -> f64 {
    max_entry(&(x - x.adjoint()))
}

/// `max(‖x² - x‖, ‖x* - x‖)` in the entrywise sup norm.
pub fn projection_defect(x: &Op) -> f64 {
    max_entry(&(x * x - x)).max(hermitian_defect(x))
}

/// Normalized Schatten norm `τ(|x|^p)^{1/p}`; `p = ∞` gives the operator norm.
pub fn schatten_norm(x: &Op, p: f64) -> f64 {
    let n = x.nrows() as f64;
    if n == 0.0 {
        return 0.0;
    }
    if p == 2.0 {
        return (x.iter().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt();
    }
    let s = x.singular_values();
    if p.is_infinite() {
        return s.iter().fold(0.0, |m, v| m.max(*v));
    }
    (s.iter().map(|v| v.powf(p)).sum::<f64>() / n).powf(1.0 / p)
}

/// Eigenvalues of a Hermitian matrix grouped into clusters, each with the
/// projection onto its eigenspace.
pub fn eigen_clusters(x: &Op) -> Result<Vec<(f64, Op)>> {
    let scale = max_entry(x).max(1.0);
    let defect = hermitian_defect(x);
    if defect > 1e-10 * scale {
        return Err(Error::NotSelfAdjoint(defect));
    }
    let h = (x + x.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let n = x.nrows();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in order {
        let v = eig.eigenvalues[i];
        match clusters.last_mut() {
            Some(idx) if v - eig.eigenvalues[idx[idx.len() - 1]] <= CLUSTER_GAP * scale => {
                idx.push(i)
            }
            _ => clusters.push(vec![i]),
        }
    }
    Ok(clusters
        .into_iter()
        .map(|idx| {
            let mean = idx.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / idx.len() as f64;
            let mut proj = Op::zeros(n, n);
            for &i in &idx {
                let v = eig.eigenvectors.column(i);
                proj += v * v.adjoint();
            }
            (mean, proj)
        })
        .collect())
}

/// `χ_{(lo, hi]}(x)` for Hermitian `x`.
pub fn spectral_proj_interval(x: &Op, lo: f64, hi: f64) -> Result<Op> {
    let n = x.nrows();
    let mut out = Op::zeros(n, n);
    for (v, proj) in eigen_clusters(x)? {
        if v > lo + EDGE_TOL && v <= hi + EDGE_TOL {
            out += proj;
        }
    }
    Ok(out)
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_apply(x: &Op, f: impl Fn(f64) -> f64) -> Result<Op> {
    let n = x.nrows();
    let mut out = Op::zeros(n, n);
    for (v, proj) in eigen_clusters(x)? {
        out += proj * c(f(v));
    }
    Ok(out)
}

/// Square root of a positive semidefinite matrix, clamping roundoff negatives.
pub fn psd_sqrt(x: &Op) -> Result<Op> {
    let scale = max_entry(x).max(1.0);
    hermitian_apply(x, |v| {
        if v < 0.0 && v >= -PSD_CLAMP * scale {
            0.0
        } else {
            v.sqrt()
        }
    })
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(x: &Op) -> Result<f64> {
    Ok(eigen_clusters(x)?
        .iter()
        .fold(f64::NEG_INFINITY, |m, (v, _)| m.max(*v)))
}

/// Serde adapter writing matrices as nested arrays of `[re, im]` pairs.
pub mod op_serde {
    use super::Op;
    use nalgebra::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(x: &Op, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..x.nrows())
            .map(|i| {
                (0..x.ncols())
                    .map(|j| [x[(i, j)].re, x[(i, j)].im])
                    .collect()
            })
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Op, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(Op::from_fn(n, m, |i, j| {
            Complex::new(rows[i][j][0], rows[i][j][1])
        }))
    }
}
