use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("level {level} out of range 1..={depth}")]
    LevelRange { level: usize, depth: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("reconstruction error {residual:e} exceeds tolerance")]
    Reconstruction { residual: f64 },
    #[error("certificate rejected: {0}")]
    Certificate(#[from] Violation),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("operator is not self-adjoint (defect {0:e})")]
    NotSelfAdjoint(f64),
    #[error("operator is not a projection (defect {0:e})")]
    NotProjection(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("linear program failed: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A failed validity condition on an atom, subatom or block certificate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("cancellation fails: |E_{level}(b)| reaches {defect:e}")]
    Cancellation { level: usize, defect: f64 },
    #[error("term {term}: values leave the declared support set")]
    Support { term: usize },
    #[error("term {term}: set is not measurable at level {level}")]
    Measurability { term: usize, level: usize },
    #[error("term {term}: norm {norm} exceeds bound {bound}")]
    NormBound { term: usize, norm: f64, bound: f64 },
    #[error("term {term}: level {level} outside {min}..={max}")]
    Level {
        term: usize,
        level: usize,
        min: usize,
        max: usize,
    },
    #[error("term {term}: empty support set")]
    EmptySet { term: usize },
    #[error("block is not measurable at the first level")]
    NotFirstLevel,
    #[error("first-level atom has L1 norm {0}, expected 1")]
    FirstLevelNorm(f64),
    #[error("term {term}: not a projection or column condition a q = a fails")]
    Column { term: usize },
    #[error("length mismatch in certificate")]
    Shape,
    #[error("non-finite value in certificate")]
    NonFinite,
}
