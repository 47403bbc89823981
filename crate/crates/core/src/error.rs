use thiserror::Error;

/// Everything that can go wrong while constructing or checking a truncated space.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index entry {entry} out of range for one-particle dimension {dim}")]
    IndexOutOfRange { entry: usize, dim: usize },

    #[error("level dimension {dim}^{level} exceeds the cap of {cap}")]
    LevelCap { dim: usize, level: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("not a permutation: {0:?}")]
    NotPermutation(Vec<usize>),

    #[error("deformation parameter q = {0} outside [-1, 1]")]
    QOutOfRange(f64),

    #[error("naive permutation sum refused at level {level} (cap {cap}); use the recursive construction")]
    PermutationCap { level: usize, cap: usize },

    #[error("level {level} is not Hermitian (relative defect {defect:.3e})")]
    NotHermitian { level: usize, defect: f64 },

    #[error("level {level} is not positive (min eigenvalue {min_eig:.3e})")]
    NotPositive { level: usize, min_eig: f64 },

    #[error("kernel condition violated at level {level} (residual {residual:.3e})")]
    KernelCondition { level: usize, residual: f64 },

    #[error("vacuum level must be [1], found {0}")]
    Vacuum(String),

    #[error("infeasible rank profile: {0}")]
    RankProfile(String),

    #[error("not a squeezing: {0}")]
    NotSqueezing(String),

    #[error("level {level} is not an orthogonal projection (defect {defect:.3e})")]
    NotProjection { level: usize, defect: f64 },

    #[error("projection family fails {condition} at level {level} (violation {violation:.3e})")]
    Certification {
        condition: &'static str,
        level: usize,
        violation: f64,
    },

    #[error("word reaches level {level} beyond truncation {cutoff}")]
    WordTruncation { level: usize, cutoff: usize },

    #[error("invalid moment sequence: {0}")]
    Moments(String),

    #[error("Jacobi data invalid: {0}")]
    Jacobi(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
