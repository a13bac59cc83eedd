use thiserror::Error;

/// Errors surfaced by construction, validation, and numerical routines.
///
/// Numerical preconditions are checked eagerly and reported, never silently
/// patched: a matrix that fails a symmetry or definiteness check is a modeling
/// bug at the call site, not something to average away.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context} (expected {expected}, got {got})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asym:e} exceeds tolerance")]
    NotSymmetric { max_asym: f64 },

    #[error("matrix is not positive definite (Cholesky failed at pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("rank {rank} out of range for dimension {dim}")]
    RankOutOfRange { rank: usize, dim: usize },

    #[error("invalid coordinate index set: {reason}")]
    InvalidIndexSet { reason: String },

    #[error("prior/projector pair admits no exact marginal-conditional factorization: {reason}")]
    UnsupportedFactorization { reason: String },

    #[error("input parameter out of domain: {reason}")]
    InvalidParameter { reason: String },

    #[error("point is not in the range of the projector (residual {residual:e})")]
    NotInRange { residual: f64 },

    #[error("non-finite value encountered: {context}")]
    NonFinite { context: &'static str },

    #[error("forward model output out of likelihood domain: {reason}")]
    LikelihoodDomain { reason: String },

    #[error("optimization diverged: {reason}")]
    OptimizationDiverged { reason: String },

    #[error("series too short for {context}: need at least {min}, got {got}")]
    SeriesTooShort {
        context: &'static str,
        min: usize,
        got: usize,
    },

    #[error("empty input: {context}")]
    Empty { context: &'static str },
}

impl Error {
    /// Stable machine-readable tag for each variant (used by CLI error JSON).
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::RankOutOfRange { .. } => "rank_out_of_range",
            Error::InvalidIndexSet { .. } => "invalid_index_set",
            Error::UnsupportedFactorization { .. } => "unsupported_factorization",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::NotInRange { .. } => "not_in_range",
            Error::NonFinite { .. } => "non_finite",
            Error::LikelihoodDomain { .. } => "likelihood_domain",
            Error::OptimizationDiverged { .. } => "optimization_diverged",
            Error::SeriesTooShort { .. } => "series_too_short",
            Error::Empty { .. } => "empty",
        }
    }
}
