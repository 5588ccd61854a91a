use thiserror::Error;

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("gram matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("gram matrix is degenerate (smallest |eigenvalue| {0:.3e})")]
    DegenerateGram(f64),

    #[error("basis vectors are linearly dependent (rank {rank} < {dim})")]
    DependentBasis { rank: usize, dim: usize },

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("projection onto a degenerate subspace is undefined; use a light-like dual pair instead")]
    DegenerateSubspace,

    #[error("invalid tolerance policy: {0}")]
    InvalidTolerance(&'static str),

    #[error("invalid complex structure: {0}")]
    InvalidComplexStructure(String),

    #[error("subspace is not J-invariant")]
    NotComplex,

    #[error("form is not flat (defect {0:.3e})")]
    NotFlat(f64),

    #[error("form is not surjective (image dim {image_dim}, target dim {target_dim})")]
    NotSurjective { image_dim: usize, target_dim: usize },

    #[error("element is not regular (rank {rank} < {max_rank})")]
    NotRegular { rank: usize, max_rank: usize },

    #[error("image radical does not have the shape span{{v}} + span{{v}}: {0}")]
    UnexpectedRadical(String),

    #[error("<v, w> vanishes; v and w do not span a Lorentzian plane")]
    NullPairing,

    #[error("pipeline not applicable: {0}")]
    NotApplicable(String),

    #[error("vector has zero paired norm; cannot normalise")]
    NullNorm,

    #[error("point lies on the excluded ray R w (<y, w> = 0)")]
    ExcludedRay,

    #[error("non-positive conformal factor {0}")]
    NonPositiveFactor(f64),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
