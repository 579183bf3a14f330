use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported index {0} for this polynomial kind")]
    UnsupportedIndex(i64),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("iteration did not converge: {0}")]
    NotConverged(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("open boundary conditions required (corner entries are nonzero)")]
    BoundaryViolation,
    #[error("value is not an eigenvalue (|theta_n| = {0:e})")]
    NotEigenvalue(f64),
    #[error("matrix is reducible: interior hopping {0} vanishes")]
    NotIrreducible(usize),
    #[error("matrix is singular")]
    Singular,
    #[error("diagonal is not 2-periodic")]
    PeriodicityViolation,
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("eigenvector matrix is singular")]
    SingularS,
    #[error("zero vector")]
    ZeroVector,
    #[error("Puiseux fit rejected: {0}")]
    FitRejected(String),
    #[error("outside the asymptotic regime: {0}")]
    OutOfRegime(String),
    #[error("matrix is not quasi-Hermitian: {0}")]
    NotQuasiHermitian(String),
    #[error("alpha and beta are not orthogonal")]
    OrthogonalityViolation,
    #[error("parameter restriction violated: {0}")]
    ParamViolation(String),
    #[error("matrix is not positive definite")]
    NotPositive,
    #[error("J and E do not anticommute (residual {0:e})")]
    AnticommutationViolation(f64),
    #[error("J is singular")]
    SingularJ,
    #[error("E is not an involution (residual {0:e})")]
    NotInvolution(f64),
    #[error("U is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("A does not commute with the representation (residual {0:e})")]
    CommutantViolation(f64),
    #[error("m does not intertwine block {0}")]
    NotIntertwiner(usize),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
