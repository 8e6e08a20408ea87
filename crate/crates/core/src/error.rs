use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("matrix has {found} entries, expected {expected} for a square matrix")]
    NotSquare { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive (eigenvalue {eigenvalue:e})")]
    NotPositive { eigenvalue: f64 },

    #[error("trace {trace} is not unity")]
    NotUnitTrace { trace: f64 },

    #[error("state vector has norm {norm}, expected 1")]
    NotNormalized { norm: f64 },

    #[error("operator is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),

    #[error("outcome label must be non-empty")]
    EmptyLabel,

    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("label `{0}` collides with an existing outcome")]
    LabelCollision(String),

    #[error("a procedure needs at least one outcome")]
    EmptyProcedure,

    #[error("empty label selection")]
    EmptySelection,

    #[error("degenerate procedure: Tr(X) = {trace:e}")]
    DegenerateProcedure { trace: f64 },

    #[error("procedure is not proportional to the identity (deviation {deviation:e}); use the general law Tr(M rho)/Tr(X rho)")]
    NonStandardProcedure { deviation: f64 },

    #[error("effects do not sum to the identity (deviation {deviation:e})")]
    NotComplete { deviation: f64 },

    #[error("operator is not an effect (max eigenvalue {max_eigenvalue})")]
    NotAnEffect { max_eigenvalue: f64 },

    #[error("no recordable outcome possible for this state: Tr(X rho) = {denominator:e}")]
    IncompatibleState { denominator: f64 },

    #[error("procedure cannot record any outcome for the ensemble average: Tr(X rho) = {denominator:e}")]
    IncompatibleEnsemble { denominator: f64 },

    #[error("observed outcome is impossible for the ensemble: Tr(M rho) = {denominator:e}")]
    OutcomeImpossible { denominator: f64 },

    #[error("zero operator has no normalized form")]
    ZeroOperator,

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("frame function returned {value} (must be finite and non-negative)")]
    FrameViolation { value: f64 },

    #[error("effect not found in POVM")]
    EffectNotInPovm,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
