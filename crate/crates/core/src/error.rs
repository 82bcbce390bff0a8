use crate::report::VerificationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vertex {vertex} has non-positive measure {value}")]
    NonPositiveMeasure { vertex: usize, value: f64 },
    #[error("self-loop with positive weight at vertex {vertex}")]
    SelfLoop { vertex: usize },
    #[error("edge ({u},{v}) listed in both orientations with different weights")]
    AsymmetricInput { u: usize, v: usize },
    #[error("edge ({u},{v}) listed more than once")]
    DuplicateEdge { u: usize, v: usize },
    #[error("edge ({u},{v}) references a vertex outside 0..{n}")]
    InvalidEndpoint { u: usize, v: usize, n: usize },
    #[error("edge ({u},{v}) has negative weight {b}")]
    NegativeEdgeWeight { u: usize, v: usize, b: f64 },
    #[error("non-finite value in {what}")]
    NonFinite { what: String },
    #[error("requested {requested} vertices, cap is {cap}")]
    SizeOverflow { requested: u128, cap: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("vertex subset is empty")]
    EmptySubset,
    #[error("vertex set is empty")]
    EmptySet,
    #[error("function or set belongs to a different graph")]
    GraphMismatch,
    #[error("weight must be strictly positive (vertex {vertex}, value {value})")]
    NonPositiveWeight { vertex: usize, value: f64 },
    #[error("weight must be nonnegative (vertex {vertex}, value {value})")]
    NegativeWeight { vertex: usize, value: f64 },
    #[error("edge length must be nonnegative (edge {edge}, value {value})")]
    NegativeLength { edge: usize, value: f64 },
    #[error("graph has no origin vertex")]
    NoOrigin,
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("operator is numerically singular at shift {shift} (smallest |eigenvalue| about {estimate:e})")]
    NearSingular { shift: f64, estimate: f64 },
    #[error("exhaustion level {level} leaves an empty complement")]
    EmptyComplement { level: usize },
    #[error("supersolution must be strictly positive and at least 1e-300 (vertex {vertex}, value {value})")]
    NonPositiveSupersolution { vertex: usize, value: f64 },
    #[error("exponent {0} outside the admissible range")]
    BadExponent(f64),
    #[error("right-hand side is nonzero at vertex {vertex} where the weight vanishes")]
    SupportViolation { vertex: usize },
    #[error("eikonal inequality fails: {}", .0.summary())]
    EikonalFailed(Box<VerificationReport>),
    #[error("gap must be positive, got {0}")]
    NonPositiveGap(f64),
    #[error("hypothesis {check} not met: {}", .report.summary())]
    HypothesisFailed {
        check: String,
        report: Box<VerificationReport>,
    },
    #[error("exhaustion has {levels} levels, at least 3 are needed")]
    InsufficientExhaustion { levels: usize },
    #[error("sets are not nested at level {level}")]
    NotNested { level: usize },
    #[error("exact enumeration limited to size 14, got {requested}")]
    SizeGuard { requested: usize },
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal invariant violated: {0}")]
    InvariantViolated(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
