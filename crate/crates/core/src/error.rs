use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("linear-fractional map is constant: |ad - bc| = {0:e}")]
    ConstantMap(f64),
    #[error("invalid series: {0}")]
    InvalidSeries(String),
    #[error("singular expansion: denominator has zero constant term")]
    SingularExpansion,
    #[error("pole inside the closed unit disk at {0}")]
    PoleInsideDisk(String),
    #[error("unbounded symbol: {0}")]
    UnboundedSymbol(String),
    #[error("unbounded operator: sup-norm estimate of phi is {0} (must be < 1)")]
    UnboundedOperator(f64),
    #[error("invalid derivative order {0} (must be >= 1)")]
    InvalidOrder(usize),
    #[error("psi is not divisible by z^{n}: coefficient {index} has modulus {modulus:e}")]
    NotDivisible { n: usize, index: usize, modulus: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("point {0} lies outside the open unit disk")]
    PointOutsideDisk(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("scenario {name}: {source}")]
    InScenario { name: String, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_scenario(self, name: &str) -> Self {
        match self {
            Error::InScenario { .. } => self,
            other => Error::InScenario {
                name: name.to_string(),
                source: Box::new(other),
            },
        }
    }

    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NumericalFailure(_) => 3,
            Error::InScenario { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}
