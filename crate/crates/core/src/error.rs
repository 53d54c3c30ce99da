use crate::distributions::Family;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("trace mean is not positive and finite ({0})")]
    ZeroMeanTrace(f64),
    #[error("all values identical; histogram range is degenerate")]
    DegenerateRange,
    #[error("invalid bin specification: {0}")]
    InvalidBins(String),
    #[error("invalid {family} parameters: {reason}")]
    InvalidParams { family: Family, reason: String },
    #[error("numeric overflow: {0}")]
    NumericOverflow(String),
    #[error("adaptive quadrature did not converge (estimate {estimate}, error {error})")]
    QuadratureFailure { estimate: f64, error: f64 },
    #[error("could not bracket probability {0}")]
    BracketFailure(f64),
    #[error("{0} is not determined by the scintillation index alone")]
    UnderdeterminedFamily(Family),
    #[error("scintillation index {scint} outside the support of {family}")]
    OutOfSupport { family: Family, scint: f64 },
    #[error("normalization infeasible: {0}")]
    Infeasible(String),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("zero variance: covariance coefficient undefined")]
    ZeroVariance,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("histogram densities are all equal; R² undefined")]
    DegenerateHistogram,
    #[error("{family} is inapplicable: scintillation index {scint} <= 1")]
    InfeasibleFamily { family: Family, scint: f64 },
    #[error("coherence time {coherence_time} s is below one sample at {sample_rate} Sa/s")]
    UnresolvableCoherence {
        coherence_time: f64,
        sample_rate: f64,
    },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
