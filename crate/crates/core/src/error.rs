use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("argument outside the unit square: ({0}, {1})")]
    Domain(f64, f64),
    #[error("model {0} does not expose a closed-form CDF")]
    UnsupportedModel(String),
    #[error("no closed-form value for {measure} under {model}")]
    UnsupportedPair { model: String, measure: String },
    #[error("invalid checkerboard matrix: {0}")]
    InvalidMatrix(String),
    #[error("invalid grid copula: {0}")]
    InvalidGrid(String),
    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),
    #[error("invalid conditional table: {0}")]
    InvalidTable(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("bandwidth {requested} exceeds sample resolution {available}")]
    BandwidthTooLarge { requested: usize, available: usize },
    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },
    #[error("tied values in {axis}: {count} observations share a value")]
    Ties { axis: &'static str, count: usize },
    #[error("{0} is constant")]
    Degenerate(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unsupported predictor dimension {0} (supported: 1 to 3)")]
    UnsupportedDimension(usize),
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;
