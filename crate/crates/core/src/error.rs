use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("annulus of radius {r} is empty: need r > 2c = {two_c}")]
    EmptyAnnulus { r: f64, two_c: f64 },
    #[error("malformed index set: {0}")]
    MalformedIndexSet(String),
    #[error("offset assignment infeasible: {requested} slots requested, {available} available")]
    Infeasible { requested: usize, available: usize },
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("logarithmic derivative has a pole at z = {re} + {im}i")]
    Pole { re: f64, im: f64 },
    #[error("inadmissible truncation: omitted radius {radius} needs r/3 > 3|z| = {three_z}")]
    InadmissibleTruncation { radius: f64, three_z: f64 },
    #[error("inadmissible contour: min log|Psi| on boundary {log_min} does not exceed log|v| = {log_target}")]
    InadmissibleContour { log_min: f64, log_target: f64 },
    #[error("not converged: {0}")]
    NonConverged(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("chart invalid: ball radius {rho} exceeds chart radius {limit}")]
    ChartInvalid { rho: f64, limit: f64 },
    #[error("index overflow while encoding subsequence ({0})")]
    IndexOverflow(String),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}
