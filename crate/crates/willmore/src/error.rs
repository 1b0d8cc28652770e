use thiserror::Error;

/// Errors raised across the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("compatibility violated: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    Compatibility { defect: f64, tol: f64 },
    #[error("right-hand side does not decay: tail magnitude {tail:.3e}")]
    Decay { tail: f64 },
    #[error("numerical failure after {iterations} iterations (residual {residual:.3e}): {msg}")]
    Numerical {
        msg: String,
        iterations: usize,
        residual: f64,
    },
    #[error("chart injectivity violated: delta {delta} >= bound {bound}")]
    ChartInjectivity { delta: f64, bound: f64 },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("no interface: field has no sign change")]
    NoInterface,
    #[error("blow-up at t = {time}: {msg}")]
    Blowup { time: f64, msg: String },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
