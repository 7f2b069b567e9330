use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("boundary-shell decay violated: max |u| = {max_abs:.3e} on |x| > 0.9L (limit {limit:.1e})")]
    DecayViolated { max_abs: f64, limit: f64 },

    #[error("weight exceeds representable range: a*L^alpha = {0:.1}")]
    WeightOverflow(f64),

    #[error("quadrature did not converge: residual {residual:.3e} at r = {radius}")]
    Quadrature { radius: f64, residual: f64 },

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("insufficient decay range: {0} envelope maxima")]
    InsufficientDecay(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("inadmissible degeneracy function: {0}")]
    Inadmissible(String),

    #[error("stiffness failure at t = {t:.6e}: dt underflow after {halvings} halvings (last energy jump {energy_jump:.3e})")]
    Stiffness {
        t: f64,
        halvings: u32,
        energy_jump: f64,
    },

    #[error("boundedness tripwire at t = {t:.6e}: sup|u| = {sup:.3e} exceeds {limit:.3e}")]
    Unbounded { t: f64, sup: f64, limit: f64 },

    #[error("schedule out of range: {0}")]
    ScheduleRange(String),

    #[error("log-singularity dominates: correction unreliable (clamped fraction {0:.3})")]
    LogSingularity(f64),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
