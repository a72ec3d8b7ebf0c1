use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("time {0} precedes the initial time t = 1")]
    TimeBeforeOrigin(f64),

    #[error("sample array has {found} values, grid expects {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("closed form invalid for this mode ({0})")]
    OutOfValidity(&'static str),

    #[error("Laplacian eigenvalue must be non-positive, got {0}")]
    PositiveEigenvalue(f64),

    #[error("CFL bound {bound:.3e} fell below the minimum step at t = {reached}")]
    CflUnderflow { reached: f64, bound: f64 },

    #[error("step size {h:.3e} underflow at t = {reached}")]
    StepSizeUnderflow { reached: f64, h: f64 },

    #[error("maximum number of steps exceeded at t = {reached}")]
    MaxSteps { reached: f64 },

    #[error("nonlinear denominator {value:.6e} not positive at grid point {index} (time {time})")]
    Positivity { index: usize, value: f64, time: f64 },

    #[error("energy became non-finite at time {0}")]
    EnergyOverflow(f64),

    #[error("requested time {t} outside trajectory range [{start}, {end}]")]
    TimeOutOfRange { t: f64, start: f64, end: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
