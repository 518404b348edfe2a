use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument outside the domain of the operation.
    Input(String),
    /// A geometric precondition failed, e.g. a cone slice leaving the data domain.
    Domain(String),
    /// A linear solve met a singular or non-finite system.
    Singular { context: &'static str, row: usize },
    /// The adaptive step size fell below its floor.
    StepUnderflow { t: f64, h: f64 },
    /// The Lyapunov functional increased by more than the configured tolerance.
    EnergyIncrease { s: f64, increase: f64, tolerance: f64 },
    /// Newton iteration for the modulation parameters did not converge.
    Modulation { iterations: usize, residuals: Vec<f64> },
    /// Two soliton centers are closer than the admissible gap.
    IllSeparated { index: usize, gap: f64 },
    /// Ordering of the Toda centers was lost.
    Collision { s: f64, index: usize, gap: f64 },
    /// A least-squares fit had too few or degenerate samples.
    Fit(String),
    /// A discretisation is too coarse for the requested quantity.
    Resolution(String),
    /// The self-similar solution left every bounded set (or became non-finite).
    FrameBlowup { s: f64 },
    /// Adaptive quadrature did not reach its tolerance.
    Quadrature { estimate: f64, error: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(m) => write!(f, "invalid input: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Singular { context, row } => {
                write!(f, "singular system in {context} at row {row}")
            }
            Error::StepUnderflow { t, h } => write!(f, "step size underflow at t={t} (h={h:e})"),
            Error::EnergyIncrease { s, increase, tolerance } => write!(
                f,
                "energy increased by {increase:e} at s={s} (tolerance {tolerance:e})"
            ),
            Error::Modulation { iterations, residuals } => write!(
                f,
                "modulation did not converge after {iterations} iterations, residuals {residuals:?}"
            ),
            Error::IllSeparated { index, gap } => {
                write!(f, "centers {index} and {} are too close (gap {gap})", index + 1)
            }
            Error::Collision { s, index, gap } => {
                write!(f, "collision of centers {index} and {} at s={s} (gap {gap})", index + 1)
            }
            Error::Fit(m) => write!(f, "fit error: {m}"),
            Error::Resolution(m) => write!(f, "insufficient resolution: {m}"),
            Error::FrameBlowup { s } => write!(f, "blow-up in the self-similar frame at s={s}"),
            Error::Quadrature { estimate, error } => {
                write!(f, "quadrature did not converge: estimate {estimate}, error {error:e}")
            }
        }
    }
}

impl core::error::Error for Error {}
