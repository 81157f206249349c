use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile field `{field}`: {reason}")]
    InvalidProfile { field: String, reason: String },

    #[error("invalid job field `{field}`: {reason}")]
    InvalidJob { field: String, reason: String },

    #[error("quadrature did not reach tolerance {tol:e} on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, tol: f64 },

    #[error("value {value} outside admissible range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error("integrator step size underflow at r = {at}")]
    StiffnessFailure { at: f64 },

    #[error("profile has sharp interfaces; the Liouville potential needs a C² index")]
    NotSmooth,

    #[error("k = {k} lies within {distance:e} of a pole of the factor ({which})")]
    NearPole {
        k: Complex64,
        distance: f64,
        which: &'static str,
    },

    #[error("function vanishes on the contour after {attempts} jitter attempts")]
    BoundaryZero { attempts: usize },

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("degenerate rectangle [{re0}, {re1}] x [{im0}, {im1}]")]
    DegenerateRect { re0: f64, re1: f64, im0: f64, im1: f64 },

    #[error("non-finite function value at k = {0}")]
    NonFinite(Complex64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn profile(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidProfile {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn job(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidJob {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailure { .. }
                | Error::StiffnessFailure { .. }
                | Error::NearPole { .. }
                | Error::BoundaryZero { .. }
                | Error::NoConvergence(_)
                | Error::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
