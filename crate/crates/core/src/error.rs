use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid norm: {0}")]
    InvalidNorm(String),

    #[error("the zero vector has no norm value")]
    ZeroVector,

    #[error("root finder did not converge ({what}); residual {residual:e}")]
    NumericalFailure { what: &'static str, residual: f64 },

    #[error("vector lies within the finite-difference stencil of the domain boundary")]
    BoundaryProximity,

    #[error("indicatrix has only {admissible} admissible directions")]
    EmptyIndicatrix { admissible: usize },

    #[error("point ({x}, {y}) is outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("initial velocity lies on the lightlike boundary of the admissible cone")]
    DegenerateDirection,

    #[error("integrator step collapsed to {step:e} at t = {t}")]
    Stiffness { t: f64, step: f64 },

    #[error("reachability horizon {available} is shorter than the requested {needed}")]
    InsufficientHorizon { needed: f64, available: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("time step {dt} violates the propagation bound {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("operation not applicable: {0}")]
    Inapplicable(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to a distinct exit status in the CLI.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure { .. }
                | Error::BoundaryProximity
                | Error::DegenerateDirection
                | Error::Stiffness { .. }
                | Error::EmptyIndicatrix { .. }
        )
    }
}
