use thiserror::Error;

use crate::dynamics::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inputs outside the positive orthant (K or L not strictly positive).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid model, technology or solver parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator produced a non-positive capital stock.
    #[error("integration error at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// A non-finite value appeared. `partial` holds every point recorded
    /// before the failure so callers can still inspect the run.
    #[error("numerical overflow at t = {t}")]
    Overflow { t: f64, partial: Box<Trajectory> },

    /// Generic numerical failure (underflow guards, failed brackets).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A trajectory-level analysis could not be carried out.
    #[error("analysis error: {0}")]
    Analysis(String),

    /// Characteristic foot outside the initial-profile domain.
    #[error("characteristic foot {foot} outside profile domain [{lo}, {hi}]")]
    OutOfDomain { foot: f64, lo: f64, hi: f64 },

    #[error("CFL condition violated: need at least {min_nt} time steps (got {nt})")]
    Cfl { nt: usize, min_nt: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
