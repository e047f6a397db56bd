use thiserror::Error;

/// Errors raised by the grid, Fock and algebra layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("operator is not isometric (defect {defect:.3e})")]
    NotIsometric { defect: f64 },

    #[error("operator is not unitary (defect {defect:.3e}) at {location}")]
    NotUnitary { defect: f64, location: String },

    #[error("vector is not in fiber({t_cells} cells): {reason}")]
    NotInFiber { t_cells: usize, reason: String },

    #[error("sector mask is not additively closed: {0} + {1} = {2} is missing")]
    NotAdditivelyClosed(usize, usize, usize),

    #[error("section is not exponential: <u_t, Omega_t> = {value} at t = {t_cells} cells")]
    Normalization { t_cells: usize, value: String },

    #[error("structural failure: {0}")]
    Structural(String),

    #[error("resource budget exceeded: {0}")]
    Resource(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
