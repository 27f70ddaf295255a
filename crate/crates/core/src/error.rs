use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parse error at position {pos}: unexpected token {token:?}")]
    Parse { pos: usize, token: String },
    #[error("element is not hyperbolic (|trace| = {trace})")]
    NotHyperbolic { trace: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("optimizer reached the boundary of moduli space: {0}")]
    BoundaryEscape(String),
    #[error("optimizer did not converge: {0}")]
    NonConvergence(String),
    #[error("curve does not fill the surface: {0}")]
    NotFilling(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
