use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision loss: {0}")]
    Precision(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("pole encountered: {0}")]
    Pole(String),
    #[error("absorption never occurs (Q_x(T0 < inf) = 0 branch): {0}")]
    NoAbsorption(String),
    #[error("no Cramér root: {0}")]
    NoCramerRoot(String),
}

pub type Result<T> = std::result::Result<T, Error>;
