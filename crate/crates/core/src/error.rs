use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular system: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },
    #[error("singular block pivot in mode {mode}")]
    SingularMode { mode: i64 },
    #[error("quadrature tail not negligible: g(s_max)/g(0) = {ratio:e}")]
    TailNotNegligible { ratio: f64 },
    #[error("exceptional compatibility: |T12| = {t12:e} relative to |T| = {norm:e}")]
    ExceptionalCompatibility { t12: f64, norm: f64 },
    #[error("smallness certificate fails: G_max*K_max = {eps_t:e}")]
    CertificateFailed { eps_t: f64 },
    #[error("bound unavailable: {0}")]
    BoundUnavailable(String),
    #[error("unsupported texture: {0}")]
    UnsupportedTexture(String),
    #[error("undefined quantity: {0}")]
    Undefined(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::UnsupportedTexture(_) | Error::TailNotNegligible { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
