use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}` = {value}: {reason}")]
    InvalidParameter { field: &'static str, value: f64, reason: &'static str },

    #[error("{op}: pole at omega = {omega}")]
    Pole { op: &'static str, omega: f64 },

    #[error("{op}: quadrature did not converge ({detail})")]
    Quadrature { op: &'static str, detail: String },

    #[error("{0}")]
    Domain(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { field, value, reason: "must be finite and > 0" })
    }
}
