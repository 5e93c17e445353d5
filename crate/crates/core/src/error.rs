use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions (estimate {estimate}, error {error})")]
    Quadrature {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("no sign change on [{lo}, {hi}]")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("certificate undefined: {0}")]
    CertificateUndefined(String),

    #[error("problem too large: {0}")]
    SizeLimit(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;
