use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("folding configuration rejected: {0}")]
    Sizing(String),

    #[error("construction error: {0}")]
    Construction(String),

    #[error("point outside the domain: {0}")]
    OutsideDomain(String),

    #[error("integrator did not converge: {0}")]
    Integrator(String),

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
