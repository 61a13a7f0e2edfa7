use thiserror::Error;

/// Errors raised by the geometric-structure toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    InvalidMatrix,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("matrix is singular (sigma_min/sigma_max = {ratio:e})")]
    SingularMatrix { ratio: f64 },
    #[error("degenerate form: sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e}")]
    DegenerateForm { sigma_min: f64, sigma_max: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("variable x{index} out of range (field has {nvars} variables)")]
    VariableOutOfRange { index: usize, nvars: usize },
    #[error("evaluation outside the domain: {0}")]
    EvalDomain(String),
    /// A malformed input file; `origin` names the file and `field` the
    /// offending entry.
    #[error("{origin}: {field}: {message}")]
    Input { origin: String, field: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::ShapeMismatch(msg.into())
}
