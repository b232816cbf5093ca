use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The model has no signal or no noise, so a ratio is undefined.
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("wavelength {wavelength_um} um is outside the table range [{min_um}, {max_um}] um")]
    Extrapolation {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn degenerate(msg: impl Into<String>) -> Error {
    Error::DegenerateModel(msg.into())
}
