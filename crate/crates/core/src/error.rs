use thiserror::Error;

/// Errors raised by the library. Variants map one-to-one onto the CLI exit
/// codes (usage/domain = 2, precision = 3, capacity = 4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error in {op}: {operand}")]
    Domain { op: &'static str, operand: String },

    /// A certified comparison stayed undecided at the largest permitted
    /// precision, or the requested accuracy is beyond what the engine offers.
    #[error("precision exhausted: {detail} (needs {required_digits} digits)")]
    Precision { detail: String, required_digits: u32 },

    /// A resource cap was hit. `resume` carries a token when partial work was
    /// flushed and the computation can be continued.
    #[error("capacity exceeded: {detail}")]
    Capacity { detail: String, resume: Option<String> },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(op: &'static str, operand: impl Into<String>) -> Self {
        Error::Domain {
            op,
            operand: operand.into(),
        }
    }

    pub(crate) fn precision(detail: impl Into<String>, required_digits: u32) -> Self {
        Error::Precision {
            detail: detail.into(),
            required_digits,
        }
    }
}
