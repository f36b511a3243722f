use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violates the precondition of the operation it was passed to.
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    /// A size limit (enumeration cap, table capacity, ensemble budget) was exceeded.
    #[error("capacity exceeded for `{name}`: {value} > {limit}")]
    Capacity {
        name: &'static str,
        value: u64,
        limit: u64,
    },

    #[error("index {index} out of range (length {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
