use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric fault: {0}")]
    NumericFault(String),
}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}

macro_rules! numeric_fault {
    ($($arg:tt)*) => {
        $crate::error::Error::NumericFault(alloc::format!($($arg)*))
    };
}

pub(crate) use invalid;
pub(crate) use numeric_fault;
