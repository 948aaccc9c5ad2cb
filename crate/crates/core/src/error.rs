use std::fmt;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid basis order {0}: expected 1..=16")]
    InvalidOrder(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("construction check failed: {0}")]
    Construction(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape_err(args: fmt::Arguments<'_>) -> Error {
    Error::Shape(args.to_string())
}

macro_rules! shape_bail {
    ($($arg:tt)*) => {
        return Err($crate::error::shape_err(format_args!($($arg)*)))
    };
}
pub(crate) use shape_bail;
