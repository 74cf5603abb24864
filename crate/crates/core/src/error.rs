use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Variants map onto the failure classes of the CLI exit codes: parameter
/// and contract problems are caller mistakes, size errors are resource caps.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("grid alignment: {0}")]
    Alignment(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("hypothesis violated: {0}")]
    Contract(String),
    #[error("statistics: {0}")]
    Statistics(String),
    #[error("size cap exceeded: {0}")]
    Size(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("internal ordering violation: {0}")]
    Ordering(String),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        // negated so that NaN fails the check
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
