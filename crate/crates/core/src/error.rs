use alloc::string::String;

/// Errors reported by the solver crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("meshing failed: {0}")]
    Meshing(String),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("conjugate gradient did not converge in {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("singular evaluation: {0}")]
    Singularity(String),
    #[error("invalid data: {0}")]
    Data(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::Error::InvalidArgument(alloc::format!($($arg)*))
    };
}
pub(crate) use invalid;
