use alloc::string::String;

/// Errors raised by the algebra, integration, martingale and solver layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("element has {found} blocks, algebra has {expected}")]
    BlockCount { expected: usize, found: usize },

    #[error("block {block} is {rows}x{cols}, expected {expected}x{expected}")]
    BlockShape {
        block: usize,
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid subalgebra: {0}")]
    InvalidSubalgebra(String),

    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),

    #[error("objects are defined over different filtrations")]
    FiltrationMismatch,

    #[error("step {step} is not adapted (projection residual {residual:.3e})")]
    NotAdapted { step: usize, residual: f64 },

    #[error("element is not self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("time {time} is not a grid point of the filtration")]
    OffGrid { time: f64 },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
