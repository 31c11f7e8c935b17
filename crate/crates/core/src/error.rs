use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("cutoff {0} exceeds the supported maximum {max}", max = crate::grid_fock::MAX_CUTOFF)]
    CutoffTooLarge(usize),

    #[error("interval mismatch: {0}")]
    IntervalMismatch(String),

    #[error("intervals [{left_start}, {left_end}) and [{right_start}, {right_end}) are not adjacent")]
    NonAdjacent {
        left_start: usize,
        left_end: usize,
        right_start: usize,
        right_end: usize,
    },

    #[error("split point {split} lies outside [{start}, {end}]")]
    SplitOutOfRange { split: usize, start: usize, end: usize },

    #[error("translation by {shift} cells would start at a negative cell")]
    NegativeStart { shift: isize },

    #[error("step function has {got} values, interval has {expected} cells")]
    LengthMismatch { expected: usize, got: usize },

    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("ONB index {k} is invalid (must lie in 1..={max})")]
    InvalidOnbIndex { k: usize, max: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error(
        "truncation overflow: shifting by {shift_cells} cells pushes occupation past the \
         K-breve window of {window_cells} cells; increase --window"
    )]
    TruncationOverflow { shift_cells: usize, window_cells: usize },

    #[error("size guard exceeded: {what} = {size} > {limit}")]
    SizeGuard { what: &'static str, size: usize, limit: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
