use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported multiwavelet order {0} (supported: 1..=4)")]
    UnsupportedOrder(usize),

    #[error("refinement level {0} is out of range (maximum {max})", max = crate::basis::MAX_LEVEL)]
    LevelOutOfRange(u32),

    #[error("Gauss-Legendre order {0} is out of range (supported: 1..=64)")]
    OrderOutOfRange(usize),

    #[error("empty integration interval [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },

    #[error("invalid barriers: lower {lower} must be positive and below upper {upper}")]
    InvalidBarriers { lower: f64, upper: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("spot {spot} is not strictly inside the barriers ({lower}, {upper})")]
    SpotOutsideBarriers { spot: f64, lower: f64, upper: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid piecewise polynomial: {0}")]
    InvalidPiecewise(&'static str),
}
