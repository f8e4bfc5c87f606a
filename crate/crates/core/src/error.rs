use thiserror::Error;

use crate::valuation::Violation;

pub type Result<T> = std::result::Result<T, GameError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("player {player}: {violation}")]
    InvalidValuation { player: usize, violation: Violation },

    #[error("{what} = {value} is out of range (allowed {min}..={max})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("m = {m} is not a multiple of {required} (required for strict sizing with k = {k})")]
    Indivisible { m: usize, k: usize, required: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid strategy profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
