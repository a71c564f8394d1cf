use thiserror::Error;

use crate::lattice::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("generation {generation} is not a partition of the base domain: {detail}")]
    GapOrOverlap { generation: usize, detail: String },

    #[error("interval [{left}, {right}) of generation {generation} crosses a boundary of generation {}", generation - 1)]
    NotARefinement {
        generation: usize,
        left: Rational,
        right: Rational,
    },

    #[error("interval does not belong to this lattice")]
    ForeignInterval,

    #[error("leaf interval has no children")]
    LeafHasNoChildren,

    #[error("generation {k} out of range 0..={depth}")]
    BadGeneration { k: usize, depth: usize },

    #[error("input function is negative at leaf {leaf}")]
    NegativeInput { leaf: usize },

    #[error("stopping height must be positive and finite, got {0}")]
    BadLambda(f64),

    #[error("unknown value distribution {0:?}")]
    UnknownDistribution(String),

    #[error("unknown sharpness objective {0:?}")]
    UnknownObjective(String),

    #[error("operands live on different lattices")]
    LatticeMismatch,

    #[error("expected {expected} leaf values, got {got}")]
    LeafCount { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
