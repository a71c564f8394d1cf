//! Martingale Hardy space machinery on finite, possibly non-homogeneous
//! interval lattices.
//!
//! The crate provides exact-geometry lattices ([`lattice`]), leaf-constant
//! functions and coefficient sequences ([`function`]), the martingale
//! operators ([`operators`]), the constructive decompositions linking BMO,
//! Carleson sequences and the maximal and square functions ([`decompose`]),
//! JSON formats ([`io`]) and a randomized verification harness ([`harness`]).

pub mod decompose;
pub mod error;
pub mod function;
pub mod harness;
pub mod io;
pub mod lattice;
pub mod operators;

pub use error::{Error, Result};
pub use function::{CoefSequence, StepFunction};
pub use lattice::{Interval, IntervalId, Lattice, Rational};
