//! Graph-constrained non-adaptive group testing.
//!
//! Pools are the vertex or edge sets visited by random walks on a
//! constraint graph. The crate builds such measurement matrices, simulates
//! (noisy) OR-tests on them, decodes, and checks disjunctness and the
//! walk-probability bounds the constructions rely on.

pub mod designs;
pub mod experiments;
pub mod error;
pub mod graph;
pub mod grouptest;
pub mod mixing;
pub mod params;
pub mod rng;
pub mod walks;

pub use error::{Error, Result};
