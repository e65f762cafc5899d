//! Test simulation, disjunctness certification and decoding.

mod bits;
mod decode;
mod disjunct;
mod noise;
mod simulate;

pub use bits::BitSet;
pub(crate) use disjunct::binomial;
pub use decode::{decode_cover, decode_threshold, Decoding};
pub use disjunct::{
    is_disjunct, is_disjunct_with_budget, ColumnView, DisjunctCertificate, Verdict, Witness,
    DEFAULT_DISJUNCT_BUDGET,
};
pub use noise::{binomial_quantile, eta_for_flip_noise, NoiseBridge};
pub use simulate::{simulate_tests, DefectiveSet, NoiseModel, OutcomeVector};
