use serde::{Deserialize, Serialize};

use super::simulate::{DefectiveSet, OutcomeVector};
use crate::designs::MeasurementMatrix;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoding {
    pub defectives: DefectiveSet,
    /// More items than the sparsity the matrix was built for.
    pub oversized: bool,
    pub tau: usize,
}

/// Cover decoder: an item is defective iff no negative test contains it.
pub fn decode_cover(matrix: &MeasurementMatrix, y: &OutcomeVector) -> Result<Decoding> {
    decode_threshold(matrix, y, 0)
}

/// Declares an item defective iff at most `tau` negative tests contain it.
pub fn decode_threshold(matrix: &MeasurementMatrix, y: &OutcomeVector, tau: usize) -> Result<Decoding> {
    if let Some(kind) = y.item_kind {
        if kind != matrix.item_kind {
            return Err(invalid!(
                "outcomes are for {} items but the matrix tests {} items",
                kind.name(),
                matrix.item_kind.name()
            ));
        }
    }
    if y.bits.len() != matrix.m() {
        return Err(invalid!("{} outcomes for a matrix with {} rows", y.bits.len(), matrix.m()));
    }
    let mut negatives = vec![0usize; matrix.n_items];
    for (row, &positive) in matrix.rows.iter().zip(&y.bits) {
        if !positive {
            for &x in row {
                negatives[x as usize] += 1;
            }
        }
    }
    let items: Vec<u32> = matrix.columns().into_iter().filter(|&x| negatives[x as usize] <= tau).collect();
    let oversized = matrix.design.d.is_some_and(|d| items.len() > d);
    Ok(Decoding {
        defectives: DefectiveSet::new(matrix.item_kind, items),
        oversized,
        tau,
    })
}
