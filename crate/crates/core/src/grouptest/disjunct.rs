//! Exhaustive `(d, e)`-disjunctness certification.
//!
//! A matrix is `(d, e)`-disjunct when for every column `S₀` and every `d`
//! other columns `S₁..S_d`, more than `e` rows of `S₀` lie outside
//! `S₁ ∪ .. ∪ S_d`. Only the unstripped columns take part.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bits::BitSet;
use crate::designs::MeasurementMatrix;
use crate::error::{Error, Progress, Result};

/// Default limit on `k · C(k − 1, d)` for `k` columns.
pub const DEFAULT_DISJUNCT_BUDGET: u128 = 100_000_000;

/// Column and row incidence bit sets of a matrix's column view.
#[derive(Debug, Clone)]
pub struct ColumnView {
    /// Item id of each column position.
    pub items: Vec<u32>,
    /// Rows containing each column.
    pub cols: Vec<BitSet>,
    /// Column positions contained in each row.
    pub rows: Vec<BitSet>,
}

impl ColumnView {
    pub fn new(matrix: &MeasurementMatrix) -> Self {
        let items = matrix.columns();
        let mut position = vec![usize::MAX; matrix.n_items];
        for (p, &x) in items.iter().enumerate() {
            position[x as usize] = p;
        }
        let m = matrix.m();
        let mut cols = vec![BitSet::new(m); items.len()];
        let mut rows = vec![BitSet::new(items.len()); m];
        for (r, row) in matrix.rows.iter().enumerate() {
            for &x in row {
                let p = position[x as usize];
                if p != usize::MAX {
                    cols[p].insert(r);
                    rows[r].insert(p);
                }
            }
        }
        ColumnView { items, cols, rows }
    }

    pub fn k(&self) -> usize {
        self.items.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Disjunct,
    Violated,
}

/// Columns (as item ids) with `|S₀ \ ∨ others| ≤ e`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub s0: u32,
    pub others: Vec<u32>,
    /// `|S₀ \ ∨ others|`.
    pub uncovered: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjunctCertificate {
    pub verdict: Verdict,
    pub d: usize,
    pub e: usize,
    /// `d` actually enumerated: `min(d, k − 1)`.
    pub d_checked: usize,
    pub columns: usize,
    /// `k · C(k − 1, d_checked)`.
    pub subsets: u128,
    pub witness: Option<Witness>,
}

impl DisjunctCertificate {
    pub fn is_disjunct(&self) -> bool {
        self.verdict == Verdict::Disjunct
    }
}

impl Witness {
    /// Recomputes `|S₀ \ ∨ others|` directly from the matrix rows.
    pub fn replay(&self, matrix: &MeasurementMatrix) -> usize {
        matrix
            .rows
            .iter()
            .filter(|row| {
                row.binary_search(&self.s0).is_ok() && !self.others.iter().any(|x| row.binary_search(x).is_ok())
            })
            .count()
    }
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// [`is_disjunct_with_budget`] with [`DEFAULT_DISJUNCT_BUDGET`].
pub fn is_disjunct(matrix: &MeasurementMatrix, d: usize, e: usize) -> Result<DisjunctCertificate> {
    is_disjunct_with_budget(matrix, d, e, DEFAULT_DISJUNCT_BUDGET)
}

/// Exhaustive check over every `S₀` and every `d`-subset of the others.
///
/// With fewer than `d + 1` columns the check uses all remaining columns.
/// The scan runs in parallel over `S₀`; the witness is the one for the
/// smallest violating `S₀`, found by a sequential search that is the same
/// on every run (not necessarily the lexicographically first `d`-subset).
/// Over budget, as many `S₀` as fit are still checked: a violation among
/// them is returned, otherwise `SizeExceeded`.
pub fn is_disjunct_with_budget(matrix: &MeasurementMatrix, d: usize, e: usize, budget: u128) -> Result<DisjunctCertificate> {
    let view = ColumnView::new(matrix);
    let k = view.k();
    let d_checked = d.min(k.saturating_sub(1));
    let per_column = binomial(k.saturating_sub(1) as u128, d_checked as u128);
    let subsets = per_column.saturating_mul(k as u128);
    let limit = if subsets <= budget {
        k
    } else {
        (budget / per_column.max(1)).min(k as u128) as usize
    };
    let witness = (0..limit)
        .into_par_iter()
        .find_map_first(|j| first_violation(&view, j, d_checked, e));
    let certificate = |verdict, witness| DisjunctCertificate {
        verdict,
        d,
        e,
        d_checked,
        columns: k,
        subsets,
        witness,
    };
    match witness {
        Some(w) => Ok(certificate(Verdict::Violated, Some(w))),
        None if limit == k => Ok(certificate(Verdict::Disjunct, None)),
        None => Err(Error::SizeExceeded {
            what: format!("({d}, {e})-disjunctness subsets"),
            size: subsets,
            limit: budget,
            progress: Progress(Some(format!("{limit} of {k} columns checked, no violation found"))),
        }),
    }
}

// Search for at most `d` other columns leaving at most `e` rows of S₀
// uncovered. If `r` columns cover all but `e` of the residual rows `R`,
// one of them covers at least `(|R| − e)/r` of them; only such columns are
// branched on, which keeps the search exact while pruning almost every
// branch on walk matrices.
fn first_violation(view: &ColumnView, j: usize, d: usize, e: usize) -> Option<Witness> {
    let residual = view.cols[j].clone();
    let mut chosen = Vec::with_capacity(d);
    if residual.count() <= e {
        return Some(witness(view, j, &chosen, d));
    }
    if d == 0 {
        return None;
    }
    search(view, j, d, e, &residual, &mut chosen).map(|_| witness(view, j, &chosen, d))
}

// On success `chosen` holds the covering columns and the uncovered count
// is returned.
fn search(view: &ColumnView, j: usize, slots: usize, e: usize, residual: &BitSet, chosen: &mut Vec<usize>) -> Option<usize> {
    let size = residual.count();
    let need = size - e;
    if slots == 1 && e == 0 {
        return covering_column(view, j, residual).map(|c| {
            chosen.push(c);
            0
        });
    }
    let min_cover = need.div_ceil(slots);
    for c in 0..view.k() {
        if c == j || chosen.contains(&c) {
            continue;
        }
        let cover = size - residual.count_minus(&view.cols[c]);
        if cover < min_cover {
            continue;
        }
        let left = size - cover;
        chosen.push(c);
        if left <= e {
            return Some(left);
        }
        if slots > 1 {
            let mut next = residual.clone();
            next.subtract(&view.cols[c]);
            if let Some(found) = search(view, j, slots - 1, e, &next, chosen) {
                return Some(found);
            }
        }
        chosen.pop();
    }
    None
}

// Smallest column other than `j` containing every residual row.
fn covering_column(view: &ColumnView, j: usize, residual: &BitSet) -> Option<usize> {
    let mut rows = residual.ones();
    let mut candidates = view.rows[rows.next()?].clone();
    for r in rows {
        candidates
            .words_mut()
            .iter_mut()
            .zip(view.rows[r].words())
            .for_each(|(a, b)| *a &= b);
        if candidates.words().iter().all(|&w| w == 0) {
            return None;
        }
    }
    let found = candidates.ones().find(|&c| c != j);
    found
}

// Pads `chosen` with the smallest unused positions up to `d` columns.
fn witness(view: &ColumnView, j: usize, chosen: &[usize], d: usize) -> Witness {
    let mut cols: Vec<usize> = chosen.to_vec();
    let mut next = 0;
    while cols.len() < d {
        if next != j && !cols.contains(&next) {
            cols.push(next);
        }
        next += 1;
    }
    cols.sort_unstable();
    let mut residual = view.cols[j].clone();
    cols.iter().for_each(|&c| residual.subtract(&view.cols[c]));
    Witness {
        s0: view.items[j],
        others: cols.iter().map(|&c| view.items[c]).collect(),
        uncovered: residual.count(),
    }
}
