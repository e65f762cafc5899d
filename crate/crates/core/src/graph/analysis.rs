use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, Vertex};
use crate::error::{invalid, Error, Result};
use crate::walks::WalkMode;

/// Largest vertex count accepted by [`conductance_exact`].
pub const CONDUCTANCE_MAX_N: usize = 24;

const SPECTRAL_TOLERANCE: f64 = 1e-9;
const SPECTRAL_MAX_ITER: usize = 200_000;

/// Degree spread of a graph: every degree lies in `[D, cD]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    /// `D`, the minimum degree.
    pub min_degree: usize,
    pub max_degree: usize,
    /// `c = max_degree / min_degree`.
    pub c: f64,
}

impl UniformityReport {
    pub fn is_uniform_for(&self, d0: usize, c0: f64) -> bool {
        self.min_degree >= d0 && self.c <= c0
    }
}

pub fn uniformity(g: &Graph) -> Result<UniformityReport> {
    let min_degree = g.min_degree();
    if min_degree == 0 {
        return Err(Error::DegenerateGraph("graph has an isolated vertex".into()));
    }
    let max_degree = g.max_degree();
    Ok(UniformityReport {
        min_degree,
        max_degree,
        c: max_degree as f64 / min_degree as f64,
    })
}

/// Probability vector over vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(invalid!("distribution has a negative or NaN entry"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::NumericFailure(format!("distribution sums to {sum}")));
        }
        Ok(Distribution { probs })
    }

    /// Point-wise (ℓ∞) distance.
    pub fn linf_distance(&self, other: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Stationary distribution `deg(v) / 2|E|`. Bipartite graphs have no
/// limiting distribution for the simple walk and are rejected unless the
/// lazy walk is requested.
pub fn stationary_distribution(g: &Graph, mode: WalkMode) -> Result<Distribution> {
    g.require_connected()?;
    if g.edge_count() == 0 {
        return Err(Error::DegenerateGraph("graph has no edges".into()));
    }
    if g.is_bipartite() && mode == WalkMode::Simple {
        return Err(Error::NonMixingGraph(
            "bipartite graph: simple walk is periodic (use lazy mode)".into(),
        ));
    }
    let total = 2.0 * g.edge_count() as f64;
    Distribution::new(g.degrees().map(|d| d as f64 / total).collect())
}

/// Exact conductance `min E(S, S̄) / Δ(S)` over all `S` with `0 < Δ(S) ≤ |E|`,
/// by Gray-code enumeration of the `2^n` vertex subsets.
pub fn conductance_exact(g: &Graph) -> Result<f64> {
    let edges = g.edge_count() as u64;
    let (num, den) = min_cut_ratio(g, |_, delta, _| (delta > 0 && delta <= edges).then_some(delta))?;
    Ok(num as f64 / den as f64)
}

/// Exact edge expansion `min E(S, S̄) / |S|` over `0 < |S| ≤ n/2`.
pub fn edge_expansion_exact(g: &Graph) -> Result<f64> {
    let half = (g.n() / 2) as u64;
    let (num, den) = min_cut_ratio(g, |s_mask, _, _| {
        let size = s_mask.count_ones() as u64;
        (size > 0 && size <= half).then_some(size)
    })?;
    Ok(num as f64 / den as f64)
}

// Minimizes crossing(S) / weight(S) where `weight` returns None for
// subsets outside the feasible family.
fn min_cut_ratio<F>(g: &Graph, weight: F) -> Result<(u64, u64)>
where
    F: Fn(u32, u64, u64) -> Option<u64>,
{
    let n = g.n();
    if n > CONDUCTANCE_MAX_N {
        return Err(Error::size_exceeded(
            "exact cut enumeration (use spectral bounds instead)",
            n as u128,
            CONDUCTANCE_MAX_N as u128,
        ));
    }
    g.require_connected()?;
    if n < 2 {
        return Err(Error::DegenerateGraph("need at least two vertices".into()));
    }
    let masks: Vec<u32> = (0..n as Vertex)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &w| m | (1 << w)))
        .collect();
    let degrees: Vec<u64> = g.degrees().map(|d| d as u64).collect();
    let mut set = 0u32;
    let mut delta = 0u64;
    let mut internal = 0u64;
    let mut best: Option<(u64, u64)> = None;
    for i in 1u64..(1u64 << n) {
        let v = i.trailing_zeros() as usize;
        let bit = 1u32 << v;
        let inside = (masks[v] & set).count_ones() as u64;
        if set & bit == 0 {
            set |= bit;
            delta += degrees[v];
            internal += inside;
        } else {
            set &= !bit;
            delta -= degrees[v];
            internal -= inside;
        }
        if let Some(w) = weight(set, delta, internal) {
            let crossing = delta - 2 * internal;
            let better = match best {
                None => true,
                Some((bn, bd)) => (crossing as u128) * (bd as u128) < (bn as u128) * (w as u128),
            };
            if better {
                best = Some((crossing, w));
            }
        }
    }
    best.ok_or_else(|| Error::DegenerateGraph("no admissible cut".into()))
}

/// Second-largest absolute eigenvalue `λ` of the walk operator `D⁻¹A`.
///
/// Runs power iteration on the square of the symmetrized operator
/// `D^{-1/2} A D^{-1/2}`, deflated against its top eigenvector
/// `sqrt(deg)`, until the residual drops below 1e-9.
pub fn spectral_gap(g: &Graph) -> Result<f64> {
    g.require_connected()?;
    let n = g.n();
    if n < 2 {
        return Err(Error::DegenerateGraph("need at least two vertices".into()));
    }
    let inv_sqrt: Vec<f64> = g.degrees().map(|d| 1.0 / (d as f64).sqrt()).collect();
    let mut top: Vec<f64> = g.degrees().map(|d| (d as f64).sqrt()).collect();
    normalize(&mut top);

    let apply = |x: &[f64], out: &mut [f64]| {
        for (u, o) in out.iter_mut().enumerate() {
            let s: f64 = g
                .neighbors(u as Vertex)
                .iter()
                .map(|&v| inv_sqrt[v as usize] * x[v as usize])
                .sum();
            *o = inv_sqrt[u] * s;
        }
    };
    let deflate = |x: &mut [f64]| {
        let dot: f64 = x.iter().zip(&top).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(&top).for_each(|(a, b)| *a -= dot * b);
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_5a9);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    deflate(&mut x);
    if normalize(&mut x) == 0.0 {
        return Ok(0.0);
    }
    let mut half = vec![0.0; n];
    let mut y = vec![0.0; n];
    for _ in 0..SPECTRAL_MAX_ITER {
        apply(&x, &mut half);
        apply(&half, &mut y);
        deflate(&mut y);
        let theta: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - theta * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= SPECTRAL_TOLERANCE {
            return Ok(theta.clamp(0.0, 1.0).sqrt());
        }
        std::mem::swap(&mut x, &mut y);
        if normalize(&mut x) == 0.0 {
            return Ok(0.0);
        }
    }
    Err(Error::NumericFailure(format!(
        "power iteration did not reach residual {SPECTRAL_TOLERANCE} in {SPECTRAL_MAX_ITER} steps"
    )))
}

/// Lower bound on the conductance from the easy side of Cheeger's
/// inequality, `Φ ≥ (1 − λ₂)/2 ≥ (1 − λ)/2`, with a small allowance for
/// the eigenvalue's numerical error.
pub fn conductance_lower_bound(g: &Graph) -> Result<f64> {
    let lambda = spectral_gap(g)?;
    let bound = (1.0 - lambda - 1e-6) / 2.0;
    if bound <= 0.0 {
        return Err(Error::NonMixingGraph(format!(
            "spectral bound is vacuous (λ = {lambda})"
        )));
    }
    Ok(bound)
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|a| *a /= norm);
    }
    norm
}
