//! Mixing time against graph size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{csv, tag, Family};
use crate::error::{invalid, Result};
use crate::graph::{conductance_exact, conductance_lower_bound, uniformity, CONDUCTANCE_MAX_N};
use crate::mixing::{default_delta, js_upper_bound, mixing_time};
use crate::rng::derive_seed;
use crate::walks::WalkMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingScalingConfig {
    /// Family template; its `n` is replaced by each grid value.
    pub family: Family,
    pub n_grid: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: WalkMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub t_mix: usize,
    /// `T(n) / ln n`.
    pub ratio: f64,
    pub c: f64,
    pub delta: f64,
    /// Conductance bound on `T(n)` (simple walks only).
    pub js_bound: Option<usize>,
    /// Rejected draws before a connected sample.
    pub regenerated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingScalingResult {
    pub family: String,
    pub mode: WalkMode,
    pub rows: Vec<ScalingRow>,
    /// Largest over smallest `T(n)/ln n` across the grid.
    pub band: f64,
    /// `T(n)` never exceeds the conductance bound where it was computed.
    pub bound_holds: bool,
}

impl MixingScalingResult {
    /// `n,t_mix,ratio,js_bound,regenerated` rows.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.t_mix.to_string(),
                    format!("{:.6}", r.ratio),
                    r.js_bound.map_or(String::new(), |b| b.to_string()),
                    r.regenerated.to_string(),
                ]
            })
            .collect();
        csv(&["n", "t_mix", "ratio", "js_bound", "regenerated"], &rows)
    }
}

/// `T(n)` under the default `δ` for each `n` of the grid, with the
/// conductance bound (exact conductance up to
/// [`CONDUCTANCE_MAX_N`] vertices, the spectral lower bound beyond).
pub fn mixing_scaling(cfg: &MixingScalingConfig) -> Result<MixingScalingResult> {
    if cfg.n_grid.is_empty() {
        return Err(invalid!("n grid is empty"));
    }
    let rows: Vec<ScalingRow> = cfg
        .n_grid
        .par_iter()
        .map(|&n| {
            let family = cfg.family.with_n(n);
            let (g, regenerated) = family.sample(derive_seed(cfg.seed, tag::GRAPH, n as u64), cfg.mode)?;
            let delta = default_delta(&g)?;
            let t_mix = mixing_time(&g, delta, cfg.mode)?.t_mix;
            let js_bound = match cfg.mode {
                WalkMode::Simple => {
                    let phi = if n <= CONDUCTANCE_MAX_N {
                        conductance_exact(&g)?
                    } else {
                        conductance_lower_bound(&g)?
                    };
                    Some(js_upper_bound(&g, delta, Some(phi))?)
                }
                WalkMode::Lazy => None,
            };
            Ok(ScalingRow {
                n,
                t_mix,
                ratio: t_mix as f64 / (n as f64).ln(),
                c: uniformity(&g)?.c,
                delta,
                js_bound,
                regenerated,
            })
        })
        .collect::<Result<_>>()?;
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    Ok(MixingScalingResult {
        family: cfg.family.label(),
        mode: cfg.mode,
        band: hi / lo,
        bound_holds: rows.iter().all(|r| r.js_bound.is_none_or(|b| r.t_mix <= b)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lazy_cycles_grow_quadratically() {
        let cfg = MixingScalingConfig {
            family: Family::Cycle { n: 8 },
            n_grid: vec![8, 16, 32],
            seed: 0,
            mode: WalkMode::Lazy,
        };
        let r = mixing_scaling(&cfg).unwrap();
        assert!(r.rows.windows(2).all(|w| w[1].ratio > 1.5 * w[0].ratio), "{:?}", r.rows);
        assert!(r.rows.iter().all(|row| row.js_bound.is_none()));
        assert!(r.to_csv().starts_with("n,t_mix,ratio,js_bound,regenerated\n8,"));
    }

    #[test]
    fn small_graphs_use_exact_conductance() {
        let cfg = MixingScalingConfig {
            family: Family::Gnp { n: 16, p: 0.5 },
            n_grid: vec![12, 16, 20],
            seed: 4,
            mode: WalkMode::Simple,
        };
        let r = mixing_scaling(&cfg).unwrap();
        assert!(r.bound_holds);
        assert!(r.band >= 1.0);
        assert_eq!(r, mixing_scaling(&cfg).unwrap());
    }
}
