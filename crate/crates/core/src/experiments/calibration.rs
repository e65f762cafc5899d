//! Fitting the multipliers of the parameter table and the floor constants
//! of the verification suite.
//!
//! The table and the floors are asymptotic, so a single run of
//! [`calibrate`] on four families (K₁₆, K₆₄, G(256, 1/4) and random
//! 8-regular on 64 vertices) fixes the constants. The result is frozen in
//! [`CALIBRATION`]; everything else reads the frozen values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{success_sweep, tag, Criterion, Family, SweepConfig};
use crate::designs::{auto_params, build_rows, measure_inputs, DesignSpec};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::grouptest::is_disjunct_with_budget;
use crate::params::{table1_params, Constants, ParamInputs};
use crate::rng::{derive_seed, stream};
use crate::walks::{
    default_cap, estimate_pi_item, estimate_pi_item_avoiding, estimate_pi_sink_avoiding, Item, StartRule, WalkMode,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub constants: Constants,
    /// Floor constant for `π_v ≥ β t/(c n T)`.
    pub beta_visit: f64,
    /// Floor constant for `π_{v,A} ≥ β/(c⁴ d T²)`.
    pub beta_avoid: f64,
    /// Floor constant for `π^{(u)}_{v,A} ≥ β/(c⁸ d² T⁴)`.
    pub beta_sink: f64,
}

/// Output of `calibrate(&CalibrationConfig::default())`.
pub const CALIBRATION: Calibration = Calibration {
    constants: Constants {
        kappa_t: 1.5,
        kappa_m: 1.05,
        kappa_e: 1.8,
        kappa_d: 1.0,
    },
    beta_visit: 1.2,
    beta_avoid: 1.08,
    beta_sink: 6.55,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub seed: u64,
    /// Trials per disjunctness sweep.
    pub sweep_trials: usize,
    /// Walks per probability estimate.
    pub estimate_trials: u64,
    /// `(v, A)` draws per family and `d`.
    pub samples: usize,
    /// Candidates for `κ_t`.
    pub kappa_t_grid: Vec<f64>,
    /// Safety factor on `κ_m` and `κ_e`.
    pub margin: f64,
    /// `β` is this fraction of the smallest normalized estimate.
    pub beta_fraction: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            seed: 0xCA1_1B2A7E,
            sweep_trials: 40,
            estimate_trials: 20_000,
            samples: 10,
            kappa_t_grid: vec![0.5, 1.0, 1.5, 2.0, 3.0, 4.0],
            margin: 1.25,
            beta_fraction: 0.5,
        }
    }
}

/// Calibration families.
pub fn calibration_families() -> Vec<Family> {
    vec![
        Family::Complete { n: 16 },
        Family::Complete { n: 64 },
        Family::Gnp { n: 256, p: 0.25 },
        Family::RandomRegular { n: 64, degree: 8 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFit {
    pub family: String,
    /// 95% disjunctness row count at the chosen `κ_t` (d = 2).
    pub m95: usize,
    /// `m₁` of the table with `κ_m = 1`.
    pub m1_unit: f64,
    /// Smallest `e` over the best 95% of matrices at `η = 0.2`.
    pub e_achieved: usize,
    /// `e(0.2)` with `κ_e = 1`, unrounded.
    pub e_unit: f64,
    pub min_visit: f64,
    pub min_avoid: f64,
    pub min_sink: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub calibration: Calibration,
    /// `(κ_t, worst m95/m₁ over the complete graphs)`.
    pub kappa_t_scores: Vec<(f64, f64)>,
    pub families: Vec<FamilyFit>,
}

const D_FIT: usize = 2;
const ETA_FIT: f64 = 0.2;

/// Runs the calibration protocol:
///
/// 1. `κ_t` minimizes the worst 95% row count relative to `m₁` over the
///    complete graphs (on the other families `t₁` sits at its `2T + 1`
///    floor, so `κ_t` has no effect there).
/// 2. `κ_m` is `margin` times the largest `m95 / m₁(κ_m = 1)`.
/// 3. `κ_e` is the smallest achieved-`e` to `e(η)` ratio at `η = 0.2`,
///    divided by `margin`.
/// 4. Each `β` is `beta_fraction` times the smallest normalized estimate
///    over all families, `d ∈ {1, 2, 3}` and sampled configurations.
pub fn calibrate(cfg: &CalibrationConfig) -> Result<CalibrationReport> {
    let families = calibration_families();
    let unit = Constants::default();

    let mut kappa_t_scores = Vec::new();
    for &kt in &cfg.kappa_t_grid {
        let mut worst = 0.0f64;
        for family in families.iter().filter(|f| !f.is_random()) {
            let constants = Constants { kappa_t: kt, ..unit };
            let m1 = unit_rows(family, cfg)?;
            let m95 = m95(family, constants, (4.0 * m1).ceil() as usize, cfg)?;
            worst = worst.max(m95.map_or(f64::INFINITY, |m| m as f64 / m1));
        }
        kappa_t_scores.push((kt, worst));
    }
    let kappa_t = kappa_t_scores
        .iter()
        .filter(|(_, s)| s.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(k, _)| k)
        .ok_or_else(|| Error::Infeasible("no walk-length multiplier reached 95% disjunctness".into()))?;

    let mut fits = Vec::new();
    let mut kappa_m = 0.0f64;
    for family in &families {
        let m1 = unit_rows(family, cfg)?;
        let constants = Constants { kappa_t, ..unit };
        let m95 = m95(family, constants, (4.0 * m1).ceil() as usize, cfg)?
            .ok_or_else(|| Error::Infeasible(format!("{} never reached 95% disjunctness", family.label())))?;
        kappa_m = kappa_m.max(m95 as f64 / m1);
        fits.push(FamilyFit {
            family: family.label(),
            m95,
            m1_unit: m1,
            e_achieved: 0,
            e_unit: 0.0,
            min_visit: f64::INFINITY,
            min_avoid: f64::INFINITY,
            min_sink: f64::INFINITY,
        });
    }
    let kappa_m = round_up(kappa_m * cfg.margin, 0.05);

    let mut kappa_e = f64::INFINITY;
    for (family, fit) in families.iter().zip(fits.iter_mut()) {
        let constants = Constants { kappa_t, kappa_m, ..unit };
        let (achieved, e_unit) = achieved_tolerance(family, constants, cfg)?;
        fit.e_achieved = achieved;
        fit.e_unit = e_unit;
        kappa_e = kappa_e.min(achieved as f64 / e_unit);
    }
    let kappa_e = round_down((kappa_e / cfg.margin).max(0.05), 0.05);

    let constants = Constants {
        kappa_t,
        kappa_m,
        kappa_e,
        kappa_d: 1.0,
    };
    for (fi, (family, fit)) in families.iter().zip(fits.iter_mut()).enumerate() {
        let floors = normalized_floors(family, constants, cfg, fi as u64)?;
        fit.min_visit = floors.0;
        fit.min_avoid = floors.1;
        fit.min_sink = floors.2;
    }
    let beta = |f: fn(&FamilyFit) -> f64| {
        round_down_sig(cfg.beta_fraction * fits.iter().map(f).fold(f64::INFINITY, f64::min))
    };
    let calibration = Calibration {
        constants,
        beta_visit: beta(|f| f.min_visit),
        beta_avoid: beta(|f| f.min_avoid),
        beta_sink: beta(|f| f.min_sink),
    };
    Ok(CalibrationReport {
        calibration,
        kappa_t_scores,
        families: fits,
    })
}

fn sample_graph(family: &Family, cfg: &CalibrationConfig, index: u64) -> Result<Graph> {
    Ok(family.sample(derive_seed(cfg.seed, tag::GRAPH, index), WalkMode::Simple)?.0)
}

// m₁ with every multiplier 1, on the first calibration graph.
fn unit_rows(family: &Family, cfg: &CalibrationConfig) -> Result<f64> {
    let g = sample_graph(family, cfg, 0)?;
    let p = auto_params(&g, D_FIT, 0.0, Constants::default(), WalkMode::Simple)?;
    let i = p.inputs;
    let (c, t) = (i.c, i.t_mix as f64);
    Ok(c.powi(4) * (D_FIT * D_FIT) as f64 * t * t * (i.n as f64 / D_FIT as f64).ln())
}

fn m95(family: &Family, constants: Constants, m_max: usize, cfg: &CalibrationConfig) -> Result<Option<usize>> {
    let mut sweep = SweepConfig::new(family.clone(), 1, D_FIT, cfg.sweep_trials);
    sweep.seed = cfg.seed;
    sweep.constants = Some(constants);
    sweep.criterion = Criterion::Disjunct;
    sweep.m_grid = vec![m_max];
    sweep.budget = u64::MAX;
    Ok(success_sweep(&sweep)?.min_m_95)
}

// Achieved (d, e)-tolerance at the noisy row count, 5th percentile over
// trials, and the unit-multiplier formula value.
fn achieved_tolerance(family: &Family, constants: Constants, cfg: &CalibrationConfig) -> Result<(usize, f64)> {
    let trials = cfg.sweep_trials / 2;
    let mut es: Vec<usize> = (0..trials)
        .into_par_iter()
        .map(|s| {
            let g = sample_graph(family, cfg, s as u64)?;
            let p = auto_params(&g, D_FIT, ETA_FIT, constants, WalkMode::Simple)?;
            let spec = DesignSpec {
                design: 1,
                m: p.rows(1) as usize,
                t: p.t1 as usize,
                start: StartRule::UniformRandom,
                sink: None,
                cap: None,
                mode: WalkMode::Simple,
            };
            let matrix = build_rows(&g, &spec, derive_seed(cfg.seed, tag::MATRIX, s as u64))?;
            // largest e with (d, e)-disjunctness; disjunctness is antitone in e
            let (mut lo, mut hi) = (0usize, matrix.m());
            if !is_disjunct_with_budget(&matrix, D_FIT, 0, u128::MAX)?.is_disjunct() {
                return Ok(0);
            }
            while lo < hi {
                let mid = lo + (hi - lo).div_ceil(2);
                if is_disjunct_with_budget(&matrix, D_FIT, mid, u128::MAX)?.is_disjunct() {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            Ok(lo)
        })
        .collect::<Result<_>>()?;
    es.sort_unstable();
    let achieved = es[trials / 20];
    let g = sample_graph(family, cfg, 0)?;
    let inputs = measure_inputs(&g, D_FIT, ETA_FIT, WalkMode::Simple)?;
    let e_unit = ETA_FIT * D_FIT as f64 * (inputs.n as f64 / D_FIT as f64).ln() / (1.0 - ETA_FIT).powi(2);
    Ok((achieved, e_unit))
}

// Smallest normalized estimates π̂_v·cnT/t, π̂_{v,A}·c⁴dT² and
// π̂^{(u)}_{v,A}·c⁸d²T⁴ over d ∈ {1, 2, 3} and sampled configurations.
fn normalized_floors(family: &Family, constants: Constants, cfg: &CalibrationConfig, fi: u64) -> Result<(f64, f64, f64)> {
    let jobs: Vec<(usize, usize)> = (1..=3).flat_map(|d| (0..cfg.samples).map(move |k| (d, k))).collect();
    let values: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(d, k)| {
            let index = fi * 1000 + d as u64 * 100 + k as u64;
            let g = sample_graph(family, cfg, k as u64 % 3)?;
            let inputs: ParamInputs = measure_inputs(&g, d, 0.0, WalkMode::Simple)?;
            let p = table1_params(inputs, constants)?;
            let (n, c, t_mix) = (g.n(), inputs.c, inputs.t_mix as f64);
            let t = p.t1 as usize;
            let mut rng = stream(derive_seed(cfg.seed, tag::SAMPLE, index), 0);
            let picked: Vec<Vertex> = rand::seq::index::sample(&mut rng, n, d + 2)
                .into_iter()
                .map(|i| i as Vertex)
                .collect();
            let (v, sink) = (picked[0], picked[1]);
            let avoid: Vec<Item> = picked[2..].iter().map(|&a| Item::Vertex(a)).collect();
            let start = StartRule::UniformRandom;
            let seed = |j: u64| derive_seed(cfg.seed, tag::ESTIMATE, index * 4 + j);
            let pi = estimate_pi_item(&g, Item::Vertex(v), t, &start, WalkMode::Simple, cfg.estimate_trials, seed(0))?;
            let pa = estimate_pi_item_avoiding(&g, Item::Vertex(v), &avoid, t, &start, WalkMode::Simple, cfg.estimate_trials, seed(1))?;
            let ps = estimate_pi_sink_avoiding(
                &g,
                Item::Vertex(v),
                &avoid,
                sink,
                default_cap(&g),
                &start,
                WalkMode::Simple,
                cfg.estimate_trials,
                seed(2),
            )?;
            let df = d as f64;
            Ok((
                pi.value * c * n as f64 * t_mix / t as f64,
                pa.value * c.powi(4) * df * t_mix * t_mix,
                ps.estimate.value * c.powi(8) * df * df * t_mix.powi(4),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().fold((f64::INFINITY, f64::INFINITY, f64::INFINITY), |a, v| {
        (a.0.min(v.0), a.1.min(v.1), a.2.min(v.2))
    }))
}

fn round_up(x: f64, step: f64) -> f64 {
    ((x / step - 1e-9).ceil() * step * 1e6).round() / 1e6
}

fn round_down(x: f64, step: f64) -> f64 {
    ((x / step + 1e-9).floor() * step * 1e6).round() / 1e6
}

// Rounds down to three significant digits.
fn round_down_sig(x: f64) -> f64 {
    if !(x > 0.0 && x.is_finite()) {
        return 0.0;
    }
    let scale = 10f64.powi(2 - x.log10().floor() as i32);
    (x * scale).floor() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_up(0.81, 0.05), 0.85);
        assert_eq!(round_up(0.8, 0.05), 0.8);
        assert_eq!(round_down(4.37, 0.05), 4.35);
        assert_eq!(round_down_sig(0.0123456), 0.0123);
        assert_eq!(round_down_sig(987.6), 987.0);
    }

    #[test]
    fn frozen_values_are_usable() {
        let c = CALIBRATION;
        for k in [c.constants.kappa_t, c.constants.kappa_m, c.constants.kappa_e, c.constants.kappa_d] {
            assert!(k > 0.0 && k.is_finite());
        }
        for b in [c.beta_visit, c.beta_avoid, c.beta_sink] {
            assert!(b > 0.0 && b.is_finite());
        }
    }
}
