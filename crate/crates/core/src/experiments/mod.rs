//! Desk-scale reproductions: success sweeps, mixing-time scaling, the
//! fixed-input comparison, the verification suite, the tomography demo
//! and the constant calibration.
//!
//! Every job draws its randomness from seeds derived from the run seed and
//! the job index (see [`crate::rng::derive_seed`]), so results do not depend
//! on scheduling or worker count.

mod calibration;
mod scaling;
mod sweep;
mod tomography;
mod verify;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Error, Result};
use crate::graph::{gen_complete, gen_cycle, gen_erdos_renyi, gen_path, gen_random_regular, gen_star, Graph};
use crate::rng::derive_seed;
use crate::walks::WalkMode;

pub use calibration::{calibrate, calibration_families, Calibration, CalibrationConfig, CalibrationReport, CALIBRATION};
pub use scaling::{mixing_scaling, MixingScalingConfig, MixingScalingResult, ScalingRow};
pub use sweep::{
    fixed_input_experiment, success_sweep, Criterion, FixedInputResult, SweepConfig, SweepMetadata, SweepPoint,
    SweepResult,
};
pub use tomography::{tomography_demo, tomography_runs, TomoConfig, TomoReport, TomoSummary};
pub use verify::{verification_suite, CheckLine, CheckStatus, SuiteConfig, SuiteReport};

/// Seed tags for [`derive_seed`].
pub(crate) mod tag {
    pub const GRAPH: u64 = 1;
    pub const MATRIX: u64 = 2;
    pub const DEFECTS: u64 = 3;
    pub const NOISE: u64 = 4;
    pub const REDRAW: u64 = 5;
    pub const ESTIMATE: u64 = 6;
    pub const SAMPLE: u64 = 7;
}

/// Draws allowed before a family gives up on a connected sample.
pub const REDRAW_BUDGET: usize = 1000;

/// Fewest trials accepted per sweep point.
pub const MIN_TRIALS: usize = 30;

/// Graph family with its size parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Complete { n: usize },
    Gnp { n: usize, p: f64 },
    /// `G(n, ⌈α ln n⌉ / n)`.
    GnpLog { n: usize, alpha: f64 },
    RandomRegular { n: usize, degree: usize },
    Cycle { n: usize },
    Path { n: usize },
    Star { n: usize },
}

impl Family {
    pub fn n(&self) -> usize {
        match *self {
            Family::Complete { n }
            | Family::Gnp { n, .. }
            | Family::GnpLog { n, .. }
            | Family::RandomRegular { n, .. }
            | Family::Cycle { n }
            | Family::Path { n }
            | Family::Star { n } => n,
        }
    }

    /// Same family at another size.
    pub fn with_n(&self, n: usize) -> Family {
        let mut out = self.clone();
        match &mut out {
            Family::Complete { n: k }
            | Family::Gnp { n: k, .. }
            | Family::GnpLog { n: k, .. }
            | Family::RandomRegular { n: k, .. }
            | Family::Cycle { n: k }
            | Family::Path { n: k }
            | Family::Star { n: k } => *k = n,
        }
        out
    }

    pub fn is_random(&self) -> bool {
        matches!(self, Family::Gnp { .. } | Family::GnpLog { .. } | Family::RandomRegular { .. })
    }

    pub fn label(&self) -> String {
        match *self {
            Family::Complete { n } => format!("complete({n})"),
            Family::Gnp { n, p } => format!("gnp({n},{p})"),
            Family::GnpLog { n, alpha } => format!("gnp-log({n},{alpha})"),
            Family::RandomRegular { n, degree } => format!("random-regular({n},{degree})"),
            Family::Cycle { n } => format!("cycle({n})"),
            Family::Path { n } => format!("path({n})"),
            Family::Star { n } => format!("star({n})"),
        }
    }

    /// One draw, connected or not.
    pub fn generate(&self, seed: u64) -> Result<Graph> {
        match *self {
            Family::Complete { n } => gen_complete(n),
            Family::Gnp { n, p } => gen_erdos_renyi(n, p, seed),
            Family::GnpLog { n, alpha } => {
                if n < 2 || !(alpha > 0.0) {
                    return Err(invalid!("gnp-log needs n >= 2 and alpha > 0"));
                }
                let p = ((alpha * (n as f64).ln()).ceil() / n as f64).min(1.0);
                gen_erdos_renyi(n, p, seed)
            }
            Family::RandomRegular { n, degree } => gen_random_regular(n, degree, seed),
            Family::Cycle { n } => gen_cycle(n),
            Family::Path { n } => gen_path(n),
            Family::Star { n } => gen_star(n),
        }
    }

    /// Draws until the graph is connected (and non-bipartite for simple
    /// walks). Returns the graph and the number of rejected draws. Draw
    /// `a > 0` uses `derive_seed(seed, REDRAW, a)`.
    pub fn sample(&self, seed: u64, mode: WalkMode) -> Result<(Graph, usize)> {
        for attempt in 0..REDRAW_BUDGET {
            let s = if attempt == 0 { seed } else { derive_seed(seed, tag::REDRAW, attempt as u64) };
            let g = self.generate(s)?;
            if g.is_connected() && (mode == WalkMode::Lazy || !g.is_bipartite()) {
                return Ok((g, attempt));
            }
            if !self.is_random() {
                break;
            }
        }
        Err(Error::GenerationFailure(format!(
            "no connected{} sample of {}",
            if mode == WalkMode::Simple { ", non-bipartite" } else { "" },
            self.label()
        )))
    }
}

/// Mann-Kendall trend statistic of a sequence: `S`, the normal score `z`
/// (no tie correction) and `P[Z < z]`, the confidence that the series
/// is increasing rather than decreasing.
pub fn mann_kendall(values: &[f64]) -> (i64, f64, f64) {
    let n = values.len();
    let mut s = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            s += match values[j].partial_cmp(&values[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    let nf = n as f64;
    let var = nf * (nf - 1.0) * (2.0 * nf + 5.0) / 18.0;
    let z = if var == 0.0 {
        0.0
    } else if s > 0 {
        (s as f64 - 1.0) / var.sqrt()
    } else if s < 0 {
        (s as f64 + 1.0) / var.sqrt()
    } else {
        0.0
    };
    let p = Normal::new(0.0, 1.0).expect("standard normal").cdf(z);
    (s, z, p)
}

/// Plain CSV: a header line, then one line per row.
pub(crate) fn csv<R: AsRef<[String]>>(header: &[&str], rows: &[R]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.as_ref().join(","));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_generate_and_rescale() {
        let f = Family::GnpLog { n: 64, alpha: 6.0 };
        let (g, _) = f.sample(3, WalkMode::Simple).unwrap();
        assert_eq!(g.n(), 64);
        assert!(g.is_connected());
        assert_eq!(f.with_n(128).n(), 128);
        assert!(Family::Cycle { n: 6 }.sample(0, WalkMode::Simple).is_err());
        assert!(Family::Cycle { n: 6 }.sample(0, WalkMode::Lazy).is_ok());
        let text = serde_json::to_string(&Family::Gnp { n: 10, p: 0.5 }).unwrap();
        assert_eq!(text, r#"{"family":"gnp","n":10,"p":0.5}"#);
    }

    #[test]
    fn sparse_gnp_is_redrawn() {
        let f = Family::Gnp { n: 40, p: 0.1 };
        let (g, redrawn) = f.sample(1, WalkMode::Simple).unwrap();
        assert!(g.is_connected());
        let again = f.sample(1, WalkMode::Simple).unwrap();
        assert_eq!(again.1, redrawn);
        assert_eq!(again.0, g);
    }

    #[test]
    fn mann_kendall_signs() {
        let up: Vec<f64> = (0..20).map(f64::from).collect();
        let (s, _, p) = mann_kendall(&up);
        assert_eq!(s, 190);
        assert!(p > 0.999);
        let down: Vec<f64> = up.iter().rev().copied().collect();
        assert!(mann_kendall(&down).2 < 0.001);
        assert_eq!(mann_kendall(&[1.0; 5]).0, 0);
    }
}
