//! Bridge from an outcome flip probability `q` to the noise parameter `η`
//! of the parameter table.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::error::{invalid, Error, Result};
use crate::params::{tolerance, Constants, ParamInputs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBridge {
    pub eta: f64,
    /// `e(η)`.
    pub e: u64,
    /// `⌊(e − 1)/2⌋`, the decoder threshold.
    pub tau: u64,
    /// Flips the threshold must absorb: the `confidence` quantile of `Bin(m, q)`.
    pub flips: u64,
}

/// Smallest `k` with `P[Bin(m, q) ≤ k] ≥ confidence`.
pub fn binomial_quantile(m: u64, q: f64, confidence: f64) -> Result<u64> {
    if !(0.0..0.5).contains(&q) {
        return Err(invalid!("flip probability must lie in [0, 1/2), got {q}"));
    }
    if !(confidence > 0.0 && confidence <= 1.0) {
        return Err(invalid!("confidence must lie in (0, 1], got {confidence}"));
    }
    if q == 0.0 || m == 0 {
        return Ok(0);
    }
    if confidence >= 1.0 {
        return Err(Error::Infeasible("confidence 1 cannot be met with q > 0".into()));
    }
    let dist = Binomial::new(q, m).map_err(|e| invalid!("binomial: {e}"))?;
    Ok((0..=m).find(|&k| dist.cdf(k) >= confidence).unwrap_or(m))
}

/// Smallest `η` (to bisection precision) whose tolerance `e(η)` gives a
/// threshold `⌊(e − 1)/2⌋` covering the `confidence` quantile of
/// `Bin(m, q)` flips.
pub fn eta_for_flip_noise(q: f64, m: u64, confidence: f64, inputs: &ParamInputs, constants: &Constants) -> Result<NoiseBridge> {
    let flips = binomial_quantile(m, q, confidence)?;
    if flips == 0 {
        return Ok(NoiseBridge {
            eta: 0.0,
            e: 0,
            tau: 0,
            flips,
        });
    }
    let need = 2 * flips + 1;
    let e_at = |eta: f64| tolerance(inputs, constants, eta);
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-12);
    if e_at(hi) < need {
        return Err(Error::Infeasible(format!("no eta < 1 gives e >= {need}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if e_at(mid) >= need {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let e = e_at(hi);
    Ok(NoiseBridge {
        eta: hi,
        e,
        tau: (e - 1) / 2,
        flips,
    })
}
