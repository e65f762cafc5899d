//! δ-mixing time under point-wise (ℓ∞) distance, and the conductance bound.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{conductance_exact, stationary_distribution, uniformity, Graph};
use crate::walks::WalkMode;

/// Largest graph [`mixing_time`] will evolve (it keeps an `n × n` state).
pub const MIXING_MAX_N: usize = 4096;
/// Step budget before [`mixing_time`] gives up.
pub const MIXING_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub t_mix: usize,
    pub delta: f64,
    /// Every `τ` in `[t_mix, verified_horizon]` was checked (`= 2 t_mix`).
    pub verified_horizon: usize,
    /// Times the condition failed again inside the verification window.
    pub restarts: usize,
    pub mode: WalkMode,
}

/// `(1 / (2cn))²`, with `c` measured on `g`.
pub fn default_delta(g: &Graph) -> Result<f64> {
    let c = uniformity(g)?.c;
    Ok((1.0 / (2.0 * c * g.n() as f64)).powi(2))
}

/// Smallest `t` with `max_v ‖μ_v^t − μ‖_∞ ≤ delta`, re-verified up to `2t`.
///
/// All `n` start distributions are evolved together, one sparse
/// transition per step. If the distance climbs back above `delta` inside
/// the verification window the search resumes from that point.
pub fn mixing_time(g: &Graph, delta: f64, mode: WalkMode) -> Result<MixingReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid!("delta must be positive and finite, got {delta}"));
    }
    let n = g.n();
    if n > MIXING_MAX_N {
        return Err(Error::size_exceeded("vertices for mixing time", n as u128, MIXING_MAX_N as u128));
    }
    g.require_connected()?;
    let mu = stationary_distribution(g, mode)?.probs;
    if n == 1 {
        return Ok(MixingReport {
            t_mix: 1,
            delta,
            verified_horizon: 2,
            restarts: 0,
            mode,
        });
    }
    let inv_deg: Vec<f64> = g.degrees().map(|d| 1.0 / d as f64).collect();
    let mut cur = vec![0.0f64; n * n];
    for v in 0..n {
        cur[v * n + v] = 1.0;
    }
    let mut next = vec![0.0f64; n * n];
    let mut first_ok: Option<usize> = None;
    let mut restarts = 0;
    for t in 1..=MIXING_MAX_STEPS {
        let dist = evolve(g, &inv_deg, &mu, mode, &cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
        match (dist <= delta, first_ok) {
            (true, None) => first_ok = Some(t),
            (false, Some(_)) => {
                first_ok = None;
                restarts += 1;
            }
            _ => {}
        }
        if let Some(t0) = first_ok {
            if t >= 2 * t0 {
                return Ok(MixingReport {
                    t_mix: t0,
                    delta,
                    verified_horizon: 2 * t0,
                    restarts,
                    mode,
                });
            }
        }
    }
    Err(Error::NumericFailure(format!(
        "distance did not stay below {delta} within {MIXING_MAX_STEPS} steps"
    )))
}

// One transition for every start row; returns the max ℓ∞ distance to `mu`.
fn evolve(g: &Graph, inv_deg: &[f64], mu: &[f64], mode: WalkMode, cur: &[f64], next: &mut [f64]) -> f64 {
    let n = g.n();
    next.par_chunks_mut(n)
        .zip(cur.par_chunks(n))
        .map(|(out, row)| {
            let mut worst = 0.0f64;
            for w in 0..n {
                let inflow: f64 = g.neighbors(w as u32).iter().map(|&x| row[x as usize] * inv_deg[x as usize]).sum();
                let p = match mode {
                    WalkMode::Simple => inflow,
                    WalkMode::Lazy => 0.5 * (row[w] + inflow),
                };
                out[w] = p;
                worst = worst.max((p - mu[w]).abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Smallest `t` with `(1 − Φ̂²/2)^t · d_max/d_min ≤ delta` (at least 1).
///
/// `phi_hat = None` uses the exact conductance, which is only available
/// for small graphs; otherwise pass any verified lower bound on `Φ(G)`.
pub fn js_upper_bound(g: &Graph, delta: f64, phi_hat: Option<f64>) -> Result<usize> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid!("delta must be positive and finite, got {delta}"));
    }
    let phi = match phi_hat {
        Some(p) => p,
        None => conductance_exact(g)?,
    };
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(invalid!("conductance estimate must lie in (0, 1], got {phi}"));
    }
    let u = uniformity(g)?;
    let ratio = u.max_degree as f64 / u.min_degree as f64;
    let rate = -(1.0 - phi * phi / 2.0).ln();
    let t = ((ratio / delta).ln() / rate - 1e-9).ceil();
    Ok(t.max(1.0) as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{conductance_lower_bound, gen_complete, gen_cycle, gen_erdos_renyi, gen_path};

    // ℓ∞ distance of K_n after t steps, from p_{t+1} = (1 − p_t)/(n − 1).
    fn kn_distance(n: usize, t: usize) -> f64 {
        let nf = n as f64;
        let mut p = 1.0;
        for _ in 0..t {
            p = (1.0 - p) / (nf - 1.0);
        }
        let other = (1.0 - p) / (nf - 1.0);
        (p - 1.0 / nf).abs().max((other - 1.0 / nf).abs())
    }

    #[test]
    fn complete_graph_matches_recurrence() {
        let delta = (1.0f64 / 32.0).powi(2);
        assert!(kn_distance(16, 2) > delta && kn_distance(16, 3) <= delta);
        let g = gen_complete(16).unwrap();
        let r = mixing_time(&g, delta, WalkMode::Simple).unwrap();
        assert_eq!(r.t_mix, 3);
        assert_eq!(r.verified_horizon, 6);
        assert_eq!(r.restarts, 0);
        assert_eq!(default_delta(&g).unwrap(), delta);
    }

    #[test]
    fn bipartite_needs_lazy() {
        let c4 = gen_cycle(4).unwrap();
        assert!(matches!(mixing_time(&c4, 0.01, WalkMode::Simple), Err(Error::NonMixingGraph(_))));
        let r = mixing_time(&c4, 0.01, WalkMode::Lazy).unwrap();
        assert!(r.t_mix >= 1);
        assert!(mixing_time(&gen_path(6).unwrap(), 1e-4, WalkMode::Lazy).is_ok());
    }

    #[test]
    fn larger_delta_never_slower() {
        let g = gen_erdos_renyi(40, 0.2, 3).unwrap();
        let mut last = usize::MAX;
        for delta in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2] {
            let t = mixing_time(&g, delta, WalkMode::Simple).unwrap().t_mix;
            assert!(t <= last);
            last = t;
        }
    }

    #[test]
    fn js_bound_examples() {
        let k4 = gen_complete(4).unwrap();
        assert_eq!(js_upper_bound(&k4, 1.0 / 64.0, None).unwrap(), 17);
        let expected = ((64.0f64).ln() / (9.0f64 / 7.0).ln()).ceil() as usize;
        assert_eq!(expected, 17);
        assert_eq!(js_upper_bound(&k4, 0.5, Some(1.0)).unwrap(), 1);
        assert!(js_upper_bound(&k4, 0.5, Some(0.0)).is_err());
        assert!(js_upper_bound(&k4, 0.5, Some(1.1)).is_err());
    }

    #[test]
    fn js_bound_dominates_mixing_time() {
        for seed in 0..5 {
            let g = gen_erdos_renyi(18, 0.4, seed).unwrap();
            if !g.is_connected() || g.is_bipartite() {
                continue;
            }
            let delta = default_delta(&g).unwrap();
            let t = mixing_time(&g, delta, WalkMode::Simple).unwrap().t_mix;
            assert!(t <= js_upper_bound(&g, delta, None).unwrap());
            let phi = conductance_lower_bound(&g).unwrap();
            assert!(t <= js_upper_bound(&g, delta, Some(phi)).unwrap());
        }
    }

    #[test]
    fn size_guard() {
        let g = gen_cycle(MIXING_MAX_N + 1).unwrap();
        assert!(matches!(mixing_time(&g, 0.1, WalkMode::Lazy), Err(Error::SizeExceeded { .. })));
    }
}
