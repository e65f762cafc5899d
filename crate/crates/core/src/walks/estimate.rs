//! Monte Carlo estimators over independent walks.
//!
//! Trial `i` always draws from `stream(seed, i)`, so two estimators called
//! with the same seed see the same walks (up to early exit) and results do
//! not depend on the worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{step, Item, StartRule, WalkMode};
use crate::error::{invalid, Error, Result};
use crate::graph::{uniformity, EdgeId, Graph, Vertex};
use crate::rng::{stream, StreamRng};

pub const DEFAULT_TRIALS: u64 = 100_000;
pub const INFLUENCE_TRIALS: u64 = 1_000_000;

const Z95: f64 = 1.96;
/// Pairs with fewer conditional samples are skipped by [`check_influence`].
const MIN_CONDITIONAL_SAMPLES: u64 = 30;
/// Vertices sampled per side in [`check_influence`].
const INFLUENCE_MAX_VERTICES: usize = 64;

/// Proportion with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub trials: u64,
    pub half_width: f64,
}

impl Estimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        let value = if trials == 0 { 0.0 } else { hits as f64 / trials as f64 };
        Estimate {
            value,
            trials,
            half_width: half_width(value, trials),
        }
    }

    /// Standard error (half-width / 1.96).
    pub fn sigma(&self) -> f64 {
        self.half_width / Z95
    }
}

fn half_width(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    Z95 * (p * (1.0 - p) / trials as f64).sqrt()
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        Err(invalid!("trials must be at least 1"))
    } else {
        Ok(())
    }
}

fn count_hits<F>(trials: u64, seed: u64, f: F) -> u64
where
    F: Fn(u64, &mut StreamRng) -> bool + Sync,
{
    (0..trials)
        .into_par_iter()
        .filter(|&i| f(i, &mut stream(seed, i)))
        .count() as u64
}

/// Runs a fixed-length walk, calling `visit(vertex, edge)` for the start
/// (edge `None`) and after every step. Stops early when `visit` returns false.
fn trace_fixed<F>(g: &Graph, start: Vertex, t: usize, mode: WalkMode, rng: &mut StreamRng, mut visit: F)
where
    F: FnMut(Vertex, Option<EdgeId>) -> bool,
{
    let mut v = start;
    if !visit(v, None) {
        return;
    }
    for _ in 0..t {
        let e = step(g, v, mode, rng).map(|(w, e)| {
            v = w;
            e
        });
        if !visit(v, e) {
            return;
        }
    }
}

fn prepare(g: &Graph, start: &StartRule, t: usize, trials: u64) -> Result<()> {
    check_trials(trials)?;
    start.validate(g)?;
    if t > 0 && g.min_degree() == 0 {
        return Err(Error::DegenerateGraph("walks need every vertex to have a neighbor".into()));
    }
    Ok(())
}

/// `π_item`: probability that a `t`-step walk touches `item`.
pub fn estimate_pi_item(
    g: &Graph,
    item: Item,
    t: usize,
    start: &StartRule,
    mode: WalkMode,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    estimate_pi_item_avoiding(g, item, &[], t, start, mode, trials, seed)
}

/// `π_{item, avoid}`: the walk touches `item` and nothing in `avoid`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pi_item_avoiding(
    g: &Graph,
    item: Item,
    avoid: &[Item],
    t: usize,
    start: &StartRule,
    mode: WalkMode,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    prepare(g, start, t, trials)?;
    check_targets(g, item, avoid)?;
    let hits = count_hits(trials, seed, |i, rng| {
        let s = start.resolve(g, i, rng);
        let mut hit = false;
        let mut clean = true;
        trace_fixed(g, s, t, mode, rng, |v, e| {
            if avoid.iter().any(|a| a.touched(v, e)) {
                clean = false;
                return false;
            }
            hit |= item.touched(v, e);
            true
        });
        hit && clean
    });
    Ok(Estimate::from_counts(hits, trials))
}

fn check_targets(g: &Graph, item: Item, avoid: &[Item]) -> Result<()> {
    item.validate(g)?;
    for a in avoid {
        a.validate(g)?;
        if a.kind() != item.kind() {
            return Err(invalid!("avoid set mixes {} and {} items", a.kind().name(), item.kind().name()));
        }
    }
    if avoid.contains(&item) {
        return Err(invalid!("target {} {} is in the avoid set", item.kind().name(), item.id()));
    }
    Ok(())
}

/// Sink-terminated estimate; cap-exceeded trials count as misses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkEstimate {
    pub estimate: Estimate,
    pub cap_exceeded: u64,
}

/// `π^{(sink)}_{item, avoid}`: a walk run until it reaches `sink` touches
/// `item` and nothing in `avoid` on the way.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pi_sink_avoiding(
    g: &Graph,
    item: Item,
    avoid: &[Item],
    sink: Vertex,
    cap: usize,
    start: &StartRule,
    mode: WalkMode,
    trials: u64,
    seed: u64,
) -> Result<SinkEstimate> {
    prepare(g, start, 1, trials)?;
    check_targets(g, item, avoid)?;
    if !g.contains_vertex(sink) {
        return Err(invalid!("sink {sink} out of range"));
    }
    if cap == 0 {
        return Err(invalid!("step cap must be at least 1"));
    }
    let sink_item = Item::Vertex(sink);
    if sink_item == item || avoid.contains(&sink_item) {
        return Err(invalid!("sink {sink} must be disjoint from the target and avoid set"));
    }
    #[derive(Clone, Copy)]
    enum Outcome {
        Hit,
        Miss,
        Capped,
    }
    let outcomes: Vec<(u64, u64)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let mut v = start.resolve(g, i, &mut rng);
            let mut hit = item.touched(v, None);
            let mut steps = 0usize;
            let outcome = loop {
                if avoid.iter().any(|a| a.touched(v, None)) {
                    break Outcome::Miss;
                }
                if v == sink {
                    break if hit { Outcome::Hit } else { Outcome::Miss };
                }
                if steps >= cap {
                    break Outcome::Capped;
                }
                let e = step(g, v, mode, &mut rng).map(|(w, e)| {
                    v = w;
                    e
                });
                steps += 1;
                if avoid.iter().any(|a| a.touched(v, e)) {
                    break Outcome::Miss;
                }
                hit |= item.touched(v, e);
            };
            match outcome {
                Outcome::Hit => (1, 0),
                Outcome::Miss => (0, 0),
                Outcome::Capped => (0, 1),
            }
        })
        .collect();
    let (hits, capped) = outcomes
        .iter()
        .fold((0, 0), |(h, c), &(a, b)| (h + a, c + b));
    Ok(SinkEstimate {
        estimate: Estimate::from_counts(hits, trials),
        cap_exceeded: capped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisitTailReport {
    /// Empirical probability of more than `k` visits.
    pub tail: Estimate,
    pub pi: Estimate,
    pub k: usize,
    /// `π/4 + 3·(tail half-width + π half-width / 4)`.
    pub threshold: f64,
    pub passed: bool,
}

/// Compares P[walk touches `item` more than `k` times] with `π_item/4`.
#[allow(clippy::too_many_arguments)]
pub fn check_visit_count_tail(
    g: &Graph,
    item: Item,
    t: usize,
    k: usize,
    start: &StartRule,
    mode: WalkMode,
    trials: u64,
    seed: u64,
) -> Result<VisitTailReport> {
    prepare(g, start, t, trials)?;
    item.validate(g)?;
    let counts: (u64, u64) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let s = start.resolve(g, i, &mut rng);
            let mut visits = 0usize;
            trace_fixed(g, s, t, mode, &mut rng, |v, e| {
                visits += item.touched(v, e) as usize;
                true
            });
            ((visits > 0) as u64, (visits > k) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let pi = Estimate::from_counts(counts.0, trials);
    let tail = Estimate::from_counts(counts.1, trials);
    let threshold = pi.value / 4.0 + 3.0 * (tail.half_width + pi.half_width / 4.0);
    Ok(VisitTailReport {
        tail,
        pi,
        k,
        threshold,
        passed: tail.value <= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyVisitReport {
    pub estimate: Estimate,
    pub k: usize,
    /// `k / D` with `D` the minimum degree.
    pub bound: f64,
    pub passed: bool,
}

/// P[`v` is among the first `k` walk positions `v_0 .. v_{k-1}`] against `k/D`.
pub fn check_early_visit(
    g: &Graph,
    v: Vertex,
    k: usize,
    start: &StartRule,
    mode: WalkMode,
    trials: u64,
    seed: u64,
) -> Result<EarlyVisitReport> {
    prepare(g, start, k, trials)?;
    Item::Vertex(v).validate(g)?;
    if start.designated().contains(&v) {
        return Err(invalid!("vertex {v} is designated"));
    }
    let min_degree = uniformity(g)?.min_degree;
    let hits = if k == 0 {
        0
    } else {
        count_hits(trials, seed, |i, rng| {
            let s = start.resolve(g, i, rng);
            let mut seen = false;
            trace_fixed(g, s, k - 1, mode, rng, |w, _| {
                seen = w == v;
                !seen
            });
            seen
        })
    };
    let estimate = Estimate::from_counts(hits, trials);
    let bound = k as f64 / min_degree as f64;
    Ok(EarlyVisitReport {
        estimate,
        k,
        bound,
        passed: estimate.value <= bound + 3.0 * estimate.sigma(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub i: usize,
    pub j: usize,
    pub trials: u64,
    /// `2/(3cn)`.
    pub bound: f64,
    /// Largest `|P[v_i=u | v_j=v] − P[v_i=u]|` over checked pairs.
    pub max_deviation: f64,
    /// Largest `deviation − 3σ` over checked pairs.
    pub max_excess: f64,
    pub worst_pair: Option<(Vertex, Vertex)>,
    pub pairs_checked: u64,
    pub pairs_skipped: u64,
    pub passed: bool,
}

/// Near-independence of `v_i` and `v_j` once `j − i ≥ t_mix`.
///
/// Every `(u, v)` pair over a sampled vertex subset (all vertices when
/// `n ≤ 64`) is compared against `2/(3cn) + 3σ`, with `σ` the standard
/// error of the difference under independence.
#[allow(clippy::too_many_arguments)]
pub fn check_influence(
    g: &Graph,
    i: usize,
    j: usize,
    t_mix: usize,
    start: &StartRule,
    mode: WalkMode,
    trials: u64,
    seed: u64,
) -> Result<InfluenceReport> {
    prepare(g, start, j, trials)?;
    if j < i + t_mix {
        return Err(invalid!("need j - i >= T = {t_mix}, got i = {i}, j = {j}"));
    }
    if mode == WalkMode::Simple && g.is_bipartite() {
        return Err(Error::NonMixingGraph("bipartite graph without lazy mode".into()));
    }
    let c = uniformity(g)?.c;
    let n = g.n();
    let sample = influence_vertices(n, seed);
    let slot: BTreeMap<Vertex, usize> = sample.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let s = sample.len();

    // (joint[u][v], count of v_i = u, count of v_j = v), indexed by slot.
    let zero = || (vec![0u64; s * s], vec![0u64; s], vec![0u64; s]);
    let (joint, at_i, at_j) = (0..trials)
        .into_par_iter()
        .fold(zero, |mut acc, trial| {
            let mut rng = stream(seed, trial);
            let start_v = start.resolve(g, trial, &mut rng);
            let (mut vi, mut vj) = (start_v, start_v);
            let mut pos = 0usize;
            trace_fixed(g, start_v, j, mode, &mut rng, |w, _| {
                if pos == i {
                    vi = w;
                }
                if pos == j {
                    vj = w;
                }
                pos += 1;
                true
            });
            let (a, b) = (slot.get(&vi), slot.get(&vj));
            if let Some(&a) = a {
                acc.1[a] += 1;
            }
            if let Some(&b) = b {
                acc.2[b] += 1;
            }
            if let (Some(&a), Some(&b)) = (a, b) {
                acc.0[a * s + b] += 1;
            }
            acc
        })
        .reduce(zero, |mut x, y| {
            x.0.iter_mut().zip(&y.0).for_each(|(p, q)| *p += q);
            x.1.iter_mut().zip(&y.1).for_each(|(p, q)| *p += q);
            x.2.iter_mut().zip(&y.2).for_each(|(p, q)| *p += q);
            x
        });

    let bound = 2.0 / (3.0 * c * n as f64);
    let mut report = InfluenceReport {
        i,
        j,
        trials,
        bound,
        max_deviation: 0.0,
        max_excess: f64::NEG_INFINITY,
        worst_pair: None,
        pairs_checked: 0,
        pairs_skipped: 0,
        passed: true,
    };
    let total = trials as f64;
    for (a, &u) in sample.iter().enumerate() {
        let marginal = at_i[a] as f64 / total;
        for (b, &v) in sample.iter().enumerate() {
            let nv = at_j[b];
            if nv < MIN_CONDITIONAL_SAMPLES {
                report.pairs_skipped += 1;
                continue;
            }
            report.pairs_checked += 1;
            let conditional = joint[a * s + b] as f64 / nv as f64;
            let deviation = (conditional - marginal).abs();
            let sigma = (marginal * (1.0 - marginal) * (1.0 / nv as f64 + 1.0 / total)).sqrt();
            let excess = deviation - 3.0 * sigma;
            report.max_deviation = report.max_deviation.max(deviation);
            if excess > report.max_excess {
                report.max_excess = excess;
                report.worst_pair = Some((u, v));
            }
        }
    }
    report.passed = report.pairs_checked > 0 && report.max_excess <= bound;
    Ok(report)
}

fn influence_vertices(n: usize, seed: u64) -> Vec<Vertex> {
    let mut all: Vec<Vertex> = (0..n as Vertex).collect();
    if n > INFLUENCE_MAX_VERTICES {
        use rand::seq::SliceRandom;
        all.shuffle(&mut stream(seed, u64::MAX));
        all.truncate(INFLUENCE_MAX_VERTICES);
        all.sort_unstable();
    }
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_complete, gen_cycle, gen_path};

    fn kn_pi(n: f64, t: i32) -> f64 {
        1.0 - (1.0 - 1.0 / n) * (1.0 - 1.0 / (n - 1.0)).powi(t)
    }

    #[test]
    fn pi_on_complete_graph_matches_closed_form() {
        let g = gen_complete(10).unwrap();
        let est = estimate_pi_item(&g, Item::Vertex(3), 5, &StartRule::UniformRandom, WalkMode::Simple, 100_000, 1)
            .unwrap();
        let exact = kn_pi(10.0, 5);
        assert!((exact - 0.5006).abs() < 1e-3);
        assert!((est.value - exact).abs() <= 4.0 * est.half_width, "{est:?} vs {exact}");
    }

    #[test]
    fn pi_degenerate_cases() {
        let g = gen_complete(8).unwrap();
        let est = estimate_pi_item(&g, Item::Vertex(0), 0, &StartRule::UniformRandom, WalkMode::Simple, 80_000, 2)
            .unwrap();
        assert!((est.value - 0.125).abs() <= 4.0 * est.half_width);
        let k2 = gen_complete(2).unwrap();
        let est = estimate_pi_item(&k2, Item::Edge(0), 1, &StartRule::UniformRandom, WalkMode::Simple, 1000, 3)
            .unwrap();
        assert_eq!(est.value, 1.0);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn avoiding_is_coupled_and_nested() {
        let g = gen_complete(10).unwrap();
        let rule = StartRule::UniformRandom;
        let item = Item::Vertex(0);
        let run = |avoid: &[Item]| {
            estimate_pi_item_avoiding(&g, item, avoid, 5, &rule, WalkMode::Simple, 100_000, 5).unwrap()
        };
        let plain = estimate_pi_item(&g, item, 5, &rule, WalkMode::Simple, 100_000, 5).unwrap();
        let none = run(&[]);
        let one = run(&[Item::Vertex(1)]);
        let two = run(&[Item::Vertex(1), Item::Vertex(2)]);
        assert_eq!(plain, none);
        assert!(two.value <= one.value && one.value <= none.value);
        assert!(two.value > 0.0);
    }

    #[test]
    fn avoid_errors_and_blocked_paths() {
        let g = gen_path(5).unwrap();
        let rule = StartRule::Fixed { vertex: 0 };
        let err = estimate_pi_item_avoiding(&g, Item::Vertex(4), &[Item::Vertex(4)], 9, &rule, WalkMode::Simple, 10, 0);
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
        let blocked =
            estimate_pi_item_avoiding(&g, Item::Vertex(4), &[Item::Vertex(2)], 30, &rule, WalkMode::Simple, 5000, 0)
                .unwrap();
        assert_eq!(blocked.value, 0.0);
        let mixed = estimate_pi_item_avoiding(&g, Item::Vertex(4), &[Item::Edge(0)], 3, &rule, WalkMode::Simple, 10, 0);
        assert!(mixed.is_err());
    }

    #[test]
    fn sink_symmetry_on_small_complete_graphs() {
        let k3 = gen_complete(3).unwrap();
        let r = estimate_pi_sink_avoiding(
            &k3,
            Item::Vertex(1),
            &[],
            2,
            1000,
            &StartRule::Fixed { vertex: 0 },
            WalkMode::Simple,
            100_000,
            7,
        )
        .unwrap();
        assert!((r.estimate.value - 0.5).abs() <= 4.0 * r.estimate.half_width);
        assert_eq!(r.cap_exceeded, 0);

        let k50 = gen_complete(50).unwrap();
        let avoid = [Item::Vertex(1), Item::Vertex(2)];
        let r = estimate_pi_sink_avoiding(
            &k50,
            Item::Vertex(0),
            &avoid,
            49,
            125_000,
            &StartRule::UniformRandom,
            WalkMode::Simple,
            100_000,
            8,
        )
        .unwrap();
        assert!((r.estimate.value * 12.0 - 1.0).abs() < 0.2, "{r:?}");
    }

    #[test]
    fn sink_guards() {
        let g = gen_complete(4).unwrap();
        let rule = StartRule::UniformRandom;
        let bad = estimate_pi_sink_avoiding(&g, Item::Vertex(1), &[Item::Vertex(3)], 3, 64, &rule, WalkMode::Simple, 10, 0);
        assert!(bad.is_err());
        let bad = estimate_pi_sink_avoiding(&g, Item::Vertex(3), &[], 3, 64, &rule, WalkMode::Simple, 10, 0);
        assert!(bad.is_err());
        // Path cut by the avoid set: item 4 is unreachable from 0 without passing 2.
        let p = gen_path(6).unwrap();
        let r = estimate_pi_sink_avoiding(
            &p,
            Item::Vertex(4),
            &[Item::Vertex(2)],
            5,
            1000,
            &StartRule::Fixed { vertex: 0 },
            WalkMode::Simple,
            2000,
            1,
        )
        .unwrap();
        assert_eq!(r.estimate.value, 0.0);
    }

    #[test]
    fn capped_trials_reported() {
        let g = gen_cycle(31).unwrap();
        let r = estimate_pi_sink_avoiding(
            &g,
            Item::Vertex(1),
            &[],
            15,
            3,
            &StartRule::Fixed { vertex: 0 },
            WalkMode::Simple,
            500,
            1,
        )
        .unwrap();
        assert_eq!(r.cap_exceeded, 500);
        assert_eq!(r.estimate.value, 0.0);
    }

    #[test]
    fn visit_tail() {
        let g = gen_complete(16).unwrap();
        let rule = StartRule::UniformRandom;
        let r = check_visit_count_tail(&g, Item::Vertex(0), 20, 20, &rule, WalkMode::Simple, 10_000, 1).unwrap();
        assert_eq!(r.tail.value, 0.0);
        assert!(r.passed);
        let r = check_visit_count_tail(&g, Item::Vertex(0), 60, 24, &rule, WalkMode::Simple, 100_000, 2).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn early_visit() {
        let g = gen_complete(10).unwrap();
        let rule = StartRule::UniformRandom;
        let r = check_early_visit(&g, 4, 0, &rule, WalkMode::Simple, 1000, 1).unwrap();
        assert_eq!(r.estimate.value, 0.0);
        assert!(r.passed);
        let r = check_early_visit(&g, 4, 3, &rule, WalkMode::Simple, 100_000, 1).unwrap();
        assert!(r.passed && r.estimate.value > 0.2, "{r:?}");
        let rr = StartRule::designated_or_uniform(&[4]);
        assert!(check_early_visit(&g, 4, 3, &rr, WalkMode::Simple, 10, 1).is_err());
    }

    #[test]
    fn influence_on_k16() {
        let g = gen_complete(16).unwrap();
        let rule = StartRule::UniformRandom;
        let r = check_influence(&g, 3, 6, 3, &rule, WalkMode::Simple, 200_000, 4).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.pairs_checked, 256);
        assert!(check_influence(&g, 3, 5, 3, &rule, WalkMode::Simple, 10, 4).is_err());
        let c4 = gen_cycle(4).unwrap();
        assert!(matches!(
            check_influence(&c4, 0, 9, 3, &rule, WalkMode::Simple, 10, 4),
            Err(Error::NonMixingGraph(_))
        ));
    }

    #[test]
    fn reruns_are_identical() {
        let g = gen_complete(12).unwrap();
        let rule = StartRule::UniformRandom;
        let a = estimate_pi_item(&g, Item::Edge(5), 7, &rule, WalkMode::Simple, 20_000, 9).unwrap();
        let b = estimate_pi_item(&g, Item::Edge(5), 7, &rule, WalkMode::Simple, 20_000, 9).unwrap();
        assert_eq!(a, b);
    }
}
