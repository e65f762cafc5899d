use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Graph, Vertex};
use crate::error::{invalid, Error, Result};

/// Restarts allowed before the pairing generator gives up.
pub const REGULAR_RETRY_BUDGET: usize = 1000;

/// Complete graph `K_n`.
pub fn gen_complete(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(invalid!("complete graph needs n >= 2, got {n}"));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n as Vertex {
        for v in u + 1..n as Vertex {
            edges.push((u, v));
        }
    }
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Erdős–Rényi `G(n, p)`: every pair kept independently with probability `p`.
/// Pairs are visited in canonical order, one uniform draw each.
pub fn gen_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(invalid!("G(n, p) needs n >= 1"));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid!("edge probability must lie in (0, 1], got {p}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n as Vertex {
        for v in u + 1..n as Vertex {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Simple `degree`-regular graph from the pairing model.
///
/// Points are matched one pair at a time; a pair that would create a loop
/// or a repeated edge is redrawn, and the whole matching restarts when no
/// admissible pair is left. At most [`REGULAR_RETRY_BUDGET`] restarts.
pub fn gen_random_regular(n: usize, degree: usize, seed: u64) -> Result<Graph> {
    if degree == 0 || degree >= n {
        return Err(invalid!("need 0 < D < n, got D = {degree}, n = {n}"));
    }
    if (n * degree) % 2 == 1 {
        return Err(invalid!("n * D must be even, got n = {n}, D = {degree}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..REGULAR_RETRY_BUDGET {
        if let Some(edges) = try_pairing(n, degree, &mut rng) {
            return Graph::from_edges(n, edges);
        }
    }
    Err(Error::GenerationFailure(format!(
        "no simple {degree}-regular pairing on {n} vertices after {REGULAR_RETRY_BUDGET} restarts"
    )))
}

fn try_pairing(n: usize, degree: usize, rng: &mut ChaCha8Rng) -> Option<Vec<(Vertex, Vertex)>> {
    let mut points: Vec<Vertex> = (0..n as Vertex)
        .flat_map(|v| std::iter::repeat_n(v, degree))
        .collect();
    points.shuffle(rng);
    let mut adjacent = vec![Vec::<Vertex>::with_capacity(degree); n];
    let linked = |adj: &Vec<Vec<Vertex>>, u: Vertex, v: Vertex| adj[u as usize].contains(&v);
    let mut edges = Vec::with_capacity(n * degree / 2);
    while !points.is_empty() {
        let mut misses = 0;
        let (i, j) = loop {
            let i = rng.random_range(0..points.len());
            let j = rng.random_range(0..points.len());
            let (u, v) = (points[i], points[j]);
            if i != j && u != v && !linked(&adjacent, u, v) {
                break (i, j);
            }
            misses += 1;
            if misses > 64 {
                // Stuck? Look for any admissible pair before drawing again.
                let any = (0..points.len()).any(|a| {
                    (a + 1..points.len()).any(|b| {
                        let (u, v) = (points[a], points[b]);
                        u != v && !linked(&adjacent, u, v)
                    })
                });
                if !any {
                    return None;
                }
                misses = 0;
            }
        };
        let (u, v) = (points[i], points[j]);
        adjacent[u as usize].push(v);
        adjacent[v as usize].push(u);
        edges.push((u, v));
        let (hi, lo) = (i.max(j), i.min(j));
        points.swap_remove(hi);
        points.swap_remove(lo);
    }
    Some(edges)
}

/// Cycle `C_n`.
pub fn gen_cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(invalid!("cycle needs n >= 3, got {n}"));
    }
    let n32 = n as Vertex;
    Graph::from_edges(n, (0..n32).map(|v| (v, (v + 1) % n32)))
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn gen_path(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(invalid!("path needs n >= 2, got {n}"));
    }
    Graph::from_edges(n, (0..n as Vertex - 1).map(|v| (v, v + 1)))
}

/// Star with center 0 and `n - 1` leaves.
pub fn gen_star(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(invalid!("star needs n >= 2, got {n}"));
    }
    Graph::from_edges(n, (1..n as Vertex).map(|v| (0, v)))
}
