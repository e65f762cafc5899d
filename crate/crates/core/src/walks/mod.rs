//! Random-walk engine and Monte Carlo estimators for hitting probabilities.

mod estimate;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::graph::{EdgeId, Graph, Vertex};

pub use estimate::{
    check_early_visit, check_influence, check_visit_count_tail, estimate_pi_item,
    estimate_pi_item_avoiding, estimate_pi_sink_avoiding, EarlyVisitReport, Estimate,
    InfluenceReport, SinkEstimate, VisitTailReport, DEFAULT_TRIALS, INFLUENCE_TRIALS,
};

/// Transition rule for every walk.
///
/// `Lazy` stays put with probability 1/2 before each move. It makes walks
/// on bipartite graphs aperiodic but is not the walk the designs are
/// analyzed with, so it is strictly opt-in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkMode {
    #[default]
    Simple,
    Lazy,
}

/// Whether matrix columns (and estimator targets) are vertices or edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemKind {
    Vertex,
    Edge,
}

impl ItemKind {
    pub fn name(self) -> &'static str {
        match self {
            ItemKind::Vertex => "vertex",
            ItemKind::Edge => "edge",
        }
    }

    /// Number of items of this kind in `g`.
    pub fn count(self, g: &Graph) -> usize {
        match self {
            ItemKind::Vertex => g.n(),
            ItemKind::Edge => g.edge_count(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "id")]
pub enum Item {
    Vertex(Vertex),
    Edge(EdgeId),
}

impl Item {
    pub fn kind(self) -> ItemKind {
        match self {
            Item::Vertex(_) => ItemKind::Vertex,
            Item::Edge(_) => ItemKind::Edge,
        }
    }

    pub fn id(self) -> u32 {
        match self {
            Item::Vertex(v) | Item::Edge(v) => v,
        }
    }

    pub fn of_kind(kind: ItemKind, id: u32) -> Self {
        match kind {
            ItemKind::Vertex => Item::Vertex(id),
            ItemKind::Edge => Item::Edge(id),
        }
    }

    pub(crate) fn validate(self, g: &Graph) -> Result<()> {
        if (self.id() as usize) < self.kind().count(g) {
            Ok(())
        } else {
            Err(invalid!("{} {} out of range", self.kind().name(), self.id()))
        }
    }

    /// Does arriving at `v` through `e` touch this item?
    #[inline]
    pub(crate) fn touched(self, v: Vertex, e: Option<EdgeId>) -> bool {
        match self {
            Item::Vertex(x) => x == v,
            Item::Edge(x) => e == Some(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    LengthReached,
    SinkReached,
    CapExceeded,
}

/// A recorded walk: `vertices[0]` is the start, `edges[i]` the edge used by
/// step `i` (lazy stay-steps repeat the vertex and record no edge).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Walk {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<EdgeId>,
    pub terminated_by: Termination,
}

impl Walk {
    pub fn steps(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Distinct vertices, sorted.
    pub fn visited_vertices(&self) -> Vec<Vertex> {
        sorted_unique(&self.vertices)
    }

    /// Distinct edges, sorted.
    pub fn visited_edges(&self) -> Vec<EdgeId> {
        sorted_unique(&self.edges)
    }

    /// Replays the walk against `g`: consecutive vertices must be joined by
    /// the recorded edge (or equal, for a lazy stay).
    pub fn is_consistent_with(&self, g: &Graph, mode: WalkMode) -> bool {
        if self.vertices.is_empty() || !self.vertices.iter().all(|&v| g.contains_vertex(v)) {
            return false;
        }
        let mut edges = self.edges.iter();
        for pair in self.vertices.windows(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v && mode == WalkMode::Lazy {
                continue;
            }
            match (g.edge_id(u, v), edges.next()) {
                (Some(id), Some(&recorded)) if id == recorded => {}
                _ => return false,
            }
        }
        edges.next().is_none()
    }
}

fn sorted_unique<T: Ord + Copy>(items: &[T]) -> Vec<T> {
    let mut out = items.to_vec();
    out.sort_unstable();
    out.dedup();
    out
}

/// How the start vertex of each walk is chosen.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StartRule {
    #[default]
    UniformRandom,
    /// Walk `i` starts at `designated[i mod r]`.
    DesignatedRoundRobin { designated: Vec<Vertex> },
    /// Each walk picks one of the designated vertices uniformly.
    DesignatedUniform { designated: Vec<Vertex> },
    Fixed { vertex: Vertex },
}

impl StartRule {
    /// Round-robin over `designated`, or uniform when the list is empty.
    pub fn designated_or_uniform(designated: &[Vertex]) -> Self {
        if designated.is_empty() {
            StartRule::UniformRandom
        } else {
            StartRule::DesignatedRoundRobin {
                designated: designated.to_vec(),
            }
        }
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        match self {
            StartRule::UniformRandom => Ok(()),
            StartRule::DesignatedRoundRobin { designated }
            | StartRule::DesignatedUniform { designated } => {
                if designated.is_empty() {
                    return Err(invalid!("designated start rule needs at least one vertex"));
                }
                match designated.iter().find(|&&v| !g.contains_vertex(v)) {
                    Some(v) => Err(invalid!("designated vertex {v} out of range")),
                    None => Ok(()),
                }
            }
            StartRule::Fixed { vertex } if !g.contains_vertex(*vertex) => {
                Err(invalid!("start vertex {vertex} out of range"))
            }
            StartRule::Fixed { .. } => Ok(()),
        }
    }

    /// Start vertex for walk number `index`. Call [`StartRule::validate`] first.
    pub fn resolve<R: Rng + ?Sized>(&self, g: &Graph, index: u64, rng: &mut R) -> Vertex {
        match self {
            StartRule::UniformRandom => rng.random_range(0..g.n() as Vertex),
            StartRule::DesignatedRoundRobin { designated } => {
                designated[(index % designated.len() as u64) as usize]
            }
            StartRule::DesignatedUniform { designated } => {
                designated[rng.random_range(0..designated.len())]
            }
            StartRule::Fixed { vertex } => *vertex,
        }
    }

    pub fn designated(&self) -> &[Vertex] {
        match self {
            StartRule::DesignatedRoundRobin { designated }
            | StartRule::DesignatedUniform { designated } => designated,
            _ => &[],
        }
    }
}

/// One transition from `v`. `None` is a lazy stay.
#[inline]
pub(crate) fn step<R: Rng + ?Sized>(
    g: &Graph,
    v: Vertex,
    mode: WalkMode,
    rng: &mut R,
) -> Option<(Vertex, EdgeId)> {
    if mode == WalkMode::Lazy && rng.random::<bool>() {
        return None;
    }
    let nbrs = g.neighbors(v);
    let i = rng.random_range(0..nbrs.len());
    Some((nbrs[i], g.incident_edges(v)[i]))
}

fn check_start(g: &Graph, start: Vertex, moves: bool) -> Result<()> {
    if !g.contains_vertex(start) {
        return Err(invalid!("start vertex {start} out of range"));
    }
    if moves && g.degree(start) == 0 {
        return Err(invalid!("start vertex {start} is isolated"));
    }
    Ok(())
}

/// Walk of exactly `t` steps from `start`.
pub fn walk_fixed<R: Rng + ?Sized>(
    g: &Graph,
    start: Vertex,
    t: usize,
    mode: WalkMode,
    rng: &mut R,
) -> Result<Walk> {
    check_start(g, start, t > 0)?;
    let mut vertices = Vec::with_capacity(t + 1);
    let mut edges = Vec::with_capacity(t);
    let mut v = start;
    vertices.push(v);
    for _ in 0..t {
        if let Some((w, e)) = step(g, v, mode, rng) {
            v = w;
            edges.push(e);
        }
        vertices.push(v);
    }
    Ok(Walk {
        vertices,
        edges,
        terminated_by: Termination::LengthReached,
    })
}

/// Walk from `start` until the first arrival at `sink`, or `cap` steps.
pub fn walk_to_sink<R: Rng + ?Sized>(
    g: &Graph,
    start: Vertex,
    sink: Vertex,
    cap: usize,
    mode: WalkMode,
    rng: &mut R,
) -> Result<Walk> {
    if !g.contains_vertex(sink) {
        return Err(invalid!("sink {sink} out of range"));
    }
    if cap == 0 {
        return Err(invalid!("step cap must be at least 1"));
    }
    check_start(g, start, start != sink)?;
    let mut vertices = vec![start];
    let mut edges = Vec::new();
    let mut v = start;
    while v != sink {
        if vertices.len() > cap {
            return Ok(Walk {
                vertices,
                edges,
                terminated_by: Termination::CapExceeded,
            });
        }
        if let Some((w, e)) = step(g, v, mode, rng) {
            v = w;
            edges.push(e);
        }
        vertices.push(v);
    }
    Ok(Walk {
        vertices,
        edges,
        terminated_by: Termination::SinkReached,
    })
}

/// Default step cap for sink-terminated walks: `n³`.
pub fn default_cap(g: &Graph) -> usize {
    g.n().saturating_pow(3).max(1)
}
