//! Undirected simple graphs with canonical edge numbering.
//!
//! Edge ids are assigned in lexicographic order of `(min, max)` endpoint
//! pairs, so two graphs with the same edge set always agree on column
//! order for edge-indexed matrices.

mod analysis;
mod generators;

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use analysis::{
    conductance_exact, conductance_lower_bound, edge_expansion_exact, spectral_gap,
    stationary_distribution, uniformity, Distribution, UniformityReport, CONDUCTANCE_MAX_N,
};
pub use generators::{
    gen_complete, gen_cycle, gen_erdos_renyi, gen_path, gen_random_regular, gen_star,
    REGULAR_RETRY_BUDGET,
};

pub type Vertex = u32;
pub type EdgeId = u32;

/// Simple undirected graph, immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<Vec<Vertex>>,
    // incident[v][i] is the id of edge {v, adjacency[v][i]}
    incident: Vec<Vec<EdgeId>>,
    edges: Vec<(Vertex, Vertex)>,
    connected: bool,
    bipartite: bool,
}

impl Graph {
    /// Builds a graph from an edge list. Endpoints may be given in either
    /// order; self-loops, duplicates and out-of-range ids are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vertex, Vertex)>,
    {
        if n == 0 {
            return Err(invalid!("graph must have at least one vertex"));
        }
        if n > Vertex::MAX as usize {
            return Err(invalid!("vertex count {n} too large"));
        }
        let mut list: Vec<(Vertex, Vertex)> = Vec::new();
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(invalid!("edge ({u}, {v}) out of range for n = {n}"));
            }
            if u == v {
                return Err(invalid!("self-loop at vertex {u}"));
            }
            list.push((u.min(v), u.max(v)));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(invalid!("parallel edge ({}, {})", w[0].0, w[0].1));
        }
        Ok(Self::from_sorted_unique(n, list))
    }

    pub(crate) fn from_sorted_unique(n: usize, edges: Vec<(Vertex, Vertex)>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in &edges {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let mut incident: Vec<Vec<EdgeId>> =
            adjacency.iter().map(|a| vec![0; a.len()]).collect();
        for (id, &(u, v)) in edges.iter().enumerate() {
            let iu = adjacency[u as usize].binary_search(&v).unwrap();
            let iv = adjacency[v as usize].binary_search(&u).unwrap();
            incident[u as usize][iu] = id as EdgeId;
            incident[v as usize][iv] = id as EdgeId;
        }
        let (connected, bipartite) = traverse(&adjacency);
        Graph {
            n,
            adjacency,
            incident,
            edges,
            connected,
            bipartite,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adjacency[v as usize].len()
    }

    pub fn degrees(&self) -> impl Iterator<Item = usize> + '_ {
        self.adjacency.iter().map(Vec::len)
    }

    pub fn min_degree(&self) -> usize {
        self.degrees().min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().max().unwrap_or(0)
    }

    pub fn neighbors(&self, v: Vertex) -> &[Vertex] {
        &self.adjacency[v as usize]
    }

    /// Edge ids parallel to [`Graph::neighbors`].
    pub fn incident_edges(&self, v: Vertex) -> &[EdgeId] {
        &self.incident[v as usize]
    }

    pub fn edges(&self) -> &[(Vertex, Vertex)] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> (Vertex, Vertex) {
        self.edges[id as usize]
    }

    pub fn edge_id(&self, u: Vertex, v: Vertex) -> Option<EdgeId> {
        if u as usize >= self.n {
            return None;
        }
        self.adjacency[u as usize]
            .binary_search(&v)
            .ok()
            .map(|i| self.incident[u as usize][i])
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.edge_id(u, v).is_some()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn is_bipartite(&self) -> bool {
        self.bipartite
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        (v as usize) < self.n
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.connected {
            Ok(())
        } else {
            Err(Error::DegenerateGraph("graph is not connected".into()))
        }
    }

    /// Re-checks every structural invariant. Used before writing files.
    pub fn validate(&self) -> Result<()> {
        for (u, list) in self.adjacency.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid!("adjacency of {u} not strictly sorted"));
            }
            for (i, &v) in list.iter().enumerate() {
                if v as usize == u {
                    return Err(invalid!("self-loop at {u}"));
                }
                if self.adjacency[v as usize].binary_search(&(u as Vertex)).is_err() {
                    return Err(invalid!("asymmetric adjacency {u} -> {v}"));
                }
                let id = self.incident[u][i] as usize;
                if self.edges.get(id) != Some(&((u as Vertex).min(v), (u as Vertex).max(v))) {
                    return Err(invalid!("edge id mismatch at {u} -> {v}"));
                }
            }
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid!("edge list not in canonical order"));
        }
        Ok(())
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serializes")
    }

    /// Parses either the JSON object form or a whitespace edge list.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            let file: GraphFile = serde_json::from_str(text)?;
            return Graph::from_edges(file.n, file.edges.into_iter().map(|[u, v]| (u, v)));
        }
        let mut edges = Vec::new();
        let mut max_id = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let mut next = || -> Result<Vertex> {
                fields
                    .next()
                    .ok_or_else(|| Error::Parse(format!("line {}: expected \"u v\"", lineno + 1)))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let (u, v) = (next()?, next()?);
            max_id = max_id.max(Some(u.max(v)));
            edges.push((u, v));
        }
        let n = max_id.map_or(0, |m| m as usize + 1);
        Graph::from_edges(n, edges)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Graph::parse(&fs::read_to_string(path)?)
    }
}

/// On-disk JSON form: `{"n": int, "edges": [[u, v], ...]}`, `u < v`,
/// sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[Vertex; 2]>,
}

// BFS over all components: (connected, bipartite).
fn traverse(adjacency: &[Vec<Vertex>]) -> (bool, bool) {
    let n = adjacency.len();
    let mut color = vec![u8::MAX; n];
    let mut components = 0;
    let mut bipartite = true;
    let mut queue = VecDeque::new();
    for root in 0..n {
        if color[root] != u8::MAX {
            continue;
        }
        components += 1;
        color[root] = 0;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                let v = v as usize;
                if color[v] == u8::MAX {
                    color[v] = 1 - color[u];
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    bipartite = false;
                }
            }
        }
    }
    (components == 1, bipartite)
}
