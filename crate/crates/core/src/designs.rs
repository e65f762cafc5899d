//! Measurement matrices whose rows are the vertex or edge sets of random walks.
//!
//! Design 1: vertex sets of fixed-length walks.
//! Design 2: edge sets of fixed-length walks.
//! Design 3: vertex sets of walks run until a sink.
//! Design 4: edge sets of walks run until a sink.
//!
//! Row `i` draws only from `stream(seed, i)`, so rows are independent and
//! the matrix does not depend on the number of workers.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{uniformity, Graph, Vertex};
use crate::mixing::{default_delta, mixing_time};
use crate::params::{table1_params, Constants, DesignParams, ParamInputs};
use crate::rng::stream;
use crate::walks::{default_cap, walk_fixed, walk_to_sink, ItemKind, StartRule, Termination, Walk, WalkMode};

/// Fresh walks tried per row before a sink design gives up.
pub const SINK_RETRY_BUDGET: usize = 100;

/// How a matrix was produced. `design == 0` marks hand-built matrices.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DesignTag {
    pub design: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<usize>,
    pub m: usize,
    #[serde(default)]
    pub start: StartRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sink: Option<Vertex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    #[serde(default)]
    pub mode: WalkMode,
    /// Sparsity the matrix was sized for, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Designed noise tolerance `e`, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<u64>,
    /// Decoder threshold to use by default, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<u64>,
    /// Parameter table the sizes came from, for `--auto` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<DesignParams>,
}

/// Boolean matrix stored as one sorted item list per row.
///
/// `rows` keep every visited item; `stripped` items are hidden from the
/// column view used by simulation, decoding and disjunctness checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    pub item_kind: ItemKind,
    pub n_items: usize,
    pub stripped: Vec<u32>,
    pub rows: Vec<Vec<u32>>,
    pub design: DesignTag,
    pub seed: u64,
    /// Walk behind each row; not serialized.
    #[serde(skip)]
    pub walks: Vec<Walk>,
}

impl MeasurementMatrix {
    /// Hand-built matrix; rows and stripped ids are sorted and deduplicated.
    pub fn from_rows(item_kind: ItemKind, n_items: usize, rows: Vec<Vec<u32>>, stripped: Vec<u32>) -> Result<Self> {
        let m = rows.len();
        let out = MeasurementMatrix {
            item_kind,
            n_items,
            stripped: sorted_set(stripped),
            rows: rows.into_iter().map(sorted_set).collect(),
            design: DesignTag {
                m,
                ..DesignTag::default()
            },
            seed: 0,
            walks: Vec::new(),
        };
        out.validate()?;
        Ok(out)
    }

    /// `n × n` identity over vertices.
    pub fn identity(n: usize) -> Self {
        Self::from_rows(ItemKind::Vertex, n, (0..n as u32).map(|i| vec![i]).collect(), vec![])
            .expect("identity is well formed")
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn is_stripped(&self, item: u32) -> bool {
        self.stripped.binary_search(&item).is_ok()
    }

    /// Item ids of the column view, ascending.
    pub fn columns(&self) -> Vec<u32> {
        (0..self.n_items as u32).filter(|&i| !self.is_stripped(i)).collect()
    }

    /// Row `i` restricted to the column view.
    pub fn row_view(&self, i: usize) -> impl Iterator<Item = u32> + '_ {
        self.rows[i].iter().copied().filter(|&x| !self.is_stripped(x))
    }

    /// The first `m` rows. Rows come from independent streams, so this is
    /// the matrix the same seed would give with `m` rows.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.m());
        MeasurementMatrix {
            item_kind: self.item_kind,
            n_items: self.n_items,
            stripped: self.stripped.clone(),
            rows: self.rows[..m].to_vec(),
            design: DesignTag {
                m,
                ..self.design.clone()
            },
            seed: self.seed,
            walks: self.walks.get(..m).map(<[Walk]>::to_vec).unwrap_or_default(),
        }
    }

    /// Same rows with extra columns hidden.
    pub fn with_stripped(&self, extra: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut out = self.clone();
        out.stripped.extend(extra);
        out.stripped = sorted_set(std::mem::take(&mut out.stripped));
        out.validate()?;
        Ok(out)
    }

    /// Structural checks run before every write and after every read.
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Parse(format!("malformed matrix: {what}")));
        if self.design.m != self.rows.len() {
            return bad(format!("{} rows but design records m = {}", self.rows.len(), self.design.m));
        }
        if !is_strict_sorted(&self.stripped) || self.stripped.last().is_some_and(|&x| x as usize >= self.n_items) {
            return bad("stripped ids must be sorted, unique and in range".into());
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !is_strict_sorted(row) || row.last().is_some_and(|&x| x as usize >= self.n_items) {
                return bad(format!("row {i} must be sorted, unique and in range"));
            }
        }
        if !self.walks.is_empty() && self.walks.len() != self.rows.len() {
            return bad("walk count differs from row count".into());
        }
        Ok(())
    }

    /// Replays the recorded walks against `g`: each walk must be a legal
    /// walk, and each row exactly its vertex or edge set.
    pub fn verify_consistency(&self, g: &Graph) -> Result<()> {
        if self.walks.len() != self.rows.len() {
            return Err(invalid!("matrix carries no walks to replay"));
        }
        if self.n_items != self.item_kind.count(g) {
            return Err(invalid!("matrix has {} columns, graph has {} {}s", self.n_items, self.item_kind.count(g), self.item_kind.name()));
        }
        for (i, (row, walk)) in self.rows.iter().zip(&self.walks).enumerate() {
            if !walk.is_consistent_with(g, self.design.mode) {
                return Err(invalid!("walk {i} is not a walk on the graph"));
            }
            let visited = match self.item_kind {
                ItemKind::Vertex => walk.visited_vertices(),
                ItemKind::Edge => walk.visited_edges(),
            };
            if &visited != row {
                return Err(invalid!("row {i} differs from the set visited by its walk"));
            }
            if let Some(sink) = self.design.sink {
                if walk.vertices.last() != Some(&sink) || walk.vertices[..walk.vertices.len() - 1].contains(&sink) {
                    return Err(invalid!("walk {i} does not end at its first arrival at sink {sink}"));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        Ok(serde_json::to_string(self)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m: MeasurementMatrix = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

fn sorted_set(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    v.dedup();
    v
}

fn is_strict_sorted(v: &[u32]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Everything needed to build one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub design: u8,
    pub m: usize,
    /// Walk length for designs 1 and 2.
    #[serde(default)]
    pub t: usize,
    #[serde(default)]
    pub start: StartRule,
    /// Sink for designs 3 and 4.
    #[serde(default)]
    pub sink: Option<Vertex>,
    /// Step cap for designs 3 and 4 (default `n³`).
    #[serde(default)]
    pub cap: Option<usize>,
    #[serde(default)]
    pub mode: WalkMode,
}

impl DesignSpec {
    pub fn item_kind(&self) -> ItemKind {
        if self.design % 2 == 1 {
            ItemKind::Vertex
        } else {
            ItemKind::Edge
        }
    }
}

/// Builds a matrix for any of the four designs.
pub fn build(g: &Graph, spec: &DesignSpec, seed: u64) -> Result<MeasurementMatrix> {
    build_with(g, spec, seed, true)
}

/// [`build`] without keeping the walks, for large experiment matrices.
pub fn build_rows(g: &Graph, spec: &DesignSpec, seed: u64) -> Result<MeasurementMatrix> {
    build_with(g, spec, seed, false)
}

fn build_with(g: &Graph, spec: &DesignSpec, seed: u64, keep_walks: bool) -> Result<MeasurementMatrix> {
    if !(1..=4).contains(&spec.design) {
        return Err(invalid!("design must be 1, 2, 3 or 4, got {}", spec.design));
    }
    spec.start.validate(g)?;
    let kind = spec.item_kind();
    let sink_design = spec.design >= 3;
    let mut stripped: Vec<u32> = Vec::new();
    if kind == ItemKind::Vertex {
        stripped.extend(spec.start.designated());
        if let StartRule::Fixed { vertex } = spec.start {
            stripped.push(vertex);
        }
    }
    let (sink, cap) = if sink_design {
        let sink = spec.sink.ok_or_else(|| invalid!("design {} needs a sink", spec.design))?;
        if !g.contains_vertex(sink) {
            return Err(invalid!("sink {sink} out of range"));
        }
        if spec.start.designated().contains(&sink) {
            return Err(invalid!("sink {sink} is also a designated vertex"));
        }
        let cap = spec.cap.unwrap_or_else(|| default_cap(g));
        if kind == ItemKind::Vertex {
            stripped.push(sink);
        }
        (Some(sink), Some(cap))
    } else {
        (None, None)
    };
    if g.min_degree() == 0 && (sink_design || spec.t > 0) {
        return Err(Error::DegenerateGraph("walks need every vertex to have a neighbor".into()));
    }
    if sink_design {
        g.require_connected()?;
    }

    let visited = |w: &Walk| match kind {
        ItemKind::Vertex => w.visited_vertices(),
        ItemKind::Edge => w.visited_edges(),
    };
    let built: Vec<(Vec<u32>, Option<Walk>)> = (0..spec.m)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let start = spec.start.resolve(g, i as u64, &mut rng);
            let walk = match (sink, cap) {
                (Some(sink), Some(cap)) => (0..SINK_RETRY_BUDGET)
                    .find_map(|_| match walk_to_sink(g, start, sink, cap, spec.mode, &mut rng) {
                        Ok(w) if w.terminated_by != Termination::SinkReached => None,
                        other => Some(other),
                    })
                    .unwrap_or_else(|| {
                        Err(Error::GenerationFailure(format!(
                            "row {i}: {SINK_RETRY_BUDGET} walks from {start} exceeded the {cap}-step cap"
                        )))
                    })?,
                _ => walk_fixed(g, start, spec.t, spec.mode, &mut rng)?,
            };
            Ok((visited(&walk), keep_walks.then_some(walk)))
        })
        .collect::<Result<_>>()?;
    let (rows, walks): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    let walks = walks.into_iter().flatten().collect();

    let matrix = MeasurementMatrix {
        item_kind: kind,
        n_items: kind.count(g),
        stripped: sorted_set(stripped),
        rows,
        design: DesignTag {
            design: spec.design,
            t: (!sink_design).then_some(spec.t),
            m: spec.m,
            start: spec.start.clone(),
            sink,
            cap,
            mode: spec.mode,
            ..DesignTag::default()
        },
        seed,
        walks,
    };
    matrix.validate()?;
    Ok(matrix)
}

/// Fixed-length vertex walks; designated starts are stripped.
pub fn design1(g: &Graph, designated: &[Vertex], m: usize, t: usize, mode: WalkMode, seed: u64) -> Result<MeasurementMatrix> {
    let spec = DesignSpec {
        design: 1,
        m,
        t,
        start: StartRule::designated_or_uniform(designated),
        sink: None,
        cap: None,
        mode,
    };
    build(g, &spec, seed)
}

/// Fixed-length edge walks from `start`.
pub fn design2(g: &Graph, start: StartRule, m: usize, t: usize, mode: WalkMode, seed: u64) -> Result<MeasurementMatrix> {
    let spec = DesignSpec {
        design: 2,
        m,
        t,
        start,
        sink: None,
        cap: None,
        mode,
    };
    build(g, &spec, seed)
}

/// Vertex walks until `sink`; designated starts and the sink are stripped.
#[allow(clippy::too_many_arguments)]
pub fn design3(
    g: &Graph,
    designated: &[Vertex],
    sink: Vertex,
    m: usize,
    cap: Option<usize>,
    mode: WalkMode,
    seed: u64,
) -> Result<MeasurementMatrix> {
    let spec = DesignSpec {
        design: 3,
        m,
        t: 0,
        start: StartRule::designated_or_uniform(designated),
        sink: Some(sink),
        cap,
        mode,
    };
    build(g, &spec, seed)
}

/// Edge walks until `sink`. Nothing is stripped; see [`sink_incident_edges`].
pub fn design4(g: &Graph, start: StartRule, sink: Vertex, m: usize, cap: Option<usize>, mode: WalkMode, seed: u64) -> Result<MeasurementMatrix> {
    let spec = DesignSpec {
        design: 4,
        m,
        t: 0,
        start,
        sink: Some(sink),
        cap,
        mode,
    };
    build(g, &spec, seed)
}

/// Edge ids touching `sink`, for the alternative design-4 column view.
pub fn sink_incident_edges(g: &Graph, sink: Vertex) -> Vec<u32> {
    let mut ids = g.incident_edges(sink).to_vec();
    ids.sort_unstable();
    ids
}

/// Measures `c` and `T(n)` on `g` (default δ) and fills in the table inputs.
pub fn measure_inputs(g: &Graph, d: usize, eta: f64, mode: WalkMode) -> Result<ParamInputs> {
    let u = uniformity(g)?;
    let t_mix = mixing_time(g, default_delta(g)?, mode)?.t_mix;
    Ok(ParamInputs {
        n: g.n(),
        d,
        min_degree: u.min_degree,
        c: u.c,
        t_mix,
        eta,
    })
}

/// Parameter table for `g` with measured `c` and `T(n)`.
pub fn auto_params(g: &Graph, d: usize, eta: f64, constants: Constants, mode: WalkMode) -> Result<DesignParams> {
    table1_params(measure_inputs(g, d, eta, mode)?, constants)
}

/// Fills `m` and `t` from the parameter table and records `d`, `e`, `τ`.
pub fn build_auto(g: &Graph, spec: &DesignSpec, params: &DesignParams, seed: u64) -> Result<MeasurementMatrix> {
    let mut spec = spec.clone();
    spec.m = usize::try_from(params.rows(spec.design)).map_err(|_| invalid!("row count overflows"))?;
    if let Some(t) = params.walk_length(spec.design) {
        spec.t = usize::try_from(t).map_err(|_| invalid!("walk length overflows"))?;
    }
    let mut matrix = build(g, &spec, seed)?;
    matrix.design.d = Some(params.inputs.d);
    matrix.design.e = Some(params.e[spec.design as usize - 1]);
    matrix.design.tau = Some(params.tau(spec.design));
    matrix.design.params = Some(*params);
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::graph::{gen_complete, gen_cycle, gen_erdos_renyi};

    #[test]
    fn design1_shapes() {
        let g = gen_complete(12).unwrap();
        let m = design1(&g, &[], 1, 0, WalkMode::Simple, 3).unwrap();
        assert_eq!(m.rows.len(), 1);
        assert_eq!(m.rows[0].len(), 1);
        let m = design1(&g, &[0, 5], 40, 6, WalkMode::Simple, 3).unwrap();
        assert_eq!(m.stripped, vec![0, 5]);
        assert!(m.rows.iter().all(|r| r.len() <= 7));
        assert!((0..40).all(|i| m.row_view(i).all(|x| x != 0 && x != 5)));
        assert_eq!(m.walks[0].vertices[0], 0);
        assert_eq!(m.walks[1].vertices[0], 5);
        m.verify_consistency(&g).unwrap();
        assert!(design1(&g, &[12], 4, 3, WalkMode::Simple, 0).is_err());
    }

    #[test]
    fn rows_are_independent_of_m() {
        let g = gen_erdos_renyi(30, 0.3, 1).unwrap();
        let a = design1(&g, &[], 20, 8, WalkMode::Simple, 77).unwrap();
        let b = design1(&g, &[], 12, 8, WalkMode::Simple, 77).unwrap();
        assert_eq!(&a.rows[..12], &b.rows[..]);
        let t = a.truncated(12);
        assert_eq!(t.rows, b.rows);
        assert_eq!(t.walks, b.walks);
        assert_eq!(t.design, b.design);
        let lean = build_rows(&g, &DesignSpec { m: 12, ..spec_of(&b) }, 77).unwrap();
        assert_eq!(lean.rows, b.rows);
        assert!(lean.walks.is_empty());
    }

    fn spec_of(m: &MeasurementMatrix) -> DesignSpec {
        DesignSpec {
            design: m.design.design,
            m: m.design.m,
            t: m.design.t.unwrap_or(0),
            start: m.design.start.clone(),
            sink: m.design.sink,
            cap: m.design.cap,
            mode: m.design.mode,
        }
    }

    #[test]
    fn design2_shapes() {
        let k2 = gen_complete(2).unwrap();
        let m = design2(&k2, StartRule::UniformRandom, 1, 3, WalkMode::Simple, 0).unwrap();
        assert_eq!(m.rows, vec![vec![0]]);
        let g = gen_complete(9).unwrap();
        let m = design2(&g, StartRule::Fixed { vertex: 2 }, 30, 5, WalkMode::Simple, 4).unwrap();
        assert!(m.stripped.is_empty());
        for (row, w) in m.rows.iter().zip(&m.walks) {
            assert!(row.len() <= 5);
            let distinct = w.edges.iter().collect::<BTreeSet<_>>().len() == w.edges.len();
            assert_eq!(row.len() == 5, distinct);
        }
        m.verify_consistency(&g).unwrap();
    }

    #[test]
    fn design3_shapes() {
        let g = gen_complete(10).unwrap();
        let m = design3(&g, &[], 9, 50, None, WalkMode::Simple, 2).unwrap();
        assert!(m.rows.iter().all(|r| r.contains(&9)));
        assert_eq!(m.stripped, vec![9]);
        m.verify_consistency(&g).unwrap();
        let spec = DesignSpec {
            design: 3,
            m: 5,
            t: 0,
            start: StartRule::Fixed { vertex: 9 },
            sink: Some(9),
            cap: None,
            mode: WalkMode::Simple,
        };
        let m = build(&g, &spec, 0).unwrap();
        assert!((0..5).all(|i| m.row_view(i).next().is_none()));
        assert!(design3(&g, &[9], 9, 5, None, WalkMode::Simple, 0).is_err());
    }

    #[test]
    fn design4_shapes() {
        let k2 = gen_complete(2).unwrap();
        let m = design4(&k2, StartRule::Fixed { vertex: 0 }, 1, 10, None, WalkMode::Simple, 0).unwrap();
        assert!(m.rows.iter().all(|r| r == &vec![0]));
        let g = gen_complete(8).unwrap();
        let m = design4(&g, StartRule::Fixed { vertex: 0 }, 7, 20, None, WalkMode::Simple, 1).unwrap();
        let incident = sink_incident_edges(&g, 7);
        assert!(m.rows.iter().all(|r| !r.is_empty() && r.iter().any(|e| incident.contains(e))));
        let view = m.with_stripped(incident.clone()).unwrap();
        assert_eq!(view.columns().len(), g.edge_count() - incident.len());
        m.verify_consistency(&g).unwrap();
    }

    #[test]
    fn cap_exhaustion_is_an_error() {
        let g = gen_cycle(41).unwrap();
        let r = design3(&g, &[0], 20, 3, Some(2), WalkMode::Simple, 0);
        assert!(matches!(r, Err(Error::GenerationFailure(_))));
    }

    #[test]
    fn json_round_trip() {
        let g = gen_complete(6).unwrap();
        let m = design1(&g, &[1], 5, 3, WalkMode::Simple, 9).unwrap();
        let text = m.to_json().unwrap();
        let back = MeasurementMatrix::parse(&text).unwrap();
        assert_eq!(back.rows, m.rows);
        assert_eq!(back.stripped, m.stripped);
        assert_eq!(back.design, m.design);
        assert!(MeasurementMatrix::parse(r#"{"item_kind":"vertex","n_items":2,"stripped":[],"rows":[[3]],"design":{"design":0,"m":1},"seed":0}"#).is_err());
    }

    #[test]
    fn auto_parameters_on_complete_graph() {
        let g = gen_complete(64).unwrap();
        let p = auto_params(&g, 2, 0.0, Constants::default(), WalkMode::Simple).unwrap();
        assert_eq!(p.inputs.c, 1.0);
        assert!(p.inputs.t_mix >= 1);
        let spec = DesignSpec {
            design: 1,
            m: 0,
            t: 0,
            start: StartRule::UniformRandom,
            sink: None,
            cap: None,
            mode: WalkMode::Simple,
        };
        let m = build_auto(&g, &spec, &p, 5).unwrap();
        assert_eq!(m.m() as u64, p.m[0]);
        assert_eq!(m.design.t, Some(p.t1 as usize));
        assert_eq!(m.design.d, Some(2));
    }
}
