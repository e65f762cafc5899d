//! Link-failure localization with probe packets.
//!
//! Each probe performs a random walk of `t` hops from a common source and
//! reports back whether its route crossed a congested link. Probes are the
//! rows of a Design 2 matrix with a fixed start, congested links are the
//! defective edges, and decoding localizes them.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{tag, Family, CALIBRATION};
use crate::designs::{auto_params, build_rows, DesignSpec};
use crate::error::{invalid, Result};
use crate::graph::{EdgeId, Graph, Vertex};
use crate::grouptest::{decode_threshold, eta_for_flip_noise, simulate_tests, DefectiveSet, NoiseModel};
use crate::params::{table1_params, Constants, ParamInputs};
use crate::rng::{derive_seed, stream};
use crate::walks::{ItemKind, StartRule, WalkMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomoConfig {
    /// Sparsity the probes are sized for.
    #[serde(default = "two")]
    pub d: usize,
    /// Congested links; empty draws `n_congested` at random.
    #[serde(default)]
    pub congested: Vec<EdgeId>,
    #[serde(default = "two")]
    pub n_congested: usize,
    #[serde(default)]
    pub source: Vertex,
    /// Probability that a probe report is flipped.
    #[serde(default)]
    pub q: f64,
    /// Confidence for the flip budget under noise.
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    /// Hops per probe (default: `t₂` of the parameter table).
    #[serde(default)]
    pub t: Option<usize>,
    /// Probe count (default: `m'₂` of the parameter table).
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub constants: Option<Constants>,
    #[serde(default)]
    pub mode: WalkMode,
}

fn two() -> usize {
    2
}

fn default_confidence() -> f64 {
    0.99
}

impl Default for TomoConfig {
    fn default() -> Self {
        TomoConfig {
            d: 2,
            congested: Vec::new(),
            n_congested: 2,
            source: 0,
            q: 0.0,
            confidence: default_confidence(),
            t: None,
            m: None,
            constants: None,
            mode: WalkMode::Simple,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkVerdict {
    pub edge: EdgeId,
    pub endpoints: (Vertex, Vertex),
    pub congested: bool,
    pub flagged: bool,
    /// Returned probes that crossed the link.
    pub clean_probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomoReport {
    pub source: Vertex,
    pub probes: usize,
    pub hops: usize,
    pub eta: f64,
    pub tau: usize,
    pub congested: Vec<EdgeId>,
    pub identified: Vec<EdgeId>,
    pub exact: bool,
    /// Probes that came back clean (negative tests).
    pub returned: usize,
    /// Verdicts for every congested or flagged link.
    pub links: Vec<LinkVerdict>,
}

/// Sends the probes on `g` and localizes the congested links.
///
/// Under flip noise `q` the probe count is inflated through `η` chosen so
/// that the flips expected on one link's probes (at the mean link load of
/// the noiseless design) stay within `⌊(e(η) − 1)/2⌋`, and the decoder
/// threshold is the same budget at the largest load actually observed.
pub fn tomography_demo(g: &Graph, cfg: &TomoConfig, seed: u64) -> Result<TomoReport> {
    if !g.contains_vertex(cfg.source) {
        return Err(invalid!("source {} out of range", cfg.source));
    }
    if !(0.0..0.5).contains(&cfg.q) {
        return Err(invalid!("flip probability must lie in [0, 1/2), got {}", cfg.q));
    }
    let constants = cfg.constants.unwrap_or(CALIBRATION.constants);
    let base = auto_params(g, cfg.d, 0.0, constants, cfg.mode)?;
    let hops = cfg.t.unwrap_or(base.t2 as usize);
    let mut probes = cfg.m.unwrap_or(base.m[1] as usize);
    let mut eta = 0.0;
    if cfg.q > 0.0 {
        let load = (probes * hops).div_ceil(g.edge_count()) as u64;
        eta = eta_for_flip_noise(cfg.q, load, cfg.confidence, &base.inputs, &constants)?.eta;
        if cfg.m.is_none() {
            let inputs = ParamInputs { eta, ..base.inputs };
            probes = table1_params(inputs, constants)?.m_noisy[1] as usize;
        }
    }

    let spec = DesignSpec {
        design: 2,
        m: probes,
        t: hops,
        start: StartRule::Fixed { vertex: cfg.source },
        sink: None,
        cap: None,
        mode: cfg.mode,
    };
    let matrix = build_rows(g, &spec, derive_seed(seed, tag::MATRIX, 0))?;

    let congested = if cfg.congested.is_empty() {
        let mut rng = stream(derive_seed(seed, tag::DEFECTS, 0), 0);
        sample(&mut rng, g.edge_count(), cfg.n_congested.min(g.edge_count()))
            .into_vec()
            .into_iter()
            .map(|e| e as EdgeId)
            .collect()
    } else {
        cfg.congested.clone()
    };
    if congested.len() > cfg.d {
        return Err(invalid!("{} congested links but probes are sized for d = {}", congested.len(), cfg.d));
    }
    let planted = DefectiveSet::new(ItemKind::Edge, congested);
    let noise = if cfg.q > 0.0 { NoiseModel::Flip { q: cfg.q } } else { NoiseModel::Noiseless };
    let y = simulate_tests(&matrix, &planted, &noise, derive_seed(seed, tag::NOISE, 0))?;

    let mut load = vec![0usize; g.edge_count()];
    let mut clean = vec![0usize; g.edge_count()];
    for (row, &positive) in matrix.rows.iter().zip(&y.bits) {
        for &e in row {
            load[e as usize] += 1;
            clean[e as usize] += !positive as usize;
        }
    }
    let tau = if cfg.q > 0.0 {
        let worst = *load.iter().max().unwrap_or(&0) as u64;
        eta_for_flip_noise(cfg.q, worst, cfg.confidence, &base.inputs, &constants)?.tau as usize
    } else {
        0
    };
    let decoded = decode_threshold(&matrix, &y, tau)?;

    let mut links: Vec<EdgeId> = planted.items.iter().chain(&decoded.defectives.items).copied().collect();
    links.sort_unstable();
    links.dedup();
    let links = links
        .into_iter()
        .map(|e| LinkVerdict {
            edge: e,
            endpoints: g.edge(e),
            congested: planted.items.contains(&e),
            flagged: decoded.defectives.items.contains(&e),
            clean_probes: clean[e as usize],
        })
        .collect();
    Ok(TomoReport {
        source: cfg.source,
        probes,
        hops,
        eta,
        tau,
        exact: decoded.defectives == planted,
        congested: planted.items,
        identified: decoded.defectives.items,
        returned: y.bits.iter().filter(|&&b| !b).count(),
        links,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomoRun {
    pub index: usize,
    pub exact: bool,
    pub probes: usize,
    pub tau: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomoSummary {
    pub family: String,
    pub q: f64,
    pub runs: Vec<TomoRun>,
    pub exact: usize,
}

/// [`tomography_demo`] on `count` independent graphs of `family`, with
/// congested links drawn at random per run.
pub fn tomography_runs(family: &Family, cfg: &TomoConfig, count: usize, seed: u64) -> Result<TomoSummary> {
    let runs: Vec<TomoRun> = (0..count)
        .map(|i| {
            let (g, _) = family.sample(derive_seed(seed, tag::GRAPH, i as u64), cfg.mode)?;
            let r = tomography_demo(&g, cfg, derive_seed(seed, tag::SAMPLE, i as u64))?;
            Ok(TomoRun {
                index: i,
                exact: r.exact,
                probes: r.probes,
                tau: r.tau,
                false_positives: r.links.iter().filter(|l| l.flagged && !l.congested).count(),
                false_negatives: r.links.iter().filter(|l| !l.flagged && l.congested).count(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(TomoSummary {
        family: family.label(),
        q: cfg.q,
        exact: runs.iter().filter(|r| r.exact).count(),
        runs,
    })
}
