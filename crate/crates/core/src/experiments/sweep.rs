//! Success rate against the number of rows.
//!
//! Each trial builds one matrix with the largest row count and reads every
//! smaller count off its prefix (rows use independent streams, so a prefix
//! is exactly the smaller matrix). Disjunctness and noiseless recovery only
//! improve as rows are added, so for them each trial reduces to one exact
//! threshold found by bisection; noisy recovery is evaluated per grid point.

use std::borrow::Cow;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{csv, tag, Family, CALIBRATION, MIN_TRIALS};
use crate::designs::{auto_params, build_rows, sink_incident_edges, DesignSpec, MeasurementMatrix};
use crate::error::{invalid, Result};
use crate::graph::{Graph, Vertex};
use crate::grouptest::{
    binomial, decode_threshold, is_disjunct_with_budget, simulate_tests, DefectiveSet, NoiseModel, OutcomeVector,
    DEFAULT_DISJUNCT_BUDGET,
};
use crate::params::{Constants, DesignParams};
use crate::rng::{derive_seed, stream};
use crate::walks::{StartRule, WalkMode};

/// What counts as success for one trial at one row count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Disjunctness when the exhaustive check fits the budget, otherwise
    /// recovery.
    #[default]
    Auto,
    /// The matrix is `(d, e)`-disjunct (worst case over defective sets).
    Disjunct,
    /// One random `d`-set per trial is decoded exactly (average case).
    Recovery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: Family,
    pub design: u8,
    pub d: usize,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub noise: NoiseModel,
    /// Row counts to report. Empty: twenty evenly spaced counts up to the
    /// parameter-table row count.
    #[serde(default)]
    pub m_grid: Vec<usize>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub criterion: Criterion,
    /// Defaults to the frozen calibration.
    #[serde(default)]
    pub constants: Option<Constants>,
    /// Walk length for designs 1 and 2 (default: from the parameter table).
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub mode: WalkMode,
    /// Sink for designs 3 and 4 (default: the last vertex).
    #[serde(default)]
    pub sink: Option<Vertex>,
    /// Design 4: hide the sink's edges from the column view.
    #[serde(default)]
    pub strip_sink_edges: bool,
    /// Limit on nominal subset evaluations per disjunctness check.
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_DISJUNCT_BUDGET as u64
}

impl SweepConfig {
    /// Defaults for everything but the family, design, `d` and trial count.
    pub fn new(family: Family, design: u8, d: usize, trials: usize) -> Self {
        SweepConfig {
            family,
            design,
            d,
            eta: 0.0,
            noise: NoiseModel::Noiseless,
            m_grid: Vec::new(),
            trials,
            seed: 0,
            criterion: Criterion::Auto,
            constants: None,
            t: None,
            mode: WalkMode::Simple,
            sink: None,
            strip_sink_edges: false,
            budget: default_budget(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.design) {
            return Err(invalid!("design must be 1, 2, 3 or 4, got {}", self.design));
        }
        if self.d < 1 {
            return Err(invalid!("d must be at least 1"));
        }
        if self.trials < MIN_TRIALS {
            return Err(invalid!("need at least {MIN_TRIALS} trials per point, got {}", self.trials));
        }
        if !(0.0..1.0).contains(&self.eta) {
            return Err(invalid!("eta must lie in [0, 1), got {}", self.eta));
        }
        Ok(())
    }

    pub fn constants(&self) -> Constants {
        self.constants.unwrap_or(CALIBRATION.constants)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub success: f64,
    pub trials: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub family: String,
    pub design: u8,
    pub n: usize,
    pub d: usize,
    pub eta: f64,
    pub noise: NoiseModel,
    pub seed: u64,
    pub trials: usize,
    /// Rows built per trial.
    pub m_max: usize,
    /// `e` and decoder threshold used.
    pub e: u64,
    pub tau: u64,
    /// Walk length of the first trial (designs 1 and 2).
    pub t: Option<usize>,
    /// Parameter table of the first trial.
    pub params: DesignParams,
    pub columns: usize,
    /// Disconnected graph draws rejected, summed over trials.
    pub regenerated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    /// Criterion actually used.
    pub criterion: Criterion,
    /// `Auto` fell back to recovery because the exhaustive check was over budget.
    pub degraded: bool,
    pub points: Vec<SweepPoint>,
    /// Smallest grid value with success rate at least 0.95.
    pub smallest_passing: Option<f64>,
    /// Smallest row count with success rate at least 0.95, exact over all
    /// counts up to `m_max` (threshold criteria only).
    pub min_m_95: Option<usize>,
    /// Per-trial threshold row count (`None`: not reached by `m_max`).
    pub thresholds: Option<Vec<Option<usize>>>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    /// `value,success,trials,half_width` rows.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    p.value.to_string(),
                    format!("{:.6}", p.success),
                    p.trials.to_string(),
                    format!("{:.6}", p.half_width),
                ]
            })
            .collect();
        csv(&["value", "success", "trials", "half_width"], &rows)
    }
}

/// Success sweep over `m` for one family, design and sparsity.
pub fn success_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let runner = Runner::new(cfg)?;
    let (criterion, degraded) = runner.resolve(cfg.criterion);
    let want = Want {
        disjunct: criterion == Criterion::Disjunct,
        recovery: criterion == Criterion::Recovery,
    };
    let trials = runner.run(want)?;
    let outcomes: Vec<Outcome> = trials
        .iter()
        .map(|t| if want.disjunct { t.disjunct.clone() } else { t.recovery.clone() }.expect("requested"))
        .collect();
    Ok(runner.aggregate(criterion, degraded, &outcomes, &trials))
}

/// Paired worst-case and random-instance sweeps on the same matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedInputResult {
    pub recovery: SweepResult,
    pub worst_case: SweepResult,
    /// `γ = ln n / (d ln(n/d))`.
    pub gamma: f64,
    /// Full row count `m'_i` of the parameter table.
    pub m_full: u64,
    /// `⌈γ · m'_i⌉`.
    pub m_reference: u64,
}

impl FixedInputResult {
    /// Random-instance 95% row count is strictly below the worst-case one.
    pub fn saves_rows(&self) -> bool {
        match (self.recovery.min_m_95, self.worst_case.min_m_95) {
            (Some(r), Some(w)) => r < w,
            (Some(_), None) => true,
            _ => false,
        }
    }

    /// `value,recovery,worst_case,trials,recovery_half_width,worst_half_width` rows.
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .recovery
            .points
            .iter()
            .zip(&self.worst_case.points)
            .map(|(r, w)| {
                vec![
                    r.value.to_string(),
                    format!("{:.6}", r.success),
                    format!("{:.6}", w.success),
                    r.trials.to_string(),
                    format!("{:.6}", r.half_width),
                    format!("{:.6}", w.half_width),
                ]
            })
            .collect();
        csv(
            &["value", "recovery", "worst_case", "trials", "recovery_half_width", "worst_half_width"],
            &rows,
        )
    }
}

/// Random-instance recovery against worst-case disjunctness on the same
/// matrices, with the `γ`-scaled row count as reference. The criterion and
/// noise fields of `cfg` are ignored: recovery is noiseless.
pub fn fixed_input_experiment(cfg: &SweepConfig) -> Result<FixedInputResult> {
    let mut cfg = cfg.clone();
    cfg.noise = NoiseModel::Noiseless;
    let runner = Runner::new(&cfg)?;
    let trials = runner.run(Want {
        disjunct: true,
        recovery: true,
    })?;
    let pick = |f: fn(&Trial) -> &Option<Outcome>| -> Vec<Outcome> {
        trials.iter().map(|t| f(t).clone().expect("requested")).collect()
    };
    let recovery = runner.aggregate(Criterion::Recovery, false, &pick(|t| &t.recovery), &trials);
    let worst_case = runner.aggregate(Criterion::Disjunct, false, &pick(|t| &t.disjunct), &trials);
    let params = runner.first.params;
    let m_full = params.rows(cfg.design);
    Ok(FixedInputResult {
        recovery,
        worst_case,
        gamma: params.gamma,
        m_full,
        m_reference: (params.gamma * m_full as f64 - 1e-9).ceil() as u64,
    })
}

#[derive(Debug, Clone, Copy)]
struct Want {
    disjunct: bool,
    recovery: bool,
}

#[derive(Debug, Clone, PartialEq)]
enum Outcome {
    /// Smallest successful row count, if any up to `m_max`.
    Threshold(Option<usize>),
    /// Success at each grid point.
    Grid(Vec<bool>),
}

struct Trial {
    disjunct: Option<Outcome>,
    recovery: Option<Outcome>,
    regenerated: usize,
}

struct Setup {
    params: DesignParams,
    t: Option<usize>,
    columns: usize,
}

struct Runner<'a> {
    cfg: &'a SweepConfig,
    constants: Constants,
    /// Graph shared by every trial for deterministic families.
    fixed: Option<Graph>,
    first: Setup,
    grid: Vec<usize>,
    m_max: usize,
}

impl<'a> Runner<'a> {
    fn new(cfg: &'a SweepConfig) -> Result<Self> {
        cfg.validate()?;
        let constants = cfg.constants();
        let fixed = if cfg.family.is_random() {
            None
        } else {
            Some(cfg.family.sample(0, cfg.mode)?.0)
        };
        let g0 = match &fixed {
            Some(g) => Cow::Borrowed(g),
            None => Cow::Owned(cfg.family.sample(derive_seed(cfg.seed, tag::GRAPH, 0), cfg.mode)?.0),
        };
        let params = auto_params(&g0, cfg.d, cfg.eta, constants, cfg.mode)?;
        let probe = trial_matrix(cfg, &g0, &params, 0, 0)?;
        let first = Setup {
            params,
            t: probe.design.t,
            columns: probe.columns().len(),
        };
        let mut grid = if cfg.m_grid.is_empty() {
            let top = params.rows(cfg.design).max(1) as usize;
            (1..=20).map(|i| (i * top).div_ceil(20)).collect()
        } else {
            cfg.m_grid.clone()
        };
        grid.sort_unstable();
        grid.dedup();
        let m_max = *grid.last().expect("grid is nonempty");
        Ok(Runner {
            cfg,
            constants,
            fixed,
            first,
            grid,
            m_max,
        })
    }

    fn resolve(&self, criterion: Criterion) -> (Criterion, bool) {
        match criterion {
            Criterion::Auto => {
                let k = self.first.columns as u128;
                let d = (self.cfg.d as u128).min(k.saturating_sub(1));
                let nominal = binomial(k.saturating_sub(1), d).saturating_mul(k);
                if nominal <= self.cfg.budget as u128 {
                    (Criterion::Disjunct, false)
                } else {
                    (Criterion::Recovery, true)
                }
            }
            other => (other, false),
        }
    }

    fn graph(&self, trial: usize) -> Result<(Cow<'_, Graph>, usize)> {
        match &self.fixed {
            Some(g) => Ok((Cow::Borrowed(g), 0)),
            None => {
                let (g, redrawn) = self
                    .cfg
                    .family
                    .sample(derive_seed(self.cfg.seed, tag::GRAPH, trial as u64), self.cfg.mode)?;
                Ok((Cow::Owned(g), redrawn))
            }
        }
    }

    fn params(&self, g: &Graph) -> Result<DesignParams> {
        match self.fixed {
            Some(_) => Ok(self.first.params),
            None => auto_params(g, self.cfg.d, self.cfg.eta, self.constants, self.cfg.mode),
        }
    }

    fn run(&self, want: Want) -> Result<Vec<Trial>> {
        (0..self.cfg.trials)
            .into_par_iter()
            .map(|s| self.trial(s, want))
            .collect()
    }

    fn trial(&self, s: usize, want: Want) -> Result<Trial> {
        let cfg = self.cfg;
        let (g, regenerated) = self.graph(s)?;
        let params = self.params(&g)?;
        let matrix = trial_matrix(cfg, &g, &params, self.m_max, s)?;
        let e = params.e[cfg.design as usize - 1] as usize;
        let tau = params.tau(cfg.design) as usize;

        let disjunct = if want.disjunct {
            let budget = cfg.budget as u128;
            let t = threshold(self.m_max, |m| {
                Ok(is_disjunct_with_budget(&matrix.truncated(m), cfg.d, e, budget)?.is_disjunct())
            })?;
            Some(Outcome::Threshold(t))
        } else {
            None
        };

        let recovery = if want.recovery {
            let columns = matrix.columns();
            let mut rng = stream(derive_seed(cfg.seed, tag::DEFECTS, s as u64), 0);
            let picked = sample(&mut rng, columns.len(), cfg.d.min(columns.len()));
            let planted = DefectiveSet::new(matrix.item_kind, picked.iter().map(|i| columns[i]).collect());
            let y = simulate_tests(&matrix, &planted, &cfg.noise, derive_seed(cfg.seed, tag::NOISE, s as u64))?;
            let exact_at = |m: usize| -> Result<bool> {
                let prefix = OutcomeVector {
                    bits: y.bits[..m].to_vec(),
                    ..y.clone()
                };
                Ok(decode_threshold(&matrix.truncated(m), &prefix, tau)?.defectives == planted)
            };
            Some(if cfg.noise == NoiseModel::Noiseless {
                Outcome::Threshold(threshold(self.m_max, exact_at)?)
            } else {
                Outcome::Grid(self.grid.iter().map(|&m| exact_at(m)).collect::<Result<_>>()?)
            })
        } else {
            None
        };

        Ok(Trial {
            disjunct,
            recovery,
            regenerated,
        })
    }

    fn aggregate(&self, criterion: Criterion, degraded: bool, outcomes: &[Outcome], trials: &[Trial]) -> SweepResult {
        let n_trials = outcomes.len();
        let points: Vec<SweepPoint> = self
            .grid
            .iter()
            .enumerate()
            .map(|(gi, &m)| {
                let hits = outcomes
                    .iter()
                    .filter(|o| match o {
                        Outcome::Threshold(t) => t.is_some_and(|t| t <= m),
                        Outcome::Grid(bits) => bits[gi],
                    })
                    .count();
                let p = hits as f64 / n_trials as f64;
                SweepPoint {
                    value: m as f64,
                    success: p,
                    trials: n_trials,
                    half_width: 1.96 * (p * (1.0 - p) / n_trials as f64).sqrt(),
                }
            })
            .collect();
        let passing = |hits: usize| hits * 100 >= 95 * n_trials;
        let smallest_passing = points
            .iter()
            .find(|p| passing((p.success * n_trials as f64).round() as usize))
            .map(|p| p.value);
        let thresholds: Option<Vec<Option<usize>>> = outcomes
            .iter()
            .map(|o| match o {
                Outcome::Threshold(t) => Some(*t),
                Outcome::Grid(_) => None,
            })
            .collect();
        let min_m_95 = thresholds.as_ref().and_then(|ts| {
            let mut sorted: Vec<usize> = ts.iter().map(|t| t.unwrap_or(usize::MAX)).collect();
            sorted.sort_unstable();
            let need = (95 * n_trials).div_ceil(100);
            sorted.get(need.max(1) - 1).copied().filter(|&m| m != usize::MAX)
        });
        let cfg = self.cfg;
        let params = self.first.params;
        SweepResult {
            axis: "m".into(),
            criterion,
            degraded,
            points,
            smallest_passing,
            min_m_95,
            thresholds,
            metadata: SweepMetadata {
                family: cfg.family.label(),
                design: cfg.design,
                n: cfg.family.n(),
                d: cfg.d,
                eta: cfg.eta,
                noise: cfg.noise.clone(),
                seed: cfg.seed,
                trials: n_trials,
                m_max: self.m_max,
                e: params.e[cfg.design as usize - 1],
                tau: params.tau(cfg.design),
                t: self.first.t,
                params,
                columns: self.first.columns,
                regenerated: trials.iter().map(|t| t.regenerated).sum(),
            },
        }
    }
}

/// Smallest `m ≤ m_max` with `ok(m)`, for `ok` monotone in `m`.
fn threshold(m_max: usize, mut ok: impl FnMut(usize) -> Result<bool>) -> Result<Option<usize>> {
    if !ok(m_max)? {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0usize, m_max);
    // invariant: ok(hi), and ok(m) is false for every m < lo
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(Some(hi))
}

fn trial_matrix(cfg: &SweepConfig, g: &Graph, params: &DesignParams, m: usize, trial: usize) -> Result<MeasurementMatrix> {
    let t = match cfg.t {
        Some(t) => t,
        None => params.walk_length(cfg.design).unwrap_or(0) as usize,
    };
    let spec = DesignSpec {
        design: cfg.design,
        m,
        t: if cfg.design <= 2 { t } else { 0 },
        start: StartRule::UniformRandom,
        sink: (cfg.design >= 3).then(|| cfg.sink.unwrap_or(g.n() as Vertex - 1)),
        cap: None,
        mode: cfg.mode,
    };
    let mut matrix = build_rows(g, &spec, derive_seed(cfg.seed, tag::MATRIX, trial as u64))?;
    if cfg.design == 4 && cfg.strip_sink_edges {
        matrix = matrix.with_stripped(sink_incident_edges(g, spec.sink.expect("sink design")))?;
    }
    matrix.design.d = Some(cfg.d);
    matrix.design.e = Some(params.e[cfg.design as usize - 1]);
    matrix.design.tau = Some(params.tau(cfg.design));
    matrix.design.params = Some(*params);
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_bisection() {
        for cut in 0..=17 {
            let mut calls = 0;
            let t = threshold(17, |m| {
                calls += 1;
                Ok(m >= cut)
            })
            .unwrap();
            assert_eq!(t, Some(cut));
            assert!(calls <= 7);
        }
        assert_eq!(threshold(5, |_| Ok(false)).unwrap(), None);
    }

    fn small() -> SweepConfig {
        let mut cfg = SweepConfig::new(Family::Complete { n: 16 }, 1, 1, 40);
        cfg.m_grid = vec![0, 4, 8, 12, 16, 24, 32, 48];
        cfg.t = Some(5);
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn sweep_is_monotone_and_reproducible() {
        let a = success_sweep(&small()).unwrap();
        assert_eq!(a.criterion, Criterion::Disjunct);
        assert_eq!(a.points[0].success, 0.0);
        assert!(a.points.windows(2).all(|w| w[0].success <= w[1].success));
        assert_eq!(a.points.last().unwrap().success, 1.0);
        assert_eq!(a, success_sweep(&small()).unwrap());
        let ts = a.thresholds.clone().unwrap();
        let m95 = a.min_m_95.unwrap();
        assert!(ts.iter().filter(|t| t.is_some_and(|t| t <= m95)).count() >= 38);
        assert!(ts.iter().filter(|t| t.is_some_and(|t| t < m95)).count() < 38);
        assert!(a.to_csv().starts_with("value,success,trials,half_width\n0,0.000000,40,"));
    }

    #[test]
    fn thresholds_match_direct_checks() {
        let cfg = small();
        let a = success_sweep(&cfg).unwrap();
        let g = crate::graph::gen_complete(16).unwrap();
        for (s, t) in a.thresholds.unwrap().iter().enumerate().take(5) {
            let spec = DesignSpec {
                design: 1,
                m: 48,
                t: 5,
                start: StartRule::UniformRandom,
                sink: None,
                cap: None,
                mode: WalkMode::Simple,
            };
            let m = crate::designs::build(&g, &spec, derive_seed(cfg.seed, tag::MATRIX, s as u64)).unwrap();
            let t = t.unwrap();
            assert!(crate::grouptest::is_disjunct(&m.truncated(t), 1, 0).unwrap().is_disjunct());
            assert!(t == 0 || !crate::grouptest::is_disjunct(&m.truncated(t - 1), 1, 0).unwrap().is_disjunct());
        }
    }

    #[test]
    fn recovery_needs_no_more_rows_than_disjunctness() {
        let mut cfg = small();
        cfg.d = 2;
        let r = fixed_input_experiment(&cfg).unwrap();
        let (rec, worst) = (r.recovery.thresholds.clone().unwrap(), r.worst_case.thresholds.clone().unwrap());
        for (a, b) in rec.iter().zip(&worst) {
            if let Some(b) = b {
                assert!(a.unwrap() <= *b);
            }
        }
        assert!(r.to_csv().lines().count() == cfg.m_grid.len() + 1);
    }

    #[test]
    fn noisy_recovery_uses_the_grid() {
        let mut cfg = small();
        cfg.criterion = Criterion::Recovery;
        cfg.noise = NoiseModel::Flip { q: 0.02 };
        let r = success_sweep(&cfg).unwrap();
        assert!(r.thresholds.is_none() && r.min_m_95.is_none());
        assert_eq!(r.points.len(), cfg.m_grid.len());
    }

    #[test]
    fn over_budget_auto_degrades() {
        let mut cfg = small();
        cfg.budget = 10;
        let r = success_sweep(&cfg).unwrap();
        assert!(r.degraded);
        assert_eq!(r.criterion, Criterion::Recovery);
    }

    #[test]
    fn rejects_thin_sweeps() {
        let mut cfg = small();
        cfg.trials = 29;
        assert!(success_sweep(&cfg).is_err());
        cfg.trials = 30;
        cfg.design = 5;
        assert!(success_sweep(&cfg).is_err());
    }
}
