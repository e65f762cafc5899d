//! Acceptance suite. Every criterion prints one `[PASS]`/`[FAIL]` line to
//! standard output (uncaptured) and then asserts.

use std::io::Write;
use std::time::Instant;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use walktest::designs::{auto_params, build_auto, build_rows, measure_inputs, DesignSpec, MeasurementMatrix};
use walktest::experiments::{
    fixed_input_experiment, mixing_scaling, success_sweep, tomography_runs, Criterion, Family, MixingScalingConfig,
    SweepConfig, TomoConfig, CALIBRATION,
};
use walktest::graph::{stationary_distribution, uniformity, Graph, Vertex};
use walktest::grouptest::{
    decode_cover, decode_threshold, is_disjunct, is_disjunct_with_budget, simulate_tests, DefectiveSet, NoiseModel,
};
use walktest::params::table1_params;
use walktest::rng::{derive_seed, stream};
use walktest::walks::{estimate_pi_item_avoiding, estimate_pi_sink_avoiding, default_cap, Item, StartRule, WalkMode};

const SEED: u64 = 0xACCE_7000;

fn report(id: &str, claim: &str, pass: bool, started: Instant, detail: String) {
    let line = format!(
        "[{}] {id} {claim}: {detail} ({:.1}s)",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    // written to the process handle so the line survives output capture
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    assert!(pass, "{line}");
}

fn random_family<R: Rng>(rng: &mut R, n: usize) -> Family {
    match rng.random_range(0..3) {
        0 => Family::Complete { n },
        1 => Family::Gnp {
            n,
            p: rng.random_range(0.3..0.9),
        },
        _ => {
            let degree = loop {
                let d = rng.random_range(3..=8.min(n - 1));
                if (n * d).is_multiple_of(2) {
                    break d;
                }
            };
            Family::RandomRegular { n, degree }
        }
    }
}

fn random_subset<R: Rng>(rng: &mut R, pool: &[u32], size: usize) -> Vec<u32> {
    sample(rng, pool.len(), size.min(pool.len())).iter().map(|i| pool[i]).collect()
}

fn random_spec<R: Rng>(rng: &mut R, g: &Graph, design: u8, m: usize) -> DesignSpec {
    let n = g.n();
    DesignSpec {
        design,
        m,
        t: rng.random_range(2..=n),
        start: StartRule::UniformRandom,
        sink: (design >= 3).then(|| rng.random_range(0..n) as Vertex),
        cap: None,
        mode: WalkMode::Simple,
    }
}

const AC1_CASES: usize = 10_000;
const AC1_MAX_ROWS: usize = 4096;

enum Ac1 {
    Exact,
    Wrong,
    Uncertified,
}

// Smallest certified prefix among 16, 32, ..., AC1_MAX_ROWS rows.
fn certified_prefix(full: &MeasurementMatrix, d: usize) -> Option<MeasurementMatrix> {
    let mut m = 16;
    while m <= full.m() {
        let prefix = full.truncated(m);
        if is_disjunct_with_budget(&prefix, d, 0, u128::MAX).unwrap().is_disjunct() {
            return Some(prefix);
        }
        m *= 2;
    }
    None
}

fn ac1_case(i: u64) -> Ac1 {
    let mut rng = stream(derive_seed(SEED, 1, i), 0);
    let design: u8 = rng.random_range(1..=4);
    let d = rng.random_range(1..=3);
    // edge designs have |E| columns; keep those graphs small
    let n = if design % 2 == 1 { rng.random_range(8..=64) } else { rng.random_range(6..=16) };
    let family = random_family(&mut rng, n);
    let (g, _) = family.sample(rng.random(), WalkMode::Simple).unwrap();
    let spec = random_spec(&mut rng, &g, design, AC1_MAX_ROWS);
    let full = build_rows(&g, &spec, rng.random()).unwrap();
    let Some(matrix) = certified_prefix(&full, d) else {
        return Ac1::Uncertified;
    };
    let size = rng.random_range(0..=d);
    let planted = DefectiveSet::new(matrix.item_kind, random_subset(&mut rng, &matrix.columns(), size));
    let y = simulate_tests(&matrix, &planted, &NoiseModel::Noiseless, 0).unwrap();
    if decode_cover(&matrix, &y).unwrap().defectives == planted {
        Ac1::Exact
    } else {
        Ac1::Wrong
    }
}

#[test]
fn ac01_disjunct_decode_soundness() {
    let started = Instant::now();
    let outcomes: Vec<Ac1> = (0..(AC1_CASES as u64 * 11 / 10)).into_par_iter().map(ac1_case).collect();
    let mut exact = 0;
    let mut wrong = 0;
    let mut uncertified = 0;
    for o in &outcomes {
        if exact + wrong == AC1_CASES {
            break;
        }
        match o {
            Ac1::Exact => exact += 1,
            Ac1::Wrong => wrong += 1,
            Ac1::Uncertified => uncertified += 1,
        }
    }
    report(
        "AC1",
        "certified d-disjunct matrices decode exactly",
        exact == AC1_CASES && wrong == 0,
        started,
        format!("{exact}/{} exact, {wrong} wrong, {uncertified} draws not certifiable", exact + wrong),
    );
}

const AC2_CASES: usize = 200;
const AC2_MAX_ROWS: usize = 40;
const AC2_MIN_E: usize = 3;
const AC2_MAX_PATTERNS: u64 = 100_000;

fn patterns_up_to(m: usize, tau: usize) -> u64 {
    (0..=tau).map(|k| binomial(m as u64, k as u64)).sum()
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

struct Ac2 {
    e: usize,
    patterns: u64,
    exact: u64,
}

// A (d, e)-disjunct walk matrix with m ≤ 40 and e ≥ 3, or None.
fn ac2_case(i: u64) -> Option<Ac2> {
    let mut rng = stream(derive_seed(SEED, 2, i), 0);
    let design: u8 = if rng.random_bool(0.8) { 1 } else { 2 };
    let d = rng.random_range(1..=2);
    let n = if design == 1 { rng.random_range(5..=9) } else { 5 };
    let family = random_family(&mut rng, n);
    let (g, _) = family.sample(rng.random(), WalkMode::Simple).ok()?;
    let m = rng.random_range(20..=AC2_MAX_ROWS);
    let mut spec = random_spec(&mut rng, &g, design, m);
    spec.t = rng.random_range(1..=3);
    let matrix = build_rows(&g, &spec, rng.random()).ok()?;
    let mut e_max = None;
    for e in 0..matrix.m() {
        if !is_disjunct_with_budget(&matrix, d, e, u128::MAX).ok()?.is_disjunct() {
            break;
        }
        e_max = Some(e);
    }
    let mut e = e_max?;
    while e >= AC2_MIN_E && patterns_up_to(matrix.m(), (e - 1) / 2) > AC2_MAX_PATTERNS {
        e -= 1;
    }
    if e < AC2_MIN_E {
        return None;
    }
    let tau = (e - 1) / 2;
    let size = rng.random_range(1..=d);
    let planted = DefectiveSet::new(matrix.item_kind, random_subset(&mut rng, &matrix.columns(), size));
    let clean = simulate_tests(&matrix, &planted, &NoiseModel::Noiseless, 0).ok()?;
    // every flip pattern of at most tau positions
    let m = matrix.m();
    let mut patterns = 0u64;
    let mut exact = 0u64;
    let mut flips: Vec<usize> = Vec::new();
    loop {
        let mut y = clean.clone();
        for &f in &flips {
            y.bits[f] = !y.bits[f];
        }
        patterns += 1;
        exact += (decode_threshold(&matrix, &y, tau).ok()?.defectives == planted) as u64;
        if !next_subset(&mut flips, m, tau) {
            break;
        }
    }
    Some(Ac2 { e, patterns, exact })
}

// Advances through all subsets of {0..m} of size ≤ k in size-then-lex order.
fn next_subset(s: &mut Vec<usize>, m: usize, k: usize) -> bool {
    let len = s.len();
    for i in (0..len).rev() {
        if s[i] < m - (len - i) {
            s[i] += 1;
            for j in i + 1..len {
                s[j] = s[j - 1] + 1;
            }
            return true;
        }
    }
    if len < k && len < m {
        *s = (0..=len).collect();
        return true;
    }
    false
}

#[test]
fn ac02_noisy_tolerance() {
    let started = Instant::now();
    let mut cases = Vec::new();
    let mut i = 0u64;
    while cases.len() < AC2_CASES && i < 200_000 {
        let batch: Vec<Option<Ac2>> = (i..i + 500).into_par_iter().map(ac2_case).collect();
        cases.extend(batch.into_iter().flatten());
        i += 500;
    }
    cases.truncate(AC2_CASES);
    let patterns: u64 = cases.iter().map(|c| c.patterns).sum();
    let exact: u64 = cases.iter().map(|c| c.exact).sum();
    let max_e = cases.iter().map(|c| c.e).max().unwrap_or(0);
    report(
        "AC2",
        "threshold decoding tolerates floor((e-1)/2) flips",
        cases.len() == AC2_CASES && exact == patterns,
        started,
        format!("{} cases (e in 3..={max_e}), {exact}/{patterns} flip patterns exact", cases.len()),
    );
}

#[test]
fn ac03_design1_on_dense_random_graphs() {
    let started = Instant::now();
    let family = Family::Gnp { n: 256, p: 0.25 };
    let certified: Vec<(bool, usize)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let (g, _) = family.sample(derive_seed(SEED, 3, i), WalkMode::Simple).unwrap();
            let params = auto_params(&g, 2, 0.0, CALIBRATION.constants, WalkMode::Simple).unwrap();
            let spec = DesignSpec {
                design: 1,
                m: 0,
                t: 0,
                start: StartRule::UniformRandom,
                sink: None,
                cap: None,
                mode: WalkMode::Simple,
            };
            let matrix = build_auto(&g, &spec, &params, derive_seed(SEED, 30, i)).unwrap();
            (is_disjunct(&matrix, 2, 0).unwrap().is_disjunct(), matrix.m())
        })
        .collect();
    let ok = certified.iter().filter(|c| c.0).count();
    let (lo, hi) = certified.iter().fold((usize::MAX, 0), |(lo, hi), c| (lo.min(c.1), hi.max(c.1)));
    report(
        "AC3",
        "auto Design 1 on G(256, 0.25), d = 2 is 2-disjunct",
        ok >= 95,
        started,
        format!("{ok}/100 seeds certified (m in {lo}..={hi})"),
    );
}

const AC4_FACTOR: f64 = 8.0;

#[test]
fn ac04_classical_recovery_on_k500() {
    let started = Instant::now();
    let mut cfg = SweepConfig::new(Family::Complete { n: 500 }, 1, 2, 100);
    cfg.seed = derive_seed(SEED, 4, 0);
    cfg.criterion = Criterion::Disjunct;
    cfg.m_grid = (1..=50).map(|k| 8 * k).collect();
    cfg.budget = u64::MAX;
    let r = success_sweep(&cfg).unwrap();
    let reference = 4.0 * (250f64).ln();
    let m95 = r.min_m_95;
    let pass = m95.is_some_and(|m| m as f64 <= AC4_FACTOR * reference && m as f64 >= reference / AC4_FACTOR);
    report(
        "AC4",
        "K_500, d = 2: 95% disjunctness row count within 8x of d^2 ln(n/d)",
        pass,
        started,
        format!("m95 = {m95:?}, d^2 ln(n/d) = {reference:.2}, t = {:?}", r.metadata.t),
    );
}

const AC5_BAND: f64 = 2.0;

#[test]
fn ac05_mixing_scaling() {
    let started = Instant::now();
    let grid = vec![64, 128, 256, 512];
    let families = [
        Family::GnpLog { n: 64, alpha: 6.0 },
        Family::RandomRegular { n: 64, degree: 8 },
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut ratios = Vec::new();
    for (k, family) in families.iter().enumerate() {
        let r = mixing_scaling(&MixingScalingConfig {
            family: family.clone(),
            n_grid: grid.clone(),
            seed: derive_seed(SEED, 5, k as u64),
            mode: WalkMode::Simple,
        })
        .unwrap();
        pass &= r.band <= AC5_BAND && r.bound_holds;
        ratios.extend(r.rows.iter().map(|row| row.ratio));
        let t: Vec<String> = r.rows.iter().map(|row| format!("{}", row.t_mix)).collect();
        parts.push(format!(
            "{}: T = [{}], band {:.2}, bound holds {}",
            r.family,
            t.join(", "),
            r.band,
            r.bound_holds
        ));
    }
    let pooled = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    report(
        "AC5",
        "T(n)/ln n band per family <= 2 and T <= conductance bound",
        pass,
        started,
        format!("{}; pooled band {pooled:.2} (informative)", parts.join("; ")),
    );
}

#[test]
fn ac06_stationary_bounds_exact() {
    let started = Instant::now();
    let mut violations = 0usize;
    let mut disagreements = 0usize;
    for i in 0..1000u64 {
        let mut rng = stream(derive_seed(SEED, 6, i), 0);
        let n = rng.random_range(4..=80);
        let family = match i % 5 {
            0..=2 => random_family(&mut rng, n),
            3 => Family::Star { n },
            _ => Family::Path { n },
        };
        let (g, _) = family.sample(rng.random(), WalkMode::Lazy).unwrap();
        let mu = stationary_distribution(&g, WalkMode::Lazy).unwrap();
        let u = uniformity(&g).unwrap();
        let (nf, c) = (g.n() as f64, u.c);
        let two_e = 2 * g.edge_count() as u128;
        let (lo_deg, hi_deg, n128) = (u.min_degree as u128, u.max_degree as u128, g.n() as u128);
        for v in 0..g.n() {
            let deg = g.degree(v as Vertex) as u128;
            // integer form of 1/(cn) ≤ deg/2|E| ≤ c/n with c = Δ/D
            let exact = deg * hi_deg * n128 >= two_e * lo_deg && deg * lo_deg * n128 <= two_e * hi_deg;
            let float = 1.0 / (c * nf) <= mu.probs[v] && mu.probs[v] <= c / nf;
            violations += !exact as usize;
            disagreements += (exact != float) as usize;
        }
    }
    report(
        "AC6",
        "1/(cn) <= mu(v) <= c/n on every vertex of 1000 graphs",
        violations == 0 && disagreements == 0,
        started,
        format!("{violations} violations, {disagreements} float/integer disagreements"),
    );
}

const AC7_TOLERANCE: f64 = 0.2;

#[test]
fn ac07_complete_graph_sink_tightness() {
    let started = Instant::now();
    let g = walktest::graph::gen_complete(50).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for d in 1..=3usize {
        // sink 0, target 1, avoid 2..=d+1; walks start off the special set
        let avoid: Vec<Item> = (2..=d as Vertex + 1).map(Item::Vertex).collect();
        let start = StartRule::DesignatedUniform {
            designated: (d as Vertex + 2..50).collect(),
        };
        let est = estimate_pi_sink_avoiding(
            &g,
            Item::Vertex(1),
            &avoid,
            0,
            default_cap(&g),
            &start,
            WalkMode::Simple,
            100_000,
            derive_seed(SEED, 7, d as u64),
        )
        .unwrap();
        let oracle = 1.0 / ((d + 1) * (d + 2)) as f64;
        let rel = est.estimate.value / oracle - 1.0;
        pass &= rel.abs() <= AC7_TOLERANCE && est.cap_exceeded == 0;
        parts.push(format!("d={d}: {:.5} vs {oracle:.5} ({:+.1}%)", est.estimate.value, 100.0 * rel));
    }
    report(
        "AC7",
        "K_50 sink-walk probability within 20% of 1/((d+1)(d+2))",
        pass,
        started,
        parts.join(", "),
    );
}

#[test]
fn ac08_avoiding_probability_floor() {
    let started = Instant::now();
    let families = walktest::experiments::calibration_families();
    let beta = CALIBRATION.beta_avoid;
    // five graphs per family; inputs measured once per graph
    let graphs: Vec<(Graph, f64, usize)> = families
        .iter()
        .enumerate()
        .flat_map(|(f, family)| (0..5u64).map(move |k| (f, family.clone(), k)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(f, family, k)| {
            let (g, _) = family.sample(derive_seed(SEED, 8, (f as u64) << 8 | k), WalkMode::Simple).unwrap();
            let inputs = measure_inputs(&g, 1, 0.0, WalkMode::Simple).unwrap();
            (g, inputs.c, inputs.t_mix)
        })
        .collect();
    let results: Vec<(f64, String)> = (0..500u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(derive_seed(SEED, 80, i), 0);
            let (g, c, t_mix) = &graphs[(i % graphs.len() as u64) as usize];
            let d = rng.random_range(1..=3usize);
            let inputs = walktest::params::ParamInputs {
                n: g.n(),
                d,
                min_degree: g.min_degree(),
                c: *c,
                t_mix: *t_mix,
                eta: 0.0,
            };
            let t = table1_params(inputs, CALIBRATION.constants).unwrap().t1 as usize;
            let picked = sample(&mut rng, g.n(), d + 1);
            let v = picked.index(0) as Vertex;
            let avoid: Vec<Item> = picked.iter().skip(1).map(|a| Item::Vertex(a as Vertex)).collect();
            let est = estimate_pi_item_avoiding(
                g,
                Item::Vertex(v),
                &avoid,
                t,
                &StartRule::UniformRandom,
                WalkMode::Simple,
                20_000,
                derive_seed(SEED, 81, i),
            )
            .unwrap();
            let floor = beta / (c.powi(4) * d as f64 * (*t_mix as f64).powi(2));
            (est.value / floor, format!("n={} d={d} t={t}", g.n()))
        })
        .collect();
    let held = results.iter().filter(|r| r.0 >= 1.0).count();
    let worst = results.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap();
    report(
        "AC8",
        "avoiding-walk probability above the calibrated floor",
        held == results.len(),
        started,
        format!("{held}/{} configurations, smallest ratio {:.2} at {}", results.len(), worst.0, worst.1),
    );
}

#[test]
fn ac09_fixed_input_savings() {
    let started = Instant::now();
    let mut cfg = SweepConfig::new(Family::Gnp { n: 256, p: 0.25 }, 1, 3, 100);
    cfg.seed = derive_seed(SEED, 9, 0);
    cfg.m_grid = (1..=40).map(|k| 50 * k).collect();
    cfg.budget = u64::MAX;
    let r = fixed_input_experiment(&cfg).unwrap();
    let limit = 2.0 * r.gamma * r.m_full as f64;
    let (rec, worst) = (r.recovery.min_m_95, r.worst_case.min_m_95);
    let pass = rec.is_some_and(|m| m as f64 <= limit) && r.saves_rows();
    report(
        "AC9",
        "random-instance 95% rows <= 2 gamma m'_1 and below worst-case rows",
        pass,
        started,
        format!(
            "recovery m95 = {rec:?}, worst-case m95 = {worst:?}, 2 gamma m'_1 = {limit:.0} (gamma = {:.3})",
            r.gamma
        ),
    );
}

#[test]
fn ac10_tomography() {
    let started = Instant::now();
    let family = Family::Gnp { n: 128, p: 0.2 };
    let clean = tomography_runs(&family, &TomoConfig::default(), 100, derive_seed(SEED, 10, 0)).unwrap();
    let noisy_cfg = TomoConfig {
        q: 0.05,
        ..TomoConfig::default()
    };
    let noisy = tomography_runs(&family, &noisy_cfg, 100, derive_seed(SEED, 10, 1)).unwrap();
    let probes = |s: &walktest::experiments::TomoSummary| {
        s.runs.iter().map(|r| r.probes).sum::<usize>() / s.runs.len().max(1)
    };
    report(
        "AC10",
        "probe localization of 2 congested links on G(128, 0.2)",
        clean.exact >= 95 && noisy.exact >= 90,
        started,
        format!(
            "noiseless {}/100 (mean {} probes), q = 0.05 {}/100 (mean {} probes)",
            clean.exact,
            probes(&clean),
            noisy.exact,
            probes(&noisy)
        ),
    );
}
