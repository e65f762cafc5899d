use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use walktest::experiments::{
    calibrate, fixed_input_experiment, mixing_scaling, success_sweep, tomography_demo, tomography_runs,
    verification_suite, CalibrationConfig, Family, MixingScalingConfig, SuiteConfig, SweepConfig, TomoConfig,
};
use walktest::graph::Graph;
use walktest::walks::WalkMode;
use walktest::{Error, Result};

use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Success rate against the row count.
    Sweep,
    /// Mixing time against graph size.
    Mixing,
    /// Average-case recovery against worst-case disjunctness.
    FixedInput,
    /// Every bound check on one graph.
    Verify,
    /// Link-failure localization with probes.
    Tomo,
    /// Refit the calibrated constants.
    Calibrate,
}

#[derive(Debug, Args, Serialize)]
pub struct ExperimentArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    /// JSON config for the chosen kind.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
}

/// Where an experiment gets its graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File { path: PathBuf },
    Family(Family),
}

impl GraphSource {
    fn load(&self, seed: u64, mode: WalkMode, manifest: &mut RunManifest) -> Result<Graph> {
        match self {
            GraphSource::File { path } => Graph::parse(&manifest.read_input(path)?),
            GraphSource::Family(f) => Ok(f.sample(seed, mode)?.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub graph: GraphSource,
    pub suite: SuiteConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoExperiment {
    pub graph: GraphSource,
    /// More than one run needs a graph family; each run draws a new graph.
    #[serde(default = "one")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tomo: TomoConfig,
}

fn one() -> usize {
    1
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

fn write(dir: &Path, name: &str, text: &str, manifest: &mut RunManifest) -> Result<()> {
    manifest.write_output(Some(&dir.join(name)), text)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Runs the experiment, writing `result.json`, a CSV table where one
/// applies, and (via the caller) `manifest.json` into the output
/// directory. `--seed` overrides the config's seed. Returns the seed used.
pub fn run(a: &ExperimentArgs, seed: Option<u64>, manifest: &mut RunManifest) -> Result<u64> {
    let text = manifest.read_input(&a.config)?;
    fs::create_dir_all(&a.out)?;
    let dir = a.out.as_path();
    let used = match a.kind {
        Kind::Sweep | Kind::FixedInput => {
            let mut cfg: SweepConfig = parse(&text)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            manifest.params = serde_json::to_value(&cfg)?;
            let csv = if matches!(a.kind, Kind::Sweep) {
                let r = success_sweep(&cfg)?;
                write(dir, "result.json", &json(&r)?, manifest)?;
                r.to_csv()
            } else {
                let r = fixed_input_experiment(&cfg)?;
                write(dir, "result.json", &json(&r)?, manifest)?;
                r.to_csv()
            };
            write(dir, "result.csv", &csv, manifest)?;
            cfg.seed
        }
        Kind::Mixing => {
            let mut cfg: MixingScalingConfig = parse(&text)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            manifest.params = serde_json::to_value(&cfg)?;
            let r = mixing_scaling(&cfg)?;
            write(dir, "result.json", &json(&r)?, manifest)?;
            write(dir, "result.csv", &r.to_csv(), manifest)?;
            cfg.seed
        }
        Kind::Verify => {
            let mut cfg: VerifyConfig = parse(&text)?;
            cfg.suite.seed = seed.unwrap_or(cfg.suite.seed);
            manifest.params = serde_json::to_value(&cfg)?;
            let g = cfg.graph.load(cfg.suite.seed, cfg.suite.mode, manifest)?;
            let r = verification_suite(&g, &cfg.suite)?;
            write(dir, "result.json", &json(&r)?, manifest)?;
            write(dir, "report.txt", &r.to_text(), manifest)?;
            cfg.suite.seed
        }
        Kind::Tomo => {
            let mut cfg: TomoExperiment = parse(&text)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            manifest.params = serde_json::to_value(&cfg)?;
            if cfg.runs == 1 {
                let g = cfg.graph.load(cfg.seed, cfg.tomo.mode, manifest)?;
                let r = tomography_demo(&g, &cfg.tomo, cfg.seed)?;
                write(dir, "result.json", &json(&r)?, manifest)?;
                let mut csv = String::from("edge,u,v,congested,flagged,clean_probes\n");
                for l in &r.links {
                    csv += &format!(
                        "{},{},{},{},{},{}\n",
                        l.edge, l.endpoints.0, l.endpoints.1, l.congested, l.flagged, l.clean_probes
                    );
                }
                write(dir, "result.csv", &csv, manifest)?;
            } else {
                let GraphSource::Family(family) = &cfg.graph else {
                    return Err(Error::InvalidParameter("repeated tomography runs need a graph family".into()));
                };
                let r = tomography_runs(family, &cfg.tomo, cfg.runs, cfg.seed)?;
                write(dir, "result.json", &json(&r)?, manifest)?;
                let mut csv = String::from("index,exact,probes,tau,false_positives,false_negatives\n");
                for run in &r.runs {
                    csv += &format!(
                        "{},{},{},{},{},{}\n",
                        run.index, run.exact, run.probes, run.tau, run.false_positives, run.false_negatives
                    );
                }
                write(dir, "result.csv", &csv, manifest)?;
            }
            cfg.seed
        }
        Kind::Calibrate => {
            let mut cfg: CalibrationConfig = parse(&text)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            manifest.params = serde_json::to_value(&cfg)?;
            let r = calibrate(&cfg)?;
            write(dir, "result.json", &json(&r)?, manifest)?;
            cfg.seed
        }
    };
    Ok(used)
}
