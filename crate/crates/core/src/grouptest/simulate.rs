use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::designs::MeasurementMatrix;
use crate::error::{invalid, Error, Result};
use crate::rng::stream;
use crate::walks::ItemKind;

/// Planted defective items of one kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectiveSet {
    pub item_kind: ItemKind,
    pub items: Vec<u32>,
}

impl DefectiveSet {
    pub fn new(item_kind: ItemKind, mut items: Vec<u32>) -> Self {
        items.sort_unstable();
        items.dedup();
        DefectiveSet { item_kind, items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum NoiseModel {
    #[default]
    Noiseless,
    /// Every outcome flips independently with probability `q < 1/2`.
    Flip { q: f64 },
    /// Every (defective, test) incidence is dropped with probability `q`.
    Dilution { q: f64 },
    /// The listed outcome positions flip.
    Adversarial { flips: Vec<usize> },
}

impl NoiseModel {
    fn validate(&self, m: usize) -> Result<()> {
        match self {
            NoiseModel::Noiseless => Ok(()),
            NoiseModel::Flip { q } if !(0.0..0.5).contains(q) => {
                Err(invalid!("flip probability must lie in [0, 1/2), got {q}"))
            }
            NoiseModel::Dilution { q } if !(0.0..=1.0).contains(q) => {
                Err(invalid!("dilution probability must lie in [0, 1], got {q}"))
            }
            NoiseModel::Adversarial { flips } => match flips.iter().find(|&&i| i >= m) {
                Some(i) => Err(invalid!("flip position {i} out of range for {m} tests")),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

/// `none`, `flip:Q` or `dilute:Q`.
impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let prob = |q: &str| q.parse::<f64>().map_err(|e| invalid!("bad noise probability {q:?}: {e}"));
        match s.split_once(':') {
            None if s == "none" => Ok(NoiseModel::Noiseless),
            Some(("flip", q)) => Ok(NoiseModel::Flip { q: prob(q)? }),
            Some(("dilute", q)) => Ok(NoiseModel::Dilution { q: prob(q)? }),
            _ => Err(invalid!("noise must be none, flip:Q or dilute:Q, got {s:?}")),
        }
    }
}

/// Test results. Serialized bits are a `0`/`1` string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeVector {
    #[serde(serialize_with = "bits_out", deserialize_with = "bits_in")]
    pub bits: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub item_kind: Option<ItemKind>,
    #[serde(default)]
    pub noise_applied: NoiseModel,
}

fn bits_out<S: Serializer>(bits: &[bool], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&bits.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
}

fn bits_in<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<bool>, D::Error> {
    let text = String::deserialize(d)?;
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(serde::de::Error::custom(format!("bit string holds {other:?}"))),
        })
        .collect()
}

impl OutcomeVector {
    pub fn noiseless(bits: Vec<bool>) -> Self {
        OutcomeVector {
            bits,
            item_kind: None,
            noise_applied: NoiseModel::Noiseless,
        }
    }

    pub fn positives(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// OR-test outcomes of `matrix` on `defectives`, then noise.
///
/// Row `i` draws its noise from `stream(seed, i)` only.
pub fn simulate_tests(
    matrix: &MeasurementMatrix,
    defectives: &DefectiveSet,
    noise: &NoiseModel,
    seed: u64,
) -> Result<OutcomeVector> {
    if defectives.item_kind != matrix.item_kind {
        return Err(invalid!(
            "defectives are {}s but the matrix tests {}s",
            defectives.item_kind.name(),
            matrix.item_kind.name()
        ));
    }
    for &x in &defectives.items {
        if x as usize >= matrix.n_items {
            return Err(invalid!("defective {x} out of range"));
        }
        if matrix.is_stripped(x) {
            return Err(invalid!("defective {x} is a stripped column"));
        }
    }
    noise.validate(matrix.m())?;
    let mut bits: Vec<bool> = matrix
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let hits = defectives.items.iter().filter(|x| row.binary_search(x).is_ok());
            match noise {
                NoiseModel::Dilution { q } => {
                    let mut rng = stream(seed, i as u64);
                    let mut positive = false;
                    for _ in hits {
                        // one draw per incidence, so the stream layout is stable
                        positive |= rng.random::<f64>() >= *q;
                    }
                    positive
                }
                _ => hits.count() > 0,
            }
        })
        .collect();
    match noise {
        NoiseModel::Flip { q } => {
            for (i, b) in bits.iter_mut().enumerate() {
                if stream(seed, i as u64).random::<f64>() < *q {
                    *b = !*b;
                }
            }
        }
        NoiseModel::Adversarial { flips } => {
            for &i in flips {
                bits[i] = !bits[i];
            }
        }
        _ => {}
    }
    Ok(OutcomeVector {
        bits,
        item_kind: Some(matrix.item_kind),
        noise_applied: noise.clone(),
    })
}
