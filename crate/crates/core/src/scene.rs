use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::query::Query;
use crate::vocab::LabelVocab;

/// Ingest tolerance on `|sum - 1|` before a belief is renormalized.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// One object's probability vector over the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalBelief {
    probs: Vec<f64>,
}

impl CategoricalBelief {
    /// Validates and renormalizes so the entries sum to exactly 1.0 under
    /// left-to-right summation.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::checked(probs, 0)
    }

    fn checked(mut probs: Vec<f64>, object: usize) -> Result<Self> {
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::NegativeProbability { object });
        }
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::BeliefNotNormalized { object, sum });
        }
        renormalize(&mut probs);
        Ok(Self { probs })
    }

    /// Wraps a vector without checks. Used for perturbed coordinates and
    /// one-hot rows whose normalization is known.
    pub fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn one_hot(k: usize, class: usize) -> Self {
        let mut probs = alloc::vec![0.0; k];
        probs[class] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }
}

impl AsRef<[f64]> for CategoricalBelief {
    fn as_ref(&self) -> &[f64] {
        &self.probs
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn renormalize(probs: &mut [f64]) {
    let sum: f64 = probs.iter().sum();
    if sum != 1.0 {
        for p in probs.iter_mut() {
            *p /= sum;
        }
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    for &pos in &order {
        if settle_at(probs, pos) {
            return;
        }
    }
}

/// Moves `probs[pos]` so the left-to-right sum is exactly 1. The sum is
/// monotone in one entry, so it walks by ulps until it lands or steps over.
fn settle_at(probs: &mut [f64], pos: usize) -> bool {
    let start = probs[pos];
    let residual = 1.0 - probs.iter().sum::<f64>();
    probs[pos] = (start + residual).max(0.0);
    let mut last_dir = 0i8;
    for _ in 0..64 {
        let s: f64 = probs.iter().sum();
        let dir = if s > 1.0 {
            -1
        } else if s < 1.0 {
            1
        } else {
            return true;
        };
        if dir == -last_dir || (dir < 0 && probs[pos] == 0.0) {
            break;
        }
        probs[pos] = if dir > 0 {
            probs[pos].next_up()
        } else {
            probs[pos].next_down()
        };
        last_dir = dir;
    }
    probs[pos] = start;
    false
}

/// One joint label assignment (a possible world).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    pub labels: Vec<usize>,
}

/// A scene as it arrives from a file or caller, before validation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneRecord {
    pub id: String,
    pub beliefs: Vec<Vec<f64>>,
    pub features: Option<Vec<Vec<f64>>>,
    pub gold_labels: Option<Vec<String>>,
    pub query: Option<Query>,
}

/// A validated scene: normalized beliefs and resolved gold labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub id: String,
    pub beliefs: Vec<CategoricalBelief>,
    pub features: Option<Vec<Vec<f64>>>,
    pub gold: Option<Vec<usize>>,
    pub query: Option<Query>,
}

impl Scene {
    pub fn len(&self) -> usize {
        self.beliefs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beliefs.is_empty()
    }

    pub fn argmax_labels(&self) -> Vec<usize> {
        self.beliefs.iter().map(CategoricalBelief::argmax).collect()
    }

    pub fn to_record(&self, vocab: &LabelVocab) -> SceneRecord {
        SceneRecord {
            id: self.id.clone(),
            beliefs: self.beliefs.iter().map(|b| b.probs.clone()).collect(),
            features: self.features.clone(),
            gold_labels: self
                .gold
                .as_ref()
                .map(|g| g.iter().map(|&c| vocab.name(c).to_string()).collect()),
            query: self.query.clone(),
        }
    }
}

/// Validates a scene against a vocabulary and renormalizes its beliefs.
pub fn validate_scene(record: &SceneRecord, vocab: &LabelVocab) -> Result<Scene> {
    let n = record.beliefs.len();
    let beliefs = record
        .beliefs
        .iter()
        .enumerate()
        .map(|(i, probs)| {
            if probs.len() != vocab.len() {
                return Err(Error::LengthMismatch {
                    what: "belief width",
                    expected: vocab.len(),
                    found: probs.len(),
                });
            }
            CategoricalBelief::checked(probs.clone(), i)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(features) = &record.features {
        if features.len() != n {
            return Err(Error::LengthMismatch {
                what: "features",
                expected: n,
                found: features.len(),
            });
        }
        if let Some(first) = features.first() {
            if let Some(bad) = features.iter().find(|f| f.len() != first.len()) {
                return Err(Error::LengthMismatch {
                    what: "feature dimension",
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
    }
    let gold = match &record.gold_labels {
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::LengthMismatch {
                    what: "gold labels",
                    expected: n,
                    found: labels.len(),
                });
            }
            Some(
                labels
                    .iter()
                    .map(|l| vocab.resolve(l))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        None => None,
    };
    if let Some(q) = &record.query {
        q.validate(vocab)?;
    }
    Ok(Scene {
        id: record.id.clone(),
        beliefs,
        features: record.features.clone(),
        gold,
        query: record.query.clone(),
    })
}
