//! Synthetic scenes: one Gaussian cluster of features per class around a
//! prototype on the unit sphere.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::config::{ObjectRange, QueryKind, SynthConfig};
use crate::error::Result;
use crate::query::{indicator_to_interval, CountConstraint, Interval, Mode, Query};
use crate::vocab::LabelVocab;

/// One scene of the experiment: object features plus whichever of gold
/// labels and weak query are known. The generator fills in both; the
/// trainer reads gold labels only on source and test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub id: String,
    pub features: Vec<Vec<f64>>,
    pub gold: Option<Vec<usize>>,
    pub query: Option<Query>,
}

impl SynthScene {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub vocab: LabelVocab,
    pub prototypes: Vec<Vec<f64>>,
    pub source_train: Vec<SynthScene>,
    pub source_test: Vec<SynthScene>,
    pub target_train: Vec<SynthScene>,
    pub target_val: Vec<SynthScene>,
    pub target_test: Vec<SynthScene>,
    pub ood_test: Vec<SynthScene>,
}

// RNG streams: prototypes and test splits are shared by all folds.
const STREAM_PROTOTYPES: u64 = 0;
const STREAM_TEST: u64 = 1;
const STREAM_FOLD: u64 = 16;

pub(crate) fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

struct Sampler<'a> {
    config: &'a SynthConfig,
    prototypes: &'a [Vec<f64>],
    vocab: &'a LabelVocab,
    noise: Normal<f64>,
}

impl Sampler<'_> {
    fn scenes(
        &self,
        rng: &mut ChaCha8Rng,
        prefix: &str,
        count: usize,
        objects: ObjectRange,
        classes: &[usize],
    ) -> Vec<SynthScene> {
        (0..count)
            .map(|s| {
                let n = rng.random_range(objects.min..=objects.max);
                let gold: Vec<usize> = (0..n)
                    .map(|_| classes[rng.random_range(0..classes.len())])
                    .collect();
                let features = gold
                    .iter()
                    .map(|&c| {
                        self.prototypes[c]
                            .iter()
                            .map(|&m| m + self.noise.sample(rng))
                            .collect()
                    })
                    .collect();
                let query = weak_query(&gold, self.config.query_kind, self.vocab, rng);
                SynthScene {
                    id: format!("{prefix}-{s}"),
                    features,
                    gold: Some(gold),
                    query: Some(query),
                }
            })
            .collect()
    }
}

/// The weak query a scene with these gold labels is annotated with.
pub fn weak_query(
    gold: &[usize],
    kind: QueryKind,
    vocab: &LabelVocab,
    rng: &mut impl Rng,
) -> Query {
    let mut present: Vec<(usize, u32)> = Vec::new();
    for &g in gold {
        if vocab.is_ignored(g) {
            continue;
        }
        match present.iter_mut().find(|(c, _)| *c == g) {
            Some((_, n)) => *n += 1,
            None => present.push((g, 1)),
        }
    }
    present.sort_unstable();
    match kind {
        QueryKind::Counts => Query::exact_counts(&present, Mode::Open),
        QueryKind::Ranges => Query::Counts {
            constraints: present
                .iter()
                .map(|&(class, n)| {
                    let interval = match rng.random_range(0..3u8) {
                        0 => Ok(Interval::exactly(n)),
                        1 => indicator_to_interval(n as i64 - 1, 1),
                        _ => indicator_to_interval(n as i64 + 1, -1),
                    }
                    .unwrap_or(Interval::exactly(n));
                    CountConstraint { class, interval }
                })
                .collect(),
            mode: Mode::Open,
        },
        QueryKind::Sum => Query::Sum {
            target: gold.iter().map(|&g| vocab.value(g)).sum(),
        },
        QueryKind::Presence => Query::Presence {
            classes: present.iter().map(|&(c, _)| c).collect(),
        },
    }
}

fn unit_sphere(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Builds the splits for one fold. Prototypes and test splits depend only
/// on the seed; train and validation splits also depend on the fold.
pub fn generate_dataset(config: &SynthConfig, fold: usize) -> Result<Dataset> {
    config.validate()?;
    let vocab = LabelVocab::numbered(config.num_classes);
    let mut proto_rng = rng(config.seed, STREAM_PROTOTYPES);
    let prototypes: Vec<Vec<f64>> = (0..config.num_classes)
        .map(|_| unit_sphere(&mut proto_rng, config.feature_dim))
        .collect();
    let noise = Normal::new(0.0, config.noise_sigma)
        .map_err(|_| crate::error::Error::InvalidConfig("noise_sigma".into()))?;
    let sampler = Sampler {
        config,
        prototypes: &prototypes,
        vocab: &vocab,
        noise,
    };
    let all: Vec<usize> = (0..config.num_classes).collect();
    let src = &config.source_classes;

    let mut test_rng = rng(config.seed, STREAM_TEST);
    let source_test = sampler.scenes(
        &mut test_rng,
        "source-test",
        config.n_source_test,
        config.source_objects,
        src,
    );
    let target_test = sampler.scenes(
        &mut test_rng,
        "target-test",
        config.n_test,
        config.target_objects,
        &all,
    );
    let ood_test = sampler.scenes(
        &mut test_rng,
        "ood-test",
        config.n_ood,
        config.ood_objects,
        &all,
    );

    let mut fold_rng = rng(config.seed, STREAM_FOLD + fold as u64);
    let source_train = sampler.scenes(
        &mut fold_rng,
        "source",
        config.n_source,
        config.source_objects,
        src,
    );
    let target_train = sampler.scenes(
        &mut fold_rng,
        "target",
        config.n_target,
        config.target_objects,
        &all,
    );
    let target_val = sampler.scenes(
        &mut fold_rng,
        "target-val",
        config.n_val,
        config.target_objects,
        &all,
    );

    Ok(Dataset {
        vocab,
        prototypes,
        source_train,
        source_test,
        target_train,
        target_val,
        target_test,
        ood_test,
    })
}
