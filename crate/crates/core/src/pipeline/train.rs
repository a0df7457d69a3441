//! Training stages of the classifier head.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::head::{softmax_backward, ClassifierHead};
use super::synth::SynthScene;
use crate::error::{Error, Result};
use crate::matcher::{pseudo_labels, PseudoLabelStrategy, PseudoLabels};
use crate::objective::{evaluate_scene, ObjectiveOptions};
use crate::query::Query;
use crate::scene::Scene;
use crate::vocab::LabelVocab;

/// Hyperparameters of one training stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

/// One supervised example.
#[derive(Debug, Clone, Copy)]
pub struct LabeledObject<'a> {
    pub features: &'a [f64],
    pub label: usize,
}

fn gold_objects(set: &[SynthScene]) -> Result<Vec<LabeledObject<'_>>> {
    let mut out = Vec::new();
    for s in set {
        let gold = s
            .gold
            .as_ref()
            .ok_or_else(|| Error::MissingGoldLabels(s.id.clone()))?;
        if gold.len() != s.features.len() {
            return Err(Error::LengthMismatch {
                what: "gold labels",
                expected: s.features.len(),
                found: gold.len(),
            });
        }
        out.extend(
            s.features
                .iter()
                .zip(gold)
                .map(|(f, &label)| LabeledObject { features: f, label }),
        );
    }
    Ok(out)
}

/// Mini-batch gradient descent on per-object cross-entropy.
pub fn train_supervised(
    head: &mut ClassifierHead,
    objects: &[LabeledObject<'_>],
    schedule: Schedule,
    rng: &mut ChaCha8Rng,
) {
    let mut order: Vec<usize> = (0..objects.len()).collect();
    for _ in 0..schedule.epochs {
        order.shuffle(rng);
        for batch in order.chunks(schedule.batch_size.max(1)) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| objects[i].features).collect();
            let dz: Vec<Vec<f64>> = batch
                .iter()
                .map(|&i| {
                    let mut p = head.probs(objects[i].features);
                    p[objects[i].label] -= 1.0;
                    p
                })
                .collect();
            head.apply(&xs, &dz, schedule.lr, batch.len() as f64);
        }
    }
}

/// Supervised training on the gold labels of the source set.
pub fn pretrain(
    head: &mut ClassifierHead,
    source: &[SynthScene],
    schedule: Schedule,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let objects = gold_objects(source)?;
    train_supervised(head, &objects, schedule, rng);
    Ok(())
}

fn query_of(s: &SynthScene) -> Result<&Query> {
    s.query
        .as_ref()
        .ok_or_else(|| Error::MissingQueries(s.id.clone()))
}

/// The head's beliefs over a scene's objects.
pub fn predict_scene(head: &ClassifierHead, s: &SynthScene) -> Scene {
    Scene {
        id: s.id.clone(),
        beliefs: s.features.iter().map(|x| head.belief(x)).collect(),
        features: None,
        gold: None,
        query: None,
    }
}

/// Mean query NLL of the head over a set, without updating anything.
pub fn mean_nll(
    head: &ClassifierHead,
    set: &[SynthScene],
    vocab: &LabelVocab,
    opts: &ObjectiveOptions,
) -> Result<f64> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for s in set {
        let q = query_of(s)?;
        total += evaluate_scene(&predict_scene(head, s), q, vocab, opts, false)?.nll;
    }
    Ok(total / set.len() as f64)
}

/// Weak fine-tuning on query NLL. Returns the mean NLL seen during each
/// epoch (measured before each batch's update).
pub fn finetune(
    head: &mut ClassifierHead,
    target: &[SynthScene],
    vocab: &LabelVocab,
    schedule: Schedule,
    opts: &ObjectiveOptions,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    for s in target {
        query_of(s)?;
    }
    let mut order: Vec<usize> = (0..target.len()).collect();
    let mut history = Vec::with_capacity(schedule.epochs);
    for _ in 0..schedule.epochs {
        order.shuffle(rng);
        let mut epoch_nll = 0.0;
        for batch in order.chunks(schedule.batch_size.max(1)) {
            let mut xs: Vec<&[f64]> = Vec::new();
            let mut dz: Vec<Vec<f64>> = Vec::new();
            for &i in batch {
                let s = &target[i];
                let scene = predict_scene(head, s);
                let o = evaluate_scene(&scene, query_of(s)?, vocab, opts, true)?;
                epoch_nll += o.nll;
                let Some(g) = o.gradient else { continue };
                for (r, x) in s.features.iter().enumerate() {
                    xs.push(x);
                    dz.push(softmax_backward(scene.beliefs[r].probs(), g.row(r)));
                }
            }
            head.apply(&xs, &dz, schedule.lr, batch.len() as f64);
        }
        history.push(if target.is_empty() {
            0.0
        } else {
            epoch_nll / target.len() as f64
        });
    }
    Ok(history)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relabeled {
    /// `(scene index, pseudo-labels)` for every accepted scene.
    pub accepted: Vec<(usize, Vec<usize>)>,
    pub fraction: f64,
}

/// Pseudo-labels every scene whose prediction complies with its query.
pub fn relabel(
    head: &ClassifierHead,
    target: &[SynthScene],
    vocab: &LabelVocab,
    strategy: PseudoLabelStrategy,
) -> Result<Relabeled> {
    let mut accepted = Vec::new();
    for (i, s) in target.iter().enumerate() {
        let scene = predict_scene(head, s);
        if let PseudoLabels::Accept(labels) =
            pseudo_labels(&scene.beliefs, query_of(s)?, vocab, strategy)?
        {
            accepted.push((i, labels));
        }
    }
    let fraction = if target.is_empty() {
        0.0
    } else {
        accepted.len() as f64 / target.len() as f64
    };
    Ok(Relabeled { accepted, fraction })
}

/// Supervised training on pseudo-labeled target scenes, plus the source
/// set when `mix_source` holds.
pub fn retrain(
    head: &mut ClassifierHead,
    target: &[SynthScene],
    pseudo: &Relabeled,
    source: &[SynthScene],
    mix_source: bool,
    schedule: Schedule,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let mut objects = if mix_source {
        gold_objects(source)?
    } else {
        Vec::new()
    };
    for (i, labels) in &pseudo.accepted {
        let s = &target[*i];
        objects.extend(
            s.features
                .iter()
                .zip(labels)
                .map(|(f, &label)| LabeledObject { features: f, label }),
        );
    }
    if objects.is_empty() {
        return Err(Error::EmptyTrainingPool);
    }
    train_supervised(head, &objects, schedule, rng);
    Ok(())
}
