use alloc::vec::Vec;

use super::config::{ExperimentConfig, QueryKind, SynthConfig};
use super::head::ClassifierHead;
use super::metrics::{count_accuracy, sum_accuracy};
use super::synth::{self, generate_dataset, SynthScene};
use super::train::{finetune, mean_nll, pretrain, relabel, retrain, Schedule};
use crate::error::{Error, Result};
use crate::objective::ObjectiveOptions;
use crate::vocab::LabelVocab;

// Training draws from its own RNG streams, disjoint from the generator's.
const STREAM_TRAIN: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitMetrics {
    pub count_accuracy: f64,
    /// Only for sum queries.
    pub sum_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationReport {
    /// 0 is the pre-trained head and 1 the first fine-tuned one. Each later
    /// iteration follows one relabel and retrain step.
    pub iteration: usize,
    pub target: SplitMetrics,
    /// Count accuracy on target test scenes that contain a new class.
    pub target_new_classes: f64,
    pub ood: SplitMetrics,
    pub source: SplitMetrics,
    pub validation: SplitMetrics,
    /// Share of target training scenes accepted by the last relabeling.
    pub relabeled_fraction: Option<f64>,
    /// Mean query NLL on the validation split.
    pub mean_nll: f64,
}

impl IterationReport {
    fn selection_score(&self) -> f64 {
        self.validation
            .sum_accuracy
            .unwrap_or(self.validation.count_accuracy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub iterations: Vec<IterationReport>,
    /// Iteration with the best validation accuracy; earliest on ties.
    pub best_iteration: usize,
    pub head: ClassifierHead,
}

impl FoldReport {
    pub fn best(&self) -> &IterationReport {
        &self.iterations[self.best_iteration]
    }
}

fn gold_of(set: &[SynthScene]) -> Result<Vec<Vec<usize>>> {
    set.iter()
        .map(|s| {
            s.gold
                .clone()
                .ok_or_else(|| Error::MissingGoldLabels(s.id.clone()))
        })
        .collect()
}

fn split_metrics(
    head: &ClassifierHead,
    set: &[SynthScene],
    vocab: &LabelVocab,
    kind: QueryKind,
) -> Result<SplitMetrics> {
    let gold = gold_of(set)?;
    let pred: Vec<Vec<usize>> = set
        .iter()
        .map(|s| s.features.iter().map(|x| head.predict(x)).collect())
        .collect();
    Ok(SplitMetrics {
        count_accuracy: count_accuracy(&pred, &gold, vocab)?,
        sum_accuracy: match kind {
            QueryKind::Sum => Some(sum_accuracy(&pred, &gold, vocab)?),
            _ => None,
        },
    })
}

struct Evaluator<'a> {
    vocab: &'a LabelVocab,
    kind: QueryKind,
    target: &'a [SynthScene],
    target_new: Vec<SynthScene>,
    ood: &'a [SynthScene],
    source: &'a [SynthScene],
    val: &'a [SynthScene],
}

impl Evaluator<'_> {
    fn report(
        &self,
        iteration: usize,
        head: &ClassifierHead,
        relabeled_fraction: Option<f64>,
    ) -> Result<IterationReport> {
        let m = |set: &[SynthScene]| split_metrics(head, set, self.vocab, self.kind);
        Ok(IterationReport {
            iteration,
            target: m(self.target)?,
            target_new_classes: m(&self.target_new)?.count_accuracy,
            ood: m(self.ood)?,
            source: m(self.source)?,
            validation: m(self.val)?,
            relabeled_fraction,
            mean_nll: mean_nll(head, self.val, self.vocab, &ObjectiveOptions::default())?,
        })
    }
}

/// Runs one fold: pretraining followed by `rounds` relabeling cycles.
pub fn run_fold(config: &ExperimentConfig, fold: usize) -> Result<FoldReport> {
    config.validate()?;
    let (synth_cfg, train) = (&config.synth, &config.train);
    let data = generate_dataset(synth_cfg, fold)?;
    let vocab = &data.vocab;
    let new = synth_cfg.new_classes();
    let eval = Evaluator {
        vocab,
        kind: synth_cfg.query_kind,
        target: &data.target_test,
        target_new: data
            .target_test
            .iter()
            .filter(|s| s.gold.iter().flatten().any(|g| new.contains(g)))
            .cloned()
            .collect(),
        ood: &data.ood_test,
        source: &data.source_test,
        val: &data.target_val,
    };
    let mut rng = synth::rng(synth_cfg.seed, STREAM_TRAIN + fold as u64);
    let schedule = |epochs| Schedule {
        epochs,
        lr: train.lr,
        batch_size: train.batch_size,
    };
    let opts = ObjectiveOptions {
        delta: train.delta,
        method: train.method,
        ..Default::default()
    };

    let mut head = ClassifierHead::zeros(synth_cfg.num_classes, synth_cfg.feature_dim);
    pretrain(
        &mut head,
        &data.source_train,
        schedule(train.pretrain_epochs),
        &mut rng,
    )?;
    let pretrained = head.clone();
    let mut reports = Vec::new();
    let mut best = (0, head.clone());
    let mut record = |reports: &mut Vec<IterationReport>, head: &ClassifierHead, frac| {
        let r = eval.report(reports.len(), head, frac)?;
        let better = reports
            .get(best.0)
            .is_some_and(|b: &IterationReport| r.selection_score() > b.selection_score());
        if better {
            best = (r.iteration, head.clone());
        }
        reports.push(r);
        Ok::<_, Error>(())
    };
    record(&mut reports, &head, None)?;

    for round in 0..train.rounds {
        finetune(
            &mut head,
            &data.target_train,
            vocab,
            schedule(train.finetune_epochs),
            &opts,
            &mut rng,
        )?;
        if round == 0 {
            record(&mut reports, &head, None)?;
        }
        let pseudo = relabel(&head, &data.target_train, vocab, train.strategy)?;
        if train.restart_retrain {
            head = pretrained.clone();
        }
        retrain(
            &mut head,
            &data.target_train,
            &pseudo,
            &data.source_train,
            train.mix_source,
            schedule(train.retrain_epochs),
            &mut rng,
        )?;
        record(&mut reports, &head, Some(pseudo.fraction))?;
    }
    Ok(FoldReport {
        fold,
        iterations: reports,
        best_iteration: best.0,
        head: best.1,
    })
}

/// Runs every fold with the given number of relabeling rounds.
pub fn run_iterations(config: &ExperimentConfig, rounds: usize) -> Result<Vec<FoldReport>> {
    let mut config = config.clone();
    config.train.rounds = rounds;
    (0..config.synth.folds)
        .map(|f| run_fold(&config, f))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: libm::sqrt(var),
        }
    }
}

/// Mean and spread over folds of the best-iteration test metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub folds: usize,
    pub target_count: MeanStd,
    pub ood_count: MeanStd,
    pub source_count: MeanStd,
    pub target_sum: Option<MeanStd>,
    pub ood_sum: Option<MeanStd>,
}

pub fn aggregate(folds: &[FoldReport]) -> Aggregate {
    let best: Vec<&IterationReport> = folds.iter().map(FoldReport::best).collect();
    let over = |f: &dyn Fn(&IterationReport) -> f64| {
        MeanStd::of(&best.iter().map(|r| f(r)).collect::<Vec<_>>())
    };
    let sums = best.iter().all(|r| r.target.sum_accuracy.is_some()) && !best.is_empty();
    Aggregate {
        folds: folds.len(),
        target_count: over(&|r| r.target.count_accuracy),
        ood_count: over(&|r| r.ood.count_accuracy),
        source_count: over(&|r| r.source.count_accuracy),
        target_sum: sums.then(|| over(&|r| r.target.sum_accuracy.unwrap_or(0.0))),
        ood_sum: sums.then(|| over(&|r| r.ood.sum_accuracy.unwrap_or(0.0))),
    }
}

/// Shrinks a config for quick runs in tests and examples.
#[doc(hidden)]
pub fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        synth: SynthConfig {
            n_source: 200,
            n_source_test: 50,
            n_target: 120,
            n_val: 50,
            n_test: 60,
            n_ood: 40,
            folds: 2,
            ..Default::default()
        },
        train: super::config::TrainConfig {
            pretrain_epochs: 10,
            finetune_epochs: 8,
            retrain_epochs: 8,
            rounds: 2,
            ..Default::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rounds_reports_only_the_pretrained_head() {
        let r = run_iterations(&small_config(), 0).unwrap();
        assert_eq!(r.len(), 2);
        for f in &r {
            assert_eq!(f.iterations.len(), 1);
            assert_eq!(f.iterations[0].iteration, 0);
            assert_eq!(f.best_iteration, 0);
        }
    }

    #[test]
    fn runs_are_deterministic_and_reports_well_formed() {
        let cfg = small_config();
        let a = run_fold(&cfg, 1).unwrap();
        assert_eq!(a, run_fold(&cfg, 1).unwrap());
        assert_eq!(a.iterations.len(), cfg.train.rounds + 2);
        for (i, it) in a.iterations.iter().enumerate() {
            assert_eq!(it.iteration, i);
            assert_eq!(it.relabeled_fraction.is_some(), i >= 2);
            for m in [it.target, it.ood, it.source, it.validation] {
                assert!((0.0..=1.0).contains(&m.count_accuracy));
                assert!(m.sum_accuracy.is_none());
            }
        }
        assert_eq!(a.iterations[0].target_new_classes, 0.0);
    }

    #[test]
    fn sum_accuracy_bounds_count_accuracy() {
        let mut cfg = small_config();
        cfg.synth.query_kind = QueryKind::Sum;
        for it in run_fold(&cfg, 0).unwrap().iterations {
            for m in [it.target, it.ood, it.source, it.validation] {
                assert!(m.sum_accuracy.unwrap() >= m.count_accuracy);
            }
        }
    }

    #[test]
    fn aggregate_mean_and_std() {
        let m = MeanStd::of(&[0.5, 1.0]);
        assert_eq!((m.mean, m.std), (0.75, 0.25));
        let folds = run_iterations(&small_config(), 1).unwrap();
        let agg = aggregate(&folds);
        assert_eq!(agg.folds, 2);
        assert!(agg.target_sum.is_none());
    }
}
