use alloc::format;
use alloc::vec::Vec;

use crate::engine::GradientMethod;
use crate::error::{Error, Result};
use crate::matcher::PseudoLabelStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryKind {
    /// Exact counts of every class present.
    #[default]
    Counts,
    /// Per present class, one of exact / more than / fewer than.
    Ranges,
    /// Sum of class values.
    Sum,
    /// Which classes occur.
    Presence,
}

/// Inclusive range of objects per scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObjectRange {
    pub min: usize,
    pub max: usize,
}

impl ObjectRange {
    pub const fn exactly(n: usize) -> Self {
        Self { min: n, max: n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub feature_dim: usize,
    pub num_classes: usize,
    /// Classes seen during pre-training; a nonempty proper subset.
    pub source_classes: Vec<usize>,
    pub source_objects: ObjectRange,
    pub target_objects: ObjectRange,
    pub ood_objects: ObjectRange,
    pub noise_sigma: f64,
    pub n_source: usize,
    pub n_source_test: usize,
    pub n_target: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_ood: usize,
    pub query_kind: QueryKind,
    pub seed: u64,
    pub folds: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            feature_dim: 16,
            num_classes: 10,
            source_classes: (0..7).collect(),
            source_objects: ObjectRange { min: 1, max: 4 },
            target_objects: ObjectRange::exactly(3),
            ood_objects: ObjectRange::exactly(4),
            noise_sigma: 0.3,
            n_source: 1000,
            n_source_test: 300,
            n_target: 700,
            n_val: 300,
            n_test: 300,
            n_ood: 300,
            query_kind: QueryKind::Counts,
            seed: 0,
            folds: 5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive".into());
        }
        if self.num_classes < 2 {
            return bad("num_classes must be at least 2".into());
        }
        let src = &self.source_classes;
        if src.is_empty() || src.len() >= self.num_classes {
            return bad("source_classes must be a nonempty proper subset of the classes".into());
        }
        for (i, &c) in src.iter().enumerate() {
            if c >= self.num_classes || src[..i].contains(&c) {
                return bad(format!(
                    "source_classes[{i}] = {c} is out of range or repeated"
                ));
            }
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be positive".into());
        }
        for (name, r) in [
            ("source_objects", self.source_objects),
            ("target_objects", self.target_objects),
            ("ood_objects", self.ood_objects),
        ] {
            if r.min > r.max {
                return bad(format!("{name}: min exceeds max"));
            }
        }
        if self.folds == 0 {
            return bad("folds must be positive".into());
        }
        Ok(())
    }

    /// Classes absent from pre-training.
    pub fn new_classes(&self) -> Vec<usize> {
        (0..self.num_classes)
            .filter(|c| !self.source_classes.contains(c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub retrain_epochs: usize,
    /// Confidence filter during fine-tuning; `None` evaluates exactly.
    pub delta: Option<f64>,
    pub rounds: usize,
    /// Retrain on source objects as well as pseudo-labels.
    pub mix_source: bool,
    /// Restart retraining from the pre-trained head instead of the current one.
    pub restart_retrain: bool,
    pub strategy: PseudoLabelStrategy,
    /// How fine-tuning differentiates the query probability.
    pub method: GradientMethod,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.05,
            batch_size: 16,
            pretrain_epochs: 30,
            finetune_epochs: 30,
            retrain_epochs: 30,
            delta: None,
            rounds: 3,
            mix_source: false,
            restart_retrain: false,
            strategy: PseudoLabelStrategy::ArgmaxCompliance,
            method: GradientMethod::Reverse,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidConfig("lr must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if let Some(d) = self.delta {
            if !(d > 0.5 && d <= 1.0) {
                return Err(Error::InvalidDelta(d));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub synth: SynthConfig,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.train.validate()
    }
}
