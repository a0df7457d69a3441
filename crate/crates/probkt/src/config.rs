//! TOML experiment configs, schema version 1. Every field is optional and
//! defaults to the values of [`ExperimentConfig::default`]:
//!
//! ```toml
//! schema_version = 1
//!
//! [synth]
//! source_classes = [0, 1, 2, 3, 4, 5, 6]
//! target_objects = [3, 3]
//! query_kind = "counts"
//!
//! [train]
//! rounds = 3
//! delta = 0.99
//! ```

use probkt_core::matcher::PseudoLabelStrategy;
use probkt_core::pipeline::{ExperimentConfig, ObjectRange, QueryKind, SynthConfig, TrainConfig};
use probkt_core::GradientMethod;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default)]
    pub synth: SynthSection,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKindName {
    Counts,
    Ranges,
    Sum,
    Presence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    ArgmaxCompliance,
    ForcedMatching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Clamp,
    Reverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub feature_dim: usize,
    pub num_classes: usize,
    pub source_classes: Vec<usize>,
    /// Inclusive `[min, max]` objects per scene.
    pub source_objects: [usize; 2],
    pub target_objects: [usize; 2],
    pub ood_objects: [usize; 2],
    pub noise_sigma: f64,
    pub n_source: usize,
    pub n_source_test: usize,
    pub n_target: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_ood: usize,
    pub query_kind: QueryKindName,
    pub seed: u64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub batch_size: usize,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub retrain_epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub rounds: usize,
    pub mix_source: bool,
    pub restart_retrain: bool,
    pub strategy: StrategyName,
    pub method: MethodName,
}

fn range(r: ObjectRange) -> [usize; 2] {
    [r.min, r.max]
}

fn object_range([min, max]: [usize; 2]) -> ObjectRange {
    ObjectRange { min, max }
}

impl Default for SynthSection {
    fn default() -> Self {
        let c = SynthConfig::default();
        SynthSection {
            feature_dim: c.feature_dim,
            num_classes: c.num_classes,
            source_classes: c.source_classes,
            source_objects: range(c.source_objects),
            target_objects: range(c.target_objects),
            ood_objects: range(c.ood_objects),
            noise_sigma: c.noise_sigma,
            n_source: c.n_source,
            n_source_test: c.n_source_test,
            n_target: c.n_target,
            n_val: c.n_val,
            n_test: c.n_test,
            n_ood: c.n_ood,
            query_kind: match c.query_kind {
                QueryKind::Counts => QueryKindName::Counts,
                QueryKind::Ranges => QueryKindName::Ranges,
                QueryKind::Sum => QueryKindName::Sum,
                QueryKind::Presence => QueryKindName::Presence,
            },
            seed: c.seed,
            folds: c.folds,
        }
    }
}

impl Default for TrainSection {
    fn default() -> Self {
        let c = TrainConfig::default();
        TrainSection {
            lr: c.lr,
            batch_size: c.batch_size,
            pretrain_epochs: c.pretrain_epochs,
            finetune_epochs: c.finetune_epochs,
            retrain_epochs: c.retrain_epochs,
            delta: c.delta,
            rounds: c.rounds,
            mix_source: c.mix_source,
            restart_retrain: c.restart_retrain,
            strategy: match c.strategy {
                PseudoLabelStrategy::ArgmaxCompliance => StrategyName::ArgmaxCompliance,
                PseudoLabelStrategy::ForcedMatching => StrategyName::ForcedMatching,
            },
            method: match c.method {
                GradientMethod::Clamp => MethodName::Clamp,
                GradientMethod::Reverse => MethodName::Reverse,
            },
        }
    }
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            schema_version: SCHEMA_VERSION,
            synth: SynthSection::default(),
            train: TrainSection::default(),
        }
    }
}

impl ConfigFile {
    pub fn to_experiment(&self) -> ExperimentConfig {
        let s = &self.synth;
        let t = &self.train;
        ExperimentConfig {
            synth: SynthConfig {
                feature_dim: s.feature_dim,
                num_classes: s.num_classes,
                source_classes: s.source_classes.clone(),
                source_objects: object_range(s.source_objects),
                target_objects: object_range(s.target_objects),
                ood_objects: object_range(s.ood_objects),
                noise_sigma: s.noise_sigma,
                n_source: s.n_source,
                n_source_test: s.n_source_test,
                n_target: s.n_target,
                n_val: s.n_val,
                n_test: s.n_test,
                n_ood: s.n_ood,
                query_kind: match s.query_kind {
                    QueryKindName::Counts => QueryKind::Counts,
                    QueryKindName::Ranges => QueryKind::Ranges,
                    QueryKindName::Sum => QueryKind::Sum,
                    QueryKindName::Presence => QueryKind::Presence,
                },
                seed: s.seed,
                folds: s.folds,
            },
            train: TrainConfig {
                lr: t.lr,
                batch_size: t.batch_size,
                pretrain_epochs: t.pretrain_epochs,
                finetune_epochs: t.finetune_epochs,
                retrain_epochs: t.retrain_epochs,
                delta: t.delta,
                rounds: t.rounds,
                mix_source: t.mix_source,
                restart_retrain: t.restart_retrain,
                strategy: match t.strategy {
                    StrategyName::ArgmaxCompliance => PseudoLabelStrategy::ArgmaxCompliance,
                    StrategyName::ForcedMatching => PseudoLabelStrategy::ForcedMatching,
                },
                method: match t.method {
                    MethodName::Clamp => GradientMethod::Clamp,
                    MethodName::Reverse => GradientMethod::Reverse,
                },
            },
        }
    }
}

/// Parses and validates a config. Errors name the offending field path.
pub fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::Input(e.to_string()))?;
    let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!(
            "config field `{path}`: {}",
            e.into_inner().message()
        ))
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "config field `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let config = file.to_experiment();
    config
        .validate()
        .map_err(|e| CliError::Input(format!("config: {e}")))?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sections_give_defaults() {
        let c = parse("schema_version = 1").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        let round = toml::to_string(&ConfigFile::default()).unwrap();
        assert_eq!(parse(&round).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn overrides_apply() {
        let c = parse(
            "schema_version = 1\n[synth]\nquery_kind = \"sum\"\ntarget_objects = [2, 5]\n\
             [train]\ndelta = 0.95\nstrategy = \"forced_matching\"\n",
        )
        .unwrap();
        assert_eq!(c.synth.query_kind, QueryKind::Sum);
        assert_eq!(c.synth.target_objects, ObjectRange { min: 2, max: 5 });
        assert_eq!(c.train.delta, Some(0.95));
        assert_eq!(c.train.strategy, PseudoLabelStrategy::ForcedMatching);
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse("schema_version = 1\n[synth]\nnoise_sigma = \"x\"\n").unwrap_err();
        assert!(e.to_string().contains("synth.noise_sigma"), "{e}");
        let e = parse("schema_version = 1\n[train]\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("train"), "{e}");
        let e = parse("schema_version = 2").unwrap_err();
        assert!(e.to_string().contains("schema_version"), "{e}");
        let e = parse("").unwrap_err();
        assert!(e.to_string().contains("schema_version"), "{e}");
        let e = parse("schema_version = 1\n[synth]\nnoise_sigma = -1.0\n").unwrap_err();
        assert!(e.to_string().contains("noise_sigma"), "{e}");
    }
}
