//! Desk-scale knowledge-transfer experiment: a linear head over synthetic
//! object features, pre-trained on source classes and fine-tuned on weak
//! queries with iterative relabeling.

mod config;
mod head;
mod metrics;
mod report;
mod synth;
mod train;

pub use config::{ExperimentConfig, ObjectRange, QueryKind, SynthConfig, TrainConfig};
pub use head::{softmax, softmax_backward, ClassifierHead};
pub use metrics::{count_accuracy, sum_accuracy};
pub use report::{
    aggregate, run_fold, run_iterations, small_config, Aggregate, FoldReport, IterationReport,
    MeanStd, SplitMetrics,
};
pub use synth::{generate_dataset, weak_query, Dataset, SynthScene};
pub use train::{
    finetune, mean_nll, predict_scene, pretrain, relabel, retrain, train_supervised, LabeledObject,
    Relabeled, Schedule,
};
