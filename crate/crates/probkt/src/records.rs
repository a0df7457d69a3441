//! JSON shapes of everything the command line prints. Each record carries
//! `schema_version` so consumers can detect format changes.

use probkt_core::pipeline::{Aggregate, FoldReport, IterationReport, MeanStd, SplitMetrics};
use probkt_core::query::{Interval, Mode};
use probkt_core::{LabelVocab, Query};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

fn interval(i: &Interval) -> Value {
    json!({ "lo": i.lo, "hi": i.hi })
}

/// Structural dump of a query; class indices become names.
pub fn query_ast(q: &Query, vocab: &LabelVocab) -> Value {
    match q {
        Query::Counts { constraints, mode } => json!({
            "Counts": {
                "mode": match mode { Mode::Open => "open", Mode::Closed => "closed" },
                "constraints": constraints.iter().map(|c| json!({
                    "class": vocab.name(c.class),
                    "interval": interval(&c.interval),
                })).collect::<Vec<_>>(),
            }
        }),
        Query::Sum { target } => json!({ "Sum": { "target": target } }),
        Query::Presence { classes } => json!({
            "Presence": { "classes": classes.iter().map(|&c| vocab.name(c)).collect::<Vec<_>>() }
        }),
        Query::And(parts) => json!({
            "And": parts.iter().map(|p| query_ast(p, vocab)).collect::<Vec<_>>()
        }),
    }
}

fn split(m: &SplitMetrics) -> Value {
    json!({ "count_accuracy": m.count_accuracy, "sum_accuracy": m.sum_accuracy })
}

pub fn iteration(fold: usize, r: &IterationReport) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "record": "iteration",
        "fold": fold,
        "iteration": r.iteration,
        "target": split(&r.target),
        "target_new_classes": { "count_accuracy": r.target_new_classes },
        "ood": split(&r.ood),
        "source": split(&r.source),
        "validation": split(&r.validation),
        "relabeled_fraction": r.relabeled_fraction,
        "mean_nll": r.mean_nll,
    })
}

pub fn fold(f: &FoldReport) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "record": "fold",
        "fold": f.fold,
        "best_iteration": f.best_iteration,
        "best": iteration(f.fold, f.best()),
    })
}

fn mean_std(m: &MeanStd) -> Value {
    json!({ "mean": m.mean, "std": m.std })
}

pub fn aggregate(a: &Aggregate) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "record": "aggregate",
        "folds": a.folds,
        "target_count_accuracy": mean_std(&a.target_count),
        "ood_count_accuracy": mean_std(&a.ood_count),
        "source_count_accuracy": mean_std(&a.source_count),
        "target_sum_accuracy": a.target_sum.as_ref().map(mean_std),
        "ood_sum_accuracy": a.ood_sum.as_ref().map(mean_std),
    })
}

/// Best head of every fold.
pub fn heads(folds: &[FoldReport], vocab_size: usize, feature_dim: usize) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "num_classes": vocab_size,
        "feature_dim": feature_dim,
        "folds": folds.iter().map(|f| json!({
            "fold": f.fold,
            "best_iteration": f.best_iteration,
            "weights": f.head.weights.chunks(feature_dim.max(1)).collect::<Vec<_>>(),
            "bias": f.head.bias,
        })).collect::<Vec<_>>(),
    })
}
