//! Entry points over contiguous row-major arrays, for foreign-function
//! bindings. Each scene's beliefs are `n x K` consecutive values; scenes are
//! concatenated. Validation is identical to [`crate::scene::validate_scene`].

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::objective::{evaluate_scene, ObjectiveOptions};
use crate::qlang;
use crate::scene::{validate_scene, Scene, SceneRecord};
use crate::vocab::LabelVocab;

#[derive(Debug, Clone, Copy)]
pub struct FlatBatch<'a> {
    pub vocab: &'a LabelVocab,
    pub beliefs: &'a [f64],
    /// Number of objects in each scene.
    pub objects: &'a [usize],
    /// One query (text format v1) per scene.
    pub queries: &'a [&'a str],
}

impl FlatBatch<'_> {
    fn scenes(&self) -> Result<Vec<Scene>> {
        if self.objects.len() != self.queries.len() {
            return Err(Error::LengthMismatch {
                what: "queries",
                expected: self.objects.len(),
                found: self.queries.len(),
            });
        }
        let k = self.vocab.len();
        let total: usize = self.objects.iter().sum::<usize>() * k;
        if total != self.beliefs.len() {
            return Err(Error::LengthMismatch {
                what: "belief array",
                expected: total,
                found: self.beliefs.len(),
            });
        }
        let mut offset = 0;
        self.objects
            .iter()
            .zip(self.queries)
            .enumerate()
            .map(|(s, (&n, text))| {
                let rows = self.beliefs[offset..offset + n * k]
                    .chunks(k)
                    .map(<[f64]>::to_vec)
                    .collect();
                offset += n * k;
                let record = SceneRecord {
                    id: format!("{s}"),
                    beliefs: rows,
                    query: Some(qlang::parse(text, self.vocab)?),
                    ..Default::default()
                };
                validate_scene(&record, self.vocab)
            })
            .collect()
    }
}

/// Query probability of each scene.
pub fn evaluate(batch: &FlatBatch<'_>, opts: &ObjectiveOptions) -> Result<Vec<f64>> {
    batch
        .scenes()?
        .iter()
        .map(|s| {
            let q = s.query.as_ref().expect("flat scenes carry queries");
            evaluate_scene(s, q, batch.vocab, opts, false).map(|o| o.probability)
        })
        .collect()
}

/// Summed negative log-likelihood and, per scene, the row-major `n x K`
/// gradient of that scene's term with respect to its beliefs.
pub fn nll_and_grad(
    batch: &FlatBatch<'_>,
    opts: &ObjectiveOptions,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let mut loss = 0.0;
    let mut grads = Vec::new();
    for s in batch.scenes()? {
        let q = s.query.as_ref().expect("flat scenes carry queries");
        let o = evaluate_scene(&s, q, batch.vocab, opts, true)?;
        loss += o.nll;
        grads.push(o.gradient.expect("requested").as_slice().to_vec());
    }
    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_examples() {
        let v = LabelVocab::new(&["A", "B"], &[], None).unwrap();
        let opts = ObjectiveOptions::default();
        let batch = FlatBatch {
            vocab: &v,
            beliefs: &[0.6, 0.4, 0.3, 0.7],
            objects: &[2],
            queries: &["count_objects([A,B],[1,1]),closed"],
        };
        let p = evaluate(&batch, &opts).unwrap();
        assert!((p[0] - 0.54).abs() < 1e-15);
        let (loss, g) = nll_and_grad(&batch, &opts).unwrap();
        assert!((loss + libm::log(0.54)).abs() < 1e-15);
        assert_eq!(g[0].len(), 4);

        let bad = FlatBatch {
            beliefs: &[0.6, 0.6],
            objects: &[1],
            queries: &["sum_objects(1)"],
            ..batch
        };
        assert!(matches!(
            evaluate(&bad, &opts),
            Err(Error::BeliefNotNormalized { .. })
        ));
        let empty = FlatBatch {
            beliefs: &[],
            objects: &[],
            queries: &[],
            ..batch
        };
        assert!(evaluate(&empty, &opts).unwrap().is_empty());
    }
}
