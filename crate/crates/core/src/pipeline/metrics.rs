use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::vocab::LabelVocab;

fn check(pred: &[Vec<usize>], gold: &[Vec<usize>]) -> Result<()> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            what: "scenes",
            expected: gold.len(),
            found: pred.len(),
        });
    }
    Ok(())
}

fn mean(hits: impl Iterator<Item = bool>) -> f64 {
    let (mut n, mut ok) = (0usize, 0usize);
    for h in hits {
        n += 1;
        ok += h as usize;
    }
    if n == 0 {
        0.0
    } else {
        ok as f64 / n as f64
    }
}

fn counts(labels: &[usize], vocab: &LabelVocab) -> Vec<u32> {
    let mut c = vec![0; vocab.len()];
    for &l in labels.iter().filter(|&&l| !vocab.is_ignored(l)) {
        c[l] += 1;
    }
    c
}

/// Fraction of scenes whose predicted per-class counts (ignored classes
/// excluded) all equal the gold counts. Zero for an empty set.
pub fn count_accuracy(pred: &[Vec<usize>], gold: &[Vec<usize>], vocab: &LabelVocab) -> Result<f64> {
    check(pred, gold)?;
    Ok(mean(
        pred.iter()
            .zip(gold)
            .map(|(p, g)| counts(p, vocab) == counts(g, vocab)),
    ))
}

/// Fraction of scenes whose predicted value sum equals the gold sum.
pub fn sum_accuracy(pred: &[Vec<usize>], gold: &[Vec<usize>], vocab: &LabelVocab) -> Result<f64> {
    check(pred, gold)?;
    let total = |ls: &[usize]| ls.iter().map(|&l| vocab.value(l) as u64).sum::<u64>();
    Ok(mean(
        pred.iter().zip(gold).map(|(p, g)| total(p) == total(g)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        let v = LabelVocab::numbered(10);
        let gold = vec![vec![1, 2], vec![3, 5], vec![0], vec![4, 4]];
        assert_eq!(count_accuracy(&gold, &gold, &v).unwrap(), 1.0);
        let mut pred = gold.clone();
        pred[2] = vec![1];
        assert_eq!(count_accuracy(&pred, &gold, &v).unwrap(), 0.75);
        let swapped = vec![vec![2, 1], vec![5, 3], vec![0], vec![4, 4]];
        assert_eq!(count_accuracy(&swapped, &gold, &v).unwrap(), 1.0);

        let pred = vec![vec![4, 4]];
        let gold = vec![vec![3, 5]];
        assert_eq!(sum_accuracy(&pred, &gold, &v).unwrap(), 1.0);
        assert_eq!(count_accuracy(&pred, &gold, &v).unwrap(), 0.0);
        assert_eq!(sum_accuracy(&[vec![]], &[vec![]], &v).unwrap(), 1.0);
        assert!(count_accuracy(&[], &[vec![1]], &v).is_err());
    }

    #[test]
    fn ignored_classes_do_not_count() {
        let v = LabelVocab::new(&["a", "b", "none"], &["none"], None).unwrap();
        let gold = vec![vec![0, 1]];
        let pred = vec![vec![0, 1, 2]];
        assert_eq!(count_accuracy(&pred, &gold, &v).unwrap(), 1.0);
    }
}
