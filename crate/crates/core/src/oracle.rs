//! Brute-force references. Probabilities come from world enumeration straight
//! from the query syntax, gradients from central finite
//! differences. Sums also have a direct convolution.
//!
//! Nothing here goes through the planner or the DP lattice.

use alloc::vec;
use alloc::vec::Vec;

use crate::engine::GradientMatrix;
use crate::error::{Error, Result};
use crate::query::{Mode, Query};
use crate::scene::Assignment;
use crate::vocab::LabelVocab;

/// Whether a labeling satisfies a query, evaluated on the syntax tree.
pub fn satisfies(query: &Query, labels: &[usize], vocab: &LabelVocab) -> bool {
    let count = |c: usize| labels.iter().filter(|&&l| l == c).count() as u32;
    match query {
        Query::Counts { constraints, mode } => {
            constraints
                .iter()
                .all(|cc| cc.interval.contains(count(cc.class)))
                && (*mode == Mode::Open
                    || labels.iter().all(|&l| {
                        vocab.is_ignored(l) || constraints.iter().any(|cc| cc.class == l)
                    }))
        }
        Query::Sum { target } => {
            labels.iter().map(|&l| vocab.value(l) as u64).sum::<u64>() == *target as u64
        }
        Query::Presence { classes } => classes.iter().all(|&c| count(c) > 0),
        Query::And(parts) => parts.iter().all(|q| satisfies(q, labels, vocab)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorldEnumeration {
    pub limit: u64,
}

impl Default for WorldEnumeration {
    fn default() -> Self {
        Self { limit: 2_000_000 }
    }
}

impl WorldEnumeration {
    pub fn new(limit: u64) -> Self {
        Self {
            limit: limit.max(1),
        }
    }

    fn check(&self, n: usize, k: usize) -> Result<()> {
        let mut worlds: u128 = 1;
        for _ in 0..n {
            worlds = worlds.saturating_mul(k as u128);
        }
        if worlds > self.limit as u128 {
            return Err(Error::TooManyWorlds {
                worlds,
                limit: self.limit,
            });
        }
        Ok(())
    }

    /// Calls `visit` on every labeling in lexicographic order.
    fn for_each_world(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
        let mut labels = vec![0usize; n];
        loop {
            visit(&labels);
            let mut pos = n;
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                labels[pos] += 1;
                if labels[pos] < k {
                    break;
                }
                labels[pos] = 0;
            }
        }
    }

    pub fn enumerate_probability<B: AsRef<[f64]>>(
        &self,
        beliefs: &[B],
        query: &Query,
        vocab: &LabelVocab,
    ) -> Result<f64> {
        self.check(beliefs.len(), vocab.len())?;
        let mut total = 0.0;
        Self::for_each_world(beliefs.len(), vocab.len(), |w| {
            if satisfies(query, w, vocab) {
                total += world_weight(beliefs, w);
            }
        });
        Ok(total)
    }

    /// The most probable satisfying world; ties go to the lexicographically
    /// smallest labeling.
    pub fn enumerate_best_world<B: AsRef<[f64]>>(
        &self,
        beliefs: &[B],
        query: &Query,
        vocab: &LabelVocab,
    ) -> Result<(Assignment, f64)> {
        self.check(beliefs.len(), vocab.len())?;
        let mut best: Option<(Vec<usize>, f64)> = None;
        Self::for_each_world(beliefs.len(), vocab.len(), |w| {
            if !satisfies(query, w, vocab) {
                return;
            }
            let p = world_weight(beliefs, w);
            if best.as_ref().is_none_or(|(_, bp)| p > *bp) {
                best = Some((w.to_vec(), p));
            }
        });
        best.map(|(labels, p)| (Assignment { labels }, p))
            .ok_or(Error::NoCompatibleWorld)
    }

    /// Central differences on each raw belief coordinate. The probability is
    /// multilinear in each object's vector, so no renormalization is applied.
    pub fn finite_diff_gradient<B: AsRef<[f64]>>(
        &self,
        beliefs: &[B],
        query: &Query,
        vocab: &LabelVocab,
        h: f64,
    ) -> Result<GradientMatrix> {
        if !(1e-8..=1e-3).contains(&h) {
            return Err(Error::StepOutOfRange(h));
        }
        let n = beliefs.len();
        let k = vocab.len();
        let mut work: Vec<Vec<f64>> = beliefs.iter().map(|b| b.as_ref().to_vec()).collect();
        let mut grad = GradientMatrix::zeros(n, k);
        for i in 0..n {
            for j in 0..k {
                let orig = work[i][j];
                work[i][j] = orig + h;
                let up = self.enumerate_probability(&work, query, vocab)?;
                work[i][j] = orig - h;
                let down = self.enumerate_probability(&work, query, vocab)?;
                work[i][j] = orig;
                grad.set(i, j, (up - down) / (2.0 * h));
            }
        }
        Ok(grad)
    }

    /// Sum distribution by enumerating every world.
    pub fn enumerate_sum_distribution<B: AsRef<[f64]>>(
        &self,
        beliefs: &[B],
        vocab: &LabelVocab,
    ) -> Result<Vec<f64>> {
        self.check(beliefs.len(), vocab.len())?;
        let mut dist = vec![0.0; beliefs.len() * vocab.max_value() as usize + 1];
        Self::for_each_world(beliefs.len(), vocab.len(), |w| {
            let s: usize = w.iter().map(|&l| vocab.value(l) as usize).sum();
            dist[s] += world_weight(beliefs, w);
        });
        Ok(dist)
    }
}

fn world_weight<B: AsRef<[f64]>>(beliefs: &[B], labels: &[usize]) -> f64 {
    beliefs
        .iter()
        .zip(labels)
        .map(|(b, &l)| b.as_ref()[l])
        .product()
}

/// `(a * b)[s] = sum_x a[x] b[s - x]`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    (0..a.len() + b.len() - 1)
        .map(|s| {
            let lo = s.saturating_sub(b.len() - 1);
            let hi = s.min(a.len() - 1);
            (lo..=hi).map(|x| a[x] * b[s - x]).sum()
        })
        .collect()
}

/// Per-object value distributions folded together with [`convolve`].
pub fn pairwise_sum_distribution<B: AsRef<[f64]>>(beliefs: &[B], vocab: &LabelVocab) -> Vec<f64> {
    let width = vocab.max_value() as usize + 1;
    beliefs.iter().fold(vec![1.0], |acc, b| {
        let mut by_value = vec![0.0; width];
        for (j, &p) in b.as_ref().iter().enumerate() {
            by_value[vocab.value(j) as usize] += p;
        }
        convolve(&acc, &by_value)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> LabelVocab {
        LabelVocab::new(&["A", "B"], &[], None).unwrap()
    }

    const SCENE: [[f64; 2]; 2] = [[0.6, 0.4], [0.3, 0.7]];

    #[test]
    fn enumeration_examples() {
        let q = Query::exact_counts(&[(0, 1), (1, 1)], Mode::Closed);
        let o = WorldEnumeration::default();
        let p = o.enumerate_probability(&SCENE, &q, &ab()).unwrap();
        assert!((p - 0.54).abs() < 1e-15);
        let (w, p) = o.enumerate_best_world(&SCENE, &q, &ab()).unwrap();
        assert_eq!(w.labels, [0, 1]);
        assert!((p - 0.42).abs() < 1e-15);

        let taut = Query::exact_counts(&[], Mode::Open);
        let p = o.enumerate_probability(&SCENE, &taut, &ab()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);

        let digits = LabelVocab::numbered(10);
        let beliefs = [[0.1; 10]; 10];
        assert!(matches!(
            o.enumerate_probability(&beliefs, &Query::Sum { target: 3 }, &digits),
            Err(Error::TooManyWorlds { .. })
        ));

        let impossible = Query::exact_counts(&[(0, 3)], Mode::Open);
        assert_eq!(
            o.enumerate_best_world(&SCENE, &impossible, &ab()),
            Err(Error::NoCompatibleWorld)
        );
        let hot = [[0.0, 1.0], [1.0, 0.0]];
        let (w, p) = o.enumerate_best_world(&hot, &q, &ab()).unwrap();
        assert_eq!((w.labels.as_slice(), p), (&[1, 0][..], 1.0));
    }

    #[test]
    fn finite_differences() {
        let q = Query::exact_counts(&[(0, 1), (1, 1)], Mode::Closed);
        let o = WorldEnumeration::default();
        let g = o.finite_diff_gradient(&SCENE, &q, &ab(), 1e-6).unwrap();
        assert!((g.get(0, 0) - 0.7).abs() < 1e-6);
        let impossible = Query::exact_counts(&[(0, 3)], Mode::Open);
        let g = o
            .finite_diff_gradient(&SCENE, &impossible, &ab(), 1e-6)
            .unwrap();
        assert!(g.as_slice().iter().all(|&x| x == 0.0));
        assert_eq!(
            o.finite_diff_gradient(&SCENE, &q, &ab(), 1e-2),
            Err(Error::StepOutOfRange(1e-2))
        );
    }

    #[test]
    fn uniform_digit_pair_sums() {
        let digits = LabelVocab::numbered(10);
        let d = pairwise_sum_distribution(&[[0.1; 10]; 2], &digits);
        assert_eq!(d.len(), 19);
        // 9 of the 100 equally likely pairs add to 8
        assert!((d[8] - 0.09).abs() < 1e-15);
        assert_eq!(convolve(&[1.0], &[0.25, 0.75]), [0.25, 0.75]);
    }
}
