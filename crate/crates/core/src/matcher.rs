//! Most-probable-world inference by optimal assignment, and pseudo-labels
//! for relabeling.
//!
//! When the query is an exact label multiset with one slot per object, the
//! most probable compatible world is a minimum-cost perfect matching between
//! objects and slots under cost `-log p`. The `1 - p` cost maximizes the sum
//! of slot probabilities instead of their product; it is kept for comparison
//! and is not guaranteed to find the most probable world.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::planner::Constraints;
use crate::query::Query;
use crate::scene::{Assignment, CategoricalBelief};
use crate::vocab::LabelVocab;

/// Cost standing in for `-log 0`.
pub const FORBIDDEN_COST: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostVariant {
    /// `-log p`: the most probable world.
    #[default]
    NegLog,
    /// `1 - p`.
    OneMinusP,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub assignment: Assignment,
    pub world_probability: f64,
    pub total_cost: f64,
    pub cost_variant: CostVariant,
}

/// Minimum-cost perfect matching on a square matrix. Returns the column
/// assigned to each row and the total cost. Among optimal assignments the
/// lexicographically smallest column sequence is returned.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<(Vec<usize>, f64)> {
    let n = cost.len();
    if cost.iter().any(|row| row.len() != n) {
        return Err(Error::NonSquare);
    }
    if cost.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let best = solve(cost).1;
    let tol = 1e-10 * best.abs().max(1.0);
    let mut rows_left: Vec<usize> = (0..n).collect();
    let mut cols_left: Vec<usize> = (0..n).collect();
    let mut perm = vec![0; n];
    let mut spent = 0.0;
    for row in 0..n {
        rows_left.retain(|&r| r != row);
        let mut chosen = None;
        for (ci, &col) in cols_left.iter().enumerate() {
            let rest: Vec<usize> = cols_left.iter().copied().filter(|&c| c != col).collect();
            let sub: Vec<Vec<f64>> = rows_left
                .iter()
                .map(|&r| rest.iter().map(|&c| cost[r][c]).collect())
                .collect();
            let total = spent + cost[row][col] + solve(&sub).1;
            if total <= best + tol {
                chosen = Some(ci);
                break;
            }
        }
        // the optimum itself always passes, so some column is chosen
        let ci = chosen.unwrap_or(0);
        let col = cols_left.remove(ci);
        perm[row] = col;
        spent += cost[row][col];
    }
    let total = perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    Ok((perm, total))
}

/// Shortest-augmenting-path assignment with row and column potentials.
fn solve(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based with a virtual column 0
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let cur = cost[r0 - 1][col - 1] - u[r0] - v[col];
                if cur < minv[col] {
                    minv[col] = cur;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            owner[col0] = owner[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for col in 1..=n {
        perm[owner[col] - 1] = col - 1;
    }
    let total = perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
    (perm, total)
}

/// Label slots of an exact-multiset query, in listed order, one per unit of
/// count.
fn multiset_slots(query: &Query, n: usize) -> Result<Vec<usize>> {
    let Query::Counts { constraints, .. } = query else {
        return Err(Error::QueryNotExactMultiset);
    };
    let mut slots = Vec::new();
    for cc in constraints {
        let c = cc
            .interval
            .exact_value()
            .ok_or(Error::QueryNotExactMultiset)?;
        slots.extend(core::iter::repeat_n(cc.class, c as usize));
    }
    if slots.len() != n {
        return Err(Error::SlotCountMismatch {
            slots: slots.len(),
            objects: n,
        });
    }
    Ok(slots)
}

fn slot_cost(p: f64, variant: CostVariant) -> f64 {
    match variant {
        CostVariant::NegLog if p <= 0.0 => FORBIDDEN_COST,
        CostVariant::NegLog => (-libm::log(p)).min(FORBIDDEN_COST),
        CostVariant::OneMinusP => 1.0 - p,
    }
}

/// The most probable world compatible with an exact label multiset.
pub fn most_probable_world<B: AsRef<[f64]>>(
    beliefs: &[B],
    query: &Query,
    variant: CostVariant,
) -> Result<MatchResult> {
    let slots = multiset_slots(query, beliefs.len())?;
    let cost: Vec<Vec<f64>> = beliefs
        .iter()
        .map(|b| {
            slots
                .iter()
                .map(|&c| slot_cost(b.as_ref()[c], variant))
                .collect()
        })
        .collect();
    let (perm, total_cost) = hungarian(&cost)?;
    let labels: Vec<usize> = perm.iter().map(|&slot| slots[slot]).collect();
    let world_probability = beliefs
        .iter()
        .zip(&labels)
        .map(|(b, &l)| b.as_ref()[l])
        .product();
    Ok(MatchResult {
        assignment: Assignment { labels },
        world_probability,
        total_cost,
        cost_variant: variant,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PseudoLabelStrategy {
    /// Per-object argmax, kept only when it satisfies the query.
    #[default]
    ArgmaxCompliance,
    /// The most probable compatible world; exact-multiset queries only.
    ForcedMatching,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PseudoLabels {
    Accept(Vec<usize>),
    Reject,
}

pub fn pseudo_labels(
    beliefs: &[CategoricalBelief],
    query: &Query,
    vocab: &LabelVocab,
    strategy: PseudoLabelStrategy,
) -> Result<PseudoLabels> {
    match strategy {
        PseudoLabelStrategy::ArgmaxCompliance => {
            let labels: Vec<usize> = beliefs.iter().map(CategoricalBelief::argmax).collect();
            let ok = Constraints::resolve(query, vocab).accepts(&labels, vocab.values());
            Ok(if ok {
                PseudoLabels::Accept(labels)
            } else {
                PseudoLabels::Reject
            })
        }
        PseudoLabelStrategy::ForcedMatching => {
            match most_probable_world(beliefs, query, CostVariant::NegLog) {
                Ok(m) => Ok(PseudoLabels::Accept(m.assignment.labels)),
                Err(Error::QueryNotExactMultiset) => Err(Error::StrategyUnsupportedForQuery),
                Err(e) => Err(e),
            }
        }
    }
}
