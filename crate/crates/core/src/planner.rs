//! Compiles queries into dynamic-programming plans and applies confidence
//! filtering.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::query::{CountConstraint, Interval, Mode, Query};
use crate::scene::Scene;
use crate::vocab::LabelVocab;

/// How a class moves the DP state when an object takes it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassRole {
    /// Increments the counter at this position of [`Constraints::counts`].
    Counted(usize),
    /// Leaves every counter unchanged.
    Free,
    /// No satisfying world contains an object of this class.
    Forbidden,
}

/// A query flattened to one interval per constrained class, an optional sum
/// target and a per-class role. Conjuncts that constrain the same class
/// intersect their intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraints {
    pub counts: Vec<CountConstraint>,
    pub roles: Vec<ClassRole>,
    pub sum: Option<u32>,
    pub closed: bool,
    pub satisfiable: bool,
}

impl Constraints {
    pub fn resolve(query: &Query, vocab: &LabelVocab) -> Self {
        let k = vocab.len();
        let mut intervals: Vec<Option<Interval>> = vec![None; k];
        let mut allowed: Option<Vec<bool>> = None;
        let mut sum = None;
        let mut satisfiable = true;
        let mut stack = vec![query];
        while let Some(q) = stack.pop() {
            match q {
                Query::Counts { constraints, mode } => {
                    for cc in constraints {
                        narrow(&mut intervals[cc.class], cc.interval, &mut satisfiable);
                    }
                    if *mode == Mode::Closed {
                        let mask = allowed.get_or_insert_with(|| vec![true; k]);
                        for (c, m) in mask.iter_mut().enumerate() {
                            *m &= constraints.iter().any(|cc| cc.class == c);
                        }
                    }
                }
                Query::Sum { target } => match sum {
                    Some(s) if s != *target => satisfiable = false,
                    _ => sum = Some(*target),
                },
                Query::Presence { classes } => {
                    for &c in classes {
                        narrow(&mut intervals[c], Interval::at_least(1), &mut satisfiable);
                    }
                }
                Query::And(parts) => stack.extend(parts.iter().rev()),
            }
        }
        let mut counts = Vec::new();
        let mut roles = vec![ClassRole::Free; k];
        for c in 0..k {
            if vocab.is_ignored(c) {
                continue;
            }
            let excluded = allowed.as_ref().is_some_and(|a| !a[c]);
            roles[c] = match intervals[c] {
                Some(iv) if excluded => {
                    if !iv.contains(0) {
                        satisfiable = false;
                    }
                    ClassRole::Forbidden
                }
                Some(interval) => {
                    counts.push(CountConstraint { class: c, interval });
                    ClassRole::Counted(counts.len() - 1)
                }
                None if excluded => ClassRole::Forbidden,
                None => ClassRole::Free,
            };
        }
        Self {
            counts,
            roles,
            sum,
            closed: allowed.is_some(),
            satisfiable,
        }
    }

    /// Whether a full labeling satisfies the constraints.
    pub fn accepts(&self, labels: &[usize], values: &[u32]) -> bool {
        if !self.satisfiable {
            return false;
        }
        let mut tallies = vec![0u32; self.counts.len()];
        let mut total: u64 = 0;
        for &l in labels {
            match self.roles[l] {
                ClassRole::Forbidden => return false,
                ClassRole::Counted(t) => tallies[t] += 1,
                ClassRole::Free => {}
            }
            total += values[l] as u64;
        }
        self.counts
            .iter()
            .zip(&tallies)
            .all(|(cc, &t)| cc.interval.contains(t))
            && self.sum.is_none_or(|s| total == s as u64)
    }

    /// Cheap necessary condition for `n` objects to satisfy the constraints.
    pub fn feasible_for(&self, n: usize, vocab: &LabelVocab) -> bool {
        if !self.satisfiable {
            return false;
        }
        let needed: u64 = self.counts.iter().map(|c| c.interval.lo as u64).sum();
        if needed > n as u64 {
            return false;
        }
        if let Some(s) = self.sum {
            let top = (0..vocab.len())
                .filter(|&c| self.roles[c] != ClassRole::Forbidden)
                .map(|c| vocab.value(c) as u64)
                .max()
                .unwrap_or(0);
            if s as u64 > top * n as u64 {
                return false;
            }
        }
        true
    }
}

fn narrow(slot: &mut Option<Interval>, iv: Interval, satisfiable: &mut bool) {
    *slot = match slot {
        None => Some(iv),
        Some(prev) => match prev.intersect(&iv) {
            Some(i) => Some(i),
            None => {
                *satisfiable = false;
                Some(*prev)
            }
        },
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanKind {
    CountDp,
    SumDp,
    ProductDp,
    Enumeration,
}

impl PlanKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlanKind::CountDp => "count_dp",
            PlanKind::SumDp => "sum_dp",
            PlanKind::ProductDp => "product_dp",
            PlanKind::Enumeration => "enumeration",
        }
    }
}

/// A tracked class counter. Values run over `0..=cap`. An unbounded interval
/// saturates at `cap = lo`; a bounded one drops mass that would exceed
/// `cap = hi - 1`, since such worlds can never satisfy it again.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counter {
    pub class: usize,
    pub interval: Interval,
    pub cap: u32,
}

impl Counter {
    fn new(cc: &CountConstraint) -> Self {
        let cap = match cc.interval.hi {
            None => cc.interval.lo,
            Some(h) => h - 1,
        };
        Self {
            class: cc.class,
            interval: cc.interval,
            cap,
        }
    }

    pub fn saturates(&self) -> bool {
        self.interval.hi.is_none()
    }

    /// Acceptance of a final counter value.
    pub fn accepts(&self, value: u32) -> bool {
        if self.saturates() {
            value == self.cap
        } else {
            value >= self.interval.lo
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanLimits {
    pub max_states: u64,
    pub max_worlds: u64,
}

impl Default for PlanLimits {
    fn default() -> Self {
        Self {
            max_states: 10_000_000,
            max_worlds: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferencePlan {
    pub kind: PlanKind,
    pub counters: Vec<Counter>,
    pub sum_cap: Option<u32>,
    pub mode: Mode,
    pub constraints: Constraints,
    /// Class values, used by sum tracking.
    pub values: Vec<u32>,
    pub n: usize,
    pub k: usize,
    pub state_count: u64,
}

fn pow_saturating(base: u128, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
    }
    acc
}

pub fn compile(query: &Query, vocab: &LabelVocab, n: usize) -> Result<InferencePlan> {
    compile_with_limits(query, vocab, n, PlanLimits::default())
}

pub fn compile_with_limits(
    query: &Query,
    vocab: &LabelVocab,
    n: usize,
    limits: PlanLimits,
) -> Result<InferencePlan> {
    let constraints = Constraints::resolve(query, vocab);
    let counters: Vec<Counter> = constraints.counts.iter().map(Counter::new).collect();
    let sum_cap = constraints.sum;
    let dp_states = counters
        .iter()
        .fold(1u128, |acc, c| acc.saturating_mul(c.cap as u128 + 1))
        .saturating_mul(sum_cap.map_or(1, |s| s as u128 + 1));
    let kind = match (counters.is_empty(), sum_cap.is_some()) {
        (_, false) => PlanKind::CountDp,
        (true, true) => PlanKind::SumDp,
        (false, true) => PlanKind::ProductDp,
    };
    let (kind, state_count) = if dp_states <= limits.max_states as u128 {
        (kind, dp_states as u64)
    } else {
        let worlds = pow_saturating(vocab.len() as u128, n);
        if worlds > limits.max_worlds as u128 {
            return Err(Error::QueryTooComplex {
                states: dp_states,
                worlds,
            });
        }
        (PlanKind::Enumeration, worlds as u64)
    };
    Ok(InferencePlan {
        kind,
        counters,
        sum_cap,
        mode: if constraints.closed {
            Mode::Closed
        } else {
            Mode::Open
        },
        constraints,
        values: vocab.values().to_vec(),
        n,
        k: vocab.len(),
        state_count,
    })
}

pub fn plan_cost(plan: &InferencePlan) -> u64 {
    plan.state_count
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// `(object, class)` facts treated as certain.
    pub clamped: Vec<(usize, usize)>,
    /// Original indices of the objects left in the residual scene.
    pub kept: Vec<usize>,
    /// Confident objects whose class was inconsistent with the query and
    /// were therefore kept.
    pub skipped: Vec<usize>,
    pub residual_scene: Scene,
    pub residual_query: Query,
}

/// Removes objects whose top class reaches `delta` and decrements the query
/// budget accordingly. An object is only removed when its class is still
/// consistent with the remaining budget.
pub fn filter_scene(
    scene: &Scene,
    query: &Query,
    vocab: &LabelVocab,
    delta: f64,
) -> Result<FilterResult> {
    if !(delta > 0.5 && delta <= 1.0) {
        return Err(Error::InvalidDelta(delta));
    }
    let mut residual_query = query.clone();
    let mut clamped = Vec::new();
    let mut kept = Vec::new();
    let mut skipped = Vec::new();
    for (i, belief) in scene.beliefs.iter().enumerate() {
        let top = belief.argmax();
        if belief.probs()[top] < delta {
            kept.push(i);
            continue;
        }
        match clamp_query(&residual_query, top, vocab) {
            Some(q) => {
                residual_query = q;
                clamped.push((i, top));
            }
            None => {
                skipped.push(i);
                kept.push(i);
            }
        }
    }
    if !clamped.is_empty()
        && Constraints::resolve(query, vocab).feasible_for(scene.len(), vocab)
        && !Constraints::resolve(&residual_query, vocab).feasible_for(kept.len(), vocab)
    {
        return Err(Error::QueryUnsatisfiableAfterClamp);
    }
    let pick = |i: &usize| *i;
    let residual_scene = Scene {
        id: scene.id.clone(),
        beliefs: kept.iter().map(|&i| scene.beliefs[i].clone()).collect(),
        features: scene
            .features
            .as_ref()
            .map(|f| kept.iter().map(pick).map(|i| f[i].clone()).collect()),
        gold: scene
            .gold
            .as_ref()
            .map(|g| kept.iter().map(pick).map(|i| g[i]).collect()),
        // carries a query only when the input scene did
        query: scene.query.as_ref().map(|_| residual_query.clone()),
    };
    Ok(FilterResult {
        clamped,
        kept,
        skipped,
        residual_scene,
        residual_query,
    })
}

/// The query left over once one object is known to have `class`, or `None`
/// if that class would break the query.
fn clamp_query(query: &Query, class: usize, vocab: &LabelVocab) -> Option<Query> {
    match query {
        Query::Counts { constraints, mode } => {
            let mut constraints = constraints.clone();
            match constraints.iter_mut().find(|cc| cc.class == class) {
                Some(cc) => {
                    let hi = match cc.interval.hi {
                        Some(h) if h < 2 => return None,
                        h => h.map(|h| h - 1),
                    };
                    cc.interval = Interval {
                        lo: cc.interval.lo.saturating_sub(1),
                        hi,
                    };
                }
                None if *mode == Mode::Closed && !vocab.is_ignored(class) => return None,
                None => {}
            }
            Some(Query::Counts {
                constraints,
                mode: *mode,
            })
        }
        Query::Sum { target } => target
            .checked_sub(vocab.value(class))
            .map(|target| Query::Sum { target }),
        Query::Presence { classes } => Some(Query::Presence {
            classes: classes.iter().copied().filter(|&c| c != class).collect(),
        }),
        Query::And(parts) => parts
            .iter()
            .map(|q| clamp_query(q, class, vocab))
            .collect::<Option<Vec<_>>>()
            .map(Query::And),
    }
}
