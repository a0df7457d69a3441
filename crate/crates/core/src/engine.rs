//! Exact query probabilities and their gradients.
//!
//! The DP state is a mixed-radix index over the tracked counters followed by
//! the running sum. Objects are folded in index order and states in index
//! order, so results are bit-reproducible.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::planner::{ClassRole, InferencePlan, PlanKind};
use crate::vocab::LabelVocab;

/// Floor applied to probabilities before taking logs.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryProbability {
    pub value: f64,
    pub kind: PlanKind,
    pub filtered: bool,
}

/// `n x K` matrix of partial derivatives `dP/dp[i][j]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix {
    n: usize,
    k: usize,
    entries: Vec<f64>,
}

impl GradientMatrix {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            n,
            k,
            entries: vec![0.0; n * k],
        }
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.k
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.k + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn scale(&mut self, by: f64) {
        self.entries.iter_mut().for_each(|e| *e *= by);
    }

    pub fn max_abs_diff(&self, other: &GradientMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMethod {
    /// Re-evaluate with each object clamped to each class.
    Clamp,
    /// One forward and one backward sweep.
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Move {
    counter: Option<usize>,
    add: u32,
}

struct Lattice<'a> {
    plan: &'a InferencePlan,
    radix: Vec<usize>,
    strides: Vec<usize>,
    sum_stride: usize,
    size: usize,
    /// Per class, its move; `None` for forbidden classes.
    class_moves: Vec<Option<Move>>,
}

impl<'a> Lattice<'a> {
    fn new(plan: &'a InferencePlan) -> Self {
        let mut strides = Vec::with_capacity(plan.counters.len());
        let mut radix = Vec::with_capacity(plan.counters.len());
        let mut size = 1usize;
        for c in &plan.counters {
            strides.push(size);
            radix.push(c.cap as usize + 1);
            size *= c.cap as usize + 1;
        }
        let sum_stride = size;
        if let Some(s) = plan.sum_cap {
            size *= s as usize + 1;
        }
        let class_moves = plan
            .constraints
            .roles
            .iter()
            .enumerate()
            .map(|(j, role)| {
                let add = if plan.sum_cap.is_some() {
                    plan.values[j]
                } else {
                    0
                };
                match role {
                    ClassRole::Forbidden => None,
                    ClassRole::Counted(t) => Some(Move {
                        counter: Some(*t),
                        add,
                    }),
                    ClassRole::Free => Some(Move { counter: None, add }),
                }
            })
            .collect();
        Self {
            plan,
            radix,
            strides,
            sum_stride,
            size,
            class_moves,
        }
    }

    fn step(&self, state: usize, mv: Move) -> Option<usize> {
        let mut next = state;
        if let Some(t) = mv.counter {
            let value = (state / self.strides[t]) % self.radix[t];
            if value + 1 < self.radix[t] {
                next += self.strides[t];
            } else if !self.plan.counters[t].saturates() {
                return None;
            }
        }
        if let Some(cap) = self.plan.sum_cap {
            let s = state / self.sum_stride;
            let total = s + mv.add as usize;
            if total > cap as usize {
                return None;
            }
            next += mv.add as usize * self.sum_stride;
        }
        Some(next)
    }

    fn accepts(&self, state: usize) -> bool {
        let counters_ok = self.plan.counters.iter().enumerate().all(|(t, c)| {
            let value = (state / self.strides[t]) % self.radix[t];
            c.accepts(value as u32)
        });
        counters_ok
            && self
                .plan
                .sum_cap
                .is_none_or(|cap| state / self.sum_stride == cap as usize)
    }

    /// Aggregated moves of one object: classes sharing a move share an entry.
    fn moves(&self, probs: &[f64]) -> Vec<(Move, f64)> {
        let mut out: Vec<(Move, f64)> = Vec::new();
        for (j, mv) in self.class_moves.iter().enumerate() {
            let Some(mv) = mv else { continue };
            match out.iter_mut().find(|(m, _)| m == mv) {
                Some((_, p)) => *p += probs[j],
                None => out.push((*mv, probs[j])),
            }
        }
        out
    }

    fn forward(&self, f: &[f64], moves: &[(Move, f64)]) -> Vec<f64> {
        let mut g = vec![0.0; self.size];
        for (s, &mass) in f.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for &(mv, p) in moves {
                if let Some(t) = self.step(s, mv) {
                    g[t] += mass * p;
                }
            }
        }
        g
    }

    fn backward(&self, beta: &[f64], moves: &[(Move, f64)]) -> Vec<f64> {
        (0..self.size)
            .map(|s| {
                moves
                    .iter()
                    .filter_map(|&(mv, p)| self.step(s, mv).map(|t| p * beta[t]))
                    .sum()
            })
            .collect()
    }

    fn initial(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.size];
        f[0] = 1.0;
        f
    }

    fn accepted_mass(&self, f: &[f64]) -> f64 {
        f.iter()
            .enumerate()
            .filter(|(s, _)| self.accepts(*s))
            .map(|(_, m)| m)
            .sum()
    }
}

fn check_shape<B: AsRef<[f64]>>(plan: &InferencePlan, beliefs: &[B]) -> Result<()> {
    let width_ok = beliefs.iter().all(|b| b.as_ref().len() == plan.k);
    if beliefs.len() != plan.n || !width_ok {
        let scene_k = beliefs
            .iter()
            .map(|b| b.as_ref().len())
            .find(|&w| w != plan.k)
            .unwrap_or(plan.k);
        return Err(Error::PlanSceneMismatch {
            plan_n: plan.n,
            plan_k: plan.k,
            scene_n: beliefs.len(),
            scene_k,
        });
    }
    Ok(())
}

/// Exact probability that the beliefs satisfy the planned query.
pub fn evaluate<B: AsRef<[f64]>>(plan: &InferencePlan, beliefs: &[B]) -> Result<QueryProbability> {
    check_shape(plan, beliefs)?;
    Ok(QueryProbability {
        value: probability(plan, beliefs),
        kind: plan.kind,
        filtered: false,
    })
}

fn probability<B: AsRef<[f64]>>(plan: &InferencePlan, beliefs: &[B]) -> f64 {
    if !plan.constraints.satisfiable {
        return 0.0;
    }
    if plan.kind == PlanKind::Enumeration {
        return enumerate(plan, beliefs, None);
    }
    let lattice = Lattice::new(plan);
    let mut f = lattice.initial();
    for b in beliefs {
        f = lattice.forward(&f, &lattice.moves(b.as_ref()));
    }
    lattice.accepted_mass(&f)
}

/// Sums accepted world weights; with `grad`, also accumulates each world's
/// leave-one-out products into the gradient.
fn enumerate<B: AsRef<[f64]>>(
    plan: &InferencePlan,
    beliefs: &[B],
    mut grad: Option<&mut GradientMatrix>,
) -> f64 {
    let n = beliefs.len();
    let k = plan.k;
    let mut labels = vec![0usize; n];
    let mut prefix = vec![1.0; n + 1];
    let mut suffix = vec![1.0; n + 1];
    let mut total = 0.0;
    loop {
        if plan.constraints.accepts(&labels, &plan.values) {
            for i in 0..n {
                prefix[i + 1] = prefix[i] * beliefs[i].as_ref()[labels[i]];
            }
            total += prefix[n];
            if let Some(g) = grad.as_deref_mut() {
                for i in (0..n).rev() {
                    suffix[i] = suffix[i + 1] * beliefs[i].as_ref()[labels[i]];
                }
                for i in 0..n {
                    let e = g.get(i, labels[i]) + prefix[i] * suffix[i + 1];
                    g.set(i, labels[i], e);
                }
            }
        }
        // odometer with the last object fastest
        let mut pos = n;
        loop {
            if pos == 0 {
                return total;
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

pub fn gradient<B: AsRef<[f64]>>(
    plan: &InferencePlan,
    beliefs: &[B],
    method: GradientMethod,
) -> Result<GradientMatrix> {
    check_shape(plan, beliefs)?;
    let n = beliefs.len();
    let k = plan.k;
    let mut grad = GradientMatrix::zeros(n, k);
    if !plan.constraints.satisfiable {
        return Ok(grad);
    }
    match method {
        GradientMethod::Clamp => {
            let mut work: Vec<Vec<f64>> = beliefs.iter().map(|b| b.as_ref().to_vec()).collect();
            for i in 0..n {
                for j in 0..k {
                    work[i].iter_mut().for_each(|p| *p = 0.0);
                    work[i][j] = 1.0;
                    grad.set(i, j, probability(plan, &work));
                }
                work[i].copy_from_slice(beliefs[i].as_ref());
            }
        }
        GradientMethod::Reverse if plan.kind == PlanKind::Enumeration => {
            enumerate(plan, beliefs, Some(&mut grad));
        }
        GradientMethod::Reverse => {
            let lattice = Lattice::new(plan);
            let moves: Vec<_> = beliefs.iter().map(|b| lattice.moves(b.as_ref())).collect();
            let mut betas = vec![Vec::new(); n + 1];
            betas[n] = (0..lattice.size)
                .map(|s| if lattice.accepts(s) { 1.0 } else { 0.0 })
                .collect();
            for i in (0..n).rev() {
                betas[i] = lattice.backward(&betas[i + 1], &moves[i]);
            }
            let mut f = lattice.initial();
            for i in 0..n {
                let beta = &betas[i + 1];
                for j in 0..k {
                    let Some(mv) = lattice.class_moves[j] else {
                        continue;
                    };
                    let v: f64 = f
                        .iter()
                        .enumerate()
                        .filter(|(_, &m)| m != 0.0)
                        .filter_map(|(s, &m)| lattice.step(s, mv).map(|t| m * beta[t]))
                        .sum();
                    grad.set(i, j, v);
                }
                f = lattice.forward(&f, &moves[i]);
            }
        }
    }
    Ok(grad)
}

/// Distribution of the sum of class values over all objects, by sequential
/// convolution. Index `s` holds `P(sum = s)`.
pub fn sum_distribution<B: AsRef<[f64]>>(beliefs: &[B], vocab: &LabelVocab) -> Vec<f64> {
    let top = vocab.max_value() as usize;
    let mut dist = vec![1.0];
    for b in beliefs {
        let mut next = vec![0.0; dist.len() + top];
        for (s, &mass) in dist.iter().enumerate() {
            for (j, &p) in b.as_ref().iter().enumerate() {
                next[s + vocab.value(j) as usize] += mass * p;
            }
        }
        dist = next;
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct NllOutput {
    pub loss: f64,
    pub probabilities: Vec<f64>,
    /// Per scene, `d(-log P)/dp`.
    pub gradients: Vec<GradientMatrix>,
    /// Scenes whose probability was exactly zero; their gradient is zeroed.
    pub zero_probability: Vec<bool>,
}

/// `-log max(P, LOG_FLOOR)` for one probability.
pub fn nll(p: f64) -> f64 {
    -libm::log(p.max(LOG_FLOOR))
}

/// Summed negative log-likelihood of a batch and the per-scene gradients
/// with respect to the beliefs.
pub fn nll_loss<B: AsRef<[f64]>>(batch: &[(&InferencePlan, &[B])]) -> Result<NllOutput> {
    let mut out = NllOutput {
        loss: 0.0,
        probabilities: Vec::with_capacity(batch.len()),
        gradients: Vec::with_capacity(batch.len()),
        zero_probability: Vec::with_capacity(batch.len()),
    };
    for (plan, beliefs) in batch {
        let p = evaluate(plan, beliefs)?.value;
        let mut g = gradient(plan, beliefs, GradientMethod::Reverse)?;
        let zero = p == 0.0;
        if zero {
            g.scale(0.0);
        } else {
            g.scale(-1.0 / p.max(LOG_FLOOR));
        }
        out.loss += nll(p);
        out.probabilities.push(p);
        out.gradients.push(g);
        out.zero_probability.push(zero);
    }
    Ok(out)
}
