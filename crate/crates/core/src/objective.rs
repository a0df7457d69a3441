//! Per-scene loss evaluation. Every caller goes through here, so training
//! and the command line see identical numbers.

use alloc::vec::Vec;

use crate::engine::{self, GradientMatrix, GradientMethod};
use crate::error::{Error, Result};
use crate::planner::{self, PlanKind, PlanLimits};
use crate::query::Query;
use crate::scene::Scene;
use crate::vocab::LabelVocab;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveOptions {
    /// Confidence filter threshold; `None` disables filtering.
    pub delta: Option<f64>,
    pub limits: PlanLimits,
    pub method: GradientMethod,
}

impl Default for ObjectiveOptions {
    fn default() -> Self {
        Self {
            delta: None,
            limits: PlanLimits::default(),
            method: GradientMethod::Reverse,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObjective {
    pub probability: f64,
    pub nll: f64,
    pub plan_kind: PlanKind,
    pub state_count: u64,
    /// `(object, class)` facts clamped by the filter.
    pub clamped: Vec<(usize, usize)>,
    /// Filtering made the query unsatisfiable, so the unfiltered scene was
    /// evaluated instead.
    pub clamp_conflict: bool,
    pub zero_probability: bool,
    /// `d(-log P)/dp` over all objects of the scene; clamped rows are zero.
    pub gradient: Option<GradientMatrix>,
}

impl SceneObjective {
    pub fn filtered(&self) -> bool {
        !self.clamped.is_empty()
    }
}

pub fn evaluate_scene(
    scene: &Scene,
    query: &Query,
    vocab: &LabelVocab,
    opts: &ObjectiveOptions,
    with_gradient: bool,
) -> Result<SceneObjective> {
    let mut clamp_conflict = false;
    let filtered = match opts.delta {
        Some(delta) => match planner::filter_scene(scene, query, vocab, delta) {
            Ok(r) => Some(r),
            Err(Error::QueryUnsatisfiableAfterClamp) => {
                clamp_conflict = true;
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    let (beliefs, residual_query, kept, clamped) = match &filtered {
        Some(r) => (
            &r.residual_scene.beliefs[..],
            &r.residual_query,
            Some(&r.kept),
            r.clamped.clone(),
        ),
        None => (&scene.beliefs[..], query, None, Vec::new()),
    };
    let plan = planner::compile_with_limits(residual_query, vocab, beliefs.len(), opts.limits)?;
    let probability = engine::evaluate(&plan, beliefs)?.value;
    let zero_probability = probability == 0.0;
    let gradient = if with_gradient {
        let mut g = engine::gradient(&plan, beliefs, opts.method)?;
        g.scale(if zero_probability {
            0.0
        } else {
            -1.0 / probability.max(engine::LOG_FLOOR)
        });
        Some(match kept {
            None => g,
            Some(kept) => {
                let mut full = GradientMatrix::zeros(scene.len(), vocab.len());
                for (r, &i) in kept.iter().enumerate() {
                    for j in 0..vocab.len() {
                        full.set(i, j, g.get(r, j));
                    }
                }
                full
            }
        })
    } else {
        None
    };
    Ok(SceneObjective {
        probability,
        nll: engine::nll(probability),
        plan_kind: plan.kind,
        state_count: plan.state_count,
        clamped,
        clamp_conflict,
        zero_probability,
        gradient,
    })
}
