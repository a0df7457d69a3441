//! Exact probabilities and gradients of weak-supervision queries over
//! per-object class beliefs.
//!
//! A scene is a list of objects, each carrying a categorical belief over a
//! label vocabulary. A [`Query`] constrains the labels of the scene as a
//! whole, through class counts or value sums, possibly conjoined. The probability of a query is the total
//! probability of the possible worlds (joint label assignments) that satisfy
//! it. [`engine`] computes that probability and its gradient with respect to
//! every belief entry by dynamic programming over compact counter states;
//! [`oracle`] computes the same quantities by brute-force enumeration.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the
//! command-line front end live in the `probkt` crate.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod engine;
pub mod error;
pub mod flat;
pub mod matcher;
pub mod objective;
pub mod oracle;
pub mod pipeline;
pub mod planner;
pub mod qlang;
pub mod query;
pub mod scene;
pub mod vocab;

pub use engine::{GradientMatrix, GradientMethod, QueryProbability};
pub use error::{Error, Result};
pub use planner::{FilterResult, InferencePlan, PlanKind, PlanLimits};
pub use query::{CountConstraint, Interval, Mode, Query};
pub use scene::{Assignment, CategoricalBelief, Scene, SceneRecord};
pub use vocab::LabelVocab;
