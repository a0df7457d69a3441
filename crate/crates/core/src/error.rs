use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),
    #[error("belief {object} sums to {sum}, more than 1e-6 away from 1")]
    BeliefNotNormalized { object: usize, sum: f64 },
    #[error("belief {object} has a negative or non-finite entry")]
    NegativeProbability { object: usize },
    #[error("length mismatch in {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("ignored class `{0}` cannot be constrained")]
    IgnoredClass(String),
    #[error("invalid indicator {indicator} for count {count}")]
    InvalidIndicator { count: i64, indicator: i64 },
    #[error("invalid interval [{lo}, {hi})")]
    InvalidInterval { lo: u32, hi: u32 },
    #[error("syntax error at byte {offset}: expected {expected}")]
    SyntaxError { offset: usize, expected: String },
    #[error("{classes} classes but {counts} counts")]
    ListLengthMismatch { classes: usize, counts: usize },
    #[error("class `{0}` listed twice in one constraint list")]
    DuplicateClass(String),
    #[error("empty conjunction")]
    EmptyConjunction,
    #[error("query too complex: {states} DP states and {worlds} worlds exceed the limits")]
    QueryTooComplex { states: u128, worlds: u128 },
    #[error("filter threshold {0} outside (0.5, 1]")]
    InvalidDelta(f64),
    #[error("clamping confident objects makes the query unsatisfiable")]
    QueryUnsatisfiableAfterClamp,
    #[error("plan compiled for {plan_n} objects and {plan_k} classes, scene has {scene_n} and {scene_k}")]
    PlanSceneMismatch {
        plan_n: usize,
        plan_k: usize,
        scene_n: usize,
        scene_k: usize,
    },
    #[error("cost matrix is not square")]
    NonSquare,
    #[error("cost matrix has a non-finite entry")]
    NonFinite,
    #[error("query is not an exact label multiset")]
    QueryNotExactMultiset,
    #[error("query has {slots} label slots for {objects} objects")]
    SlotCountMismatch { slots: usize, objects: usize },
    #[error("pseudo-labeling strategy does not support this query")]
    StrategyUnsupportedForQuery,
    #[error("{worlds} worlds exceed the enumeration limit {limit}")]
    TooManyWorlds { worlds: u128, limit: u64 },
    #[error("no world satisfies the query")]
    NoCompatibleWorld,
    #[error("finite-difference step {0} outside [1e-8, 1e-3]")]
    StepOutOfRange(f64),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("scene `{0}` has no gold labels")]
    MissingGoldLabels(String),
    #[error("scene `{0}` has no query")]
    MissingQueries(String),
    #[error("empty training pool")]
    EmptyTrainingPool,
}

impl Error {
    /// True for errors raised because a computation exceeded its size budget.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::QueryTooComplex { .. } | Error::TooManyWorlds { .. }
        )
    }

    /// True for errors in query text or its resolution against a vocabulary.
    pub fn is_parse(&self) -> bool {
        matches!(
            self,
            Error::SyntaxError { .. }
                | Error::UnknownClass(_)
                | Error::IgnoredClass(_)
                | Error::ListLengthMismatch { .. }
                | Error::DuplicateClass(_)
                | Error::InvalidIndicator { .. }
                | Error::InvalidInterval { .. }
                | Error::EmptyConjunction
        )
    }
}
