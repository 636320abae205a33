//! Atomic predicates, the encoded explanation class `F(φ_F) ∧ G(φ_G)`,
//! canonicalization and quantitative (robustness) semantics.

mod canonical;
mod encoding;
mod parse;
mod predicate;
mod robustness;

pub use canonical::{enumerate_all, CanonicalExplanation, Connective, Literal, Part, DEFAULT_PREDICATE_CAP};
pub use encoding::{expansion, neighborhood, ExplanationEncoding, MAX_PREDICATES};
pub use parse::parse_explanation;
pub use predicate::{AtomicPredicate, PredicateSet};
pub use robustness::{robustness_trajectory, Formula, TemporalOp};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormulaError {
    #[error("invalid encoding: {0}")]
    InvalidEncoding(String),
    #[error("{n} predicates exceeds the enumeration cap of {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("robustness of an empty trajectory is undefined")]
    EmptyTrajectory,
    #[error("invalid predicate set: {0}")]
    InvalidPredicates(String),
    #[error("cannot parse explanation `{text}`: {reason}")]
    Parse { text: String, reason: String },
}
