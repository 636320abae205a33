//! Temporal-logic explanations for tabular reinforcement-learning policies.
//!
//! Candidate explanations have the form `F(φ_F) ∧ G(φ_G)` over a set of
//! threshold predicates. Each candidate is compiled into a three-state
//! predicate automaton, composed with the environment into a product MDP,
//! optimized with a tabular trainer, and scored by the entropy-weighted KL
//! divergence between its policy and the target policy. A greedy local
//! search over single-bit flips of the explanation encoding finds the best
//! match.

pub mod envs;
pub mod formula;
pub mod fspa;
pub mod metrics;
pub mod product;
pub mod rl;
pub mod scalar;
pub mod search;
pub mod seed;

pub use scalar::Scalar;

pub use formula::{CanonicalExplanation, ExplanationEncoding};

pub type PredicateSet = formula::PredicateSet<f64>;
pub type Fspa = fspa::Fspa<f64>;
pub type ProductMdp<'a> = product::ProductMdp<'a, f64>;
pub type TransitionTable = product::TransitionTable<f64>;
pub type TabularPolicy = rl::TabularPolicy<f64>;
pub type TrainerConfig = rl::TrainerConfig<f64>;
pub type StateSample = metrics::StateSample<f64>;
pub type UtilityRecord = metrics::UtilityRecord<f64>;
pub type Evaluator<'a> = search::Evaluator<'a, f64>;
pub type Setup<'a> = search::Setup<'a, f64>;
pub type ProductConfig = product::ProductConfig<f64>;
pub type MetricConfig = metrics::MetricConfig<f64>;
pub type SearchParams = search::SearchParams<f64>;
