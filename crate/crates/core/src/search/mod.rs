//! Local search over the explanation class: neighbour evaluation, greedy
//! search with expansion and extension, multi-start and the exhaustive oracle.

mod evaluator;
mod greedy;
mod setup;

pub use evaluator::Evaluator;
pub use greedy::{random_encoding, OracleResult, RestartResult, SearchOutcome, ORACLE_LIMIT};
pub use setup::Setup;

use serde::{Deserialize, Serialize};

use crate::formula::{ExplanationEncoding, FormulaError};
use crate::metrics::{MetricsError, UtilityRecord};
use crate::product::ProductError;
use crate::rl::{RlError, Selection};
use crate::Scalar;

pub const TRACE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Product(#[from] ProductError),
    #[error(transparent)]
    Rl(#[from] RlError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("every candidate around {0} failed the return filter")]
    EmptyBuffer(String),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
    #[error("oracle over {n} predicates refused (limit {limit})")]
    OracleTooLarge { n: usize, limit: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchParams<T> {
    /// Number of random restarts.
    pub restarts: usize,
    /// Greedy steps per restart.
    pub max_steps: usize,
    pub replicates: usize,
    /// Episodes averaged by the return filter.
    pub episodes: usize,
    pub return_threshold: T,
    pub extension_steps: usize,
    pub extension: bool,
    pub expansion: bool,
    pub selection: Selection,
    pub top_k: usize,
    /// Largest predicate count accepted by `enumerate_all`.
    pub predicate_cap: usize,
}

impl<T: Scalar> Default for SearchParams<T> {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_steps: 10,
            replicates: 1,
            episodes: 200,
            return_threshold: T::of(0.05),
            extension_steps: 3,
            extension: true,
            expansion: true,
            selection: Selection::ByEntropy,
            top_k: 10,
            predicate_cap: crate::formula::DEFAULT_PREDICATE_CAP,
        }
    }
}

impl<T: Scalar> SearchParams<T> {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.restarts == 0 || self.max_steps == 0 || self.replicates == 0 || self.episodes == 0 || self.top_k == 0 {
            return Err(SearchError::InvalidParams(
                "restarts, max_steps, replicates, episodes and top_k must be at least 1".into(),
            ));
        }
        if !self.return_threshold.is_finite() {
            return Err(SearchError::InvalidParams("return_threshold must be finite".into()));
        }
        Ok(())
    }
}

/// One unfiltered buffer entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry<T> {
    pub key: String,
    pub utility: T,
    pub encoding: ExplanationEncoding,
}

/// Entries ordered by utility descending, then key ascending, without
/// duplicate keys.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SortedBuffer<T> {
    entries: Vec<Entry<T>>,
}

impl<T: Scalar> SortedBuffer<T> {
    pub fn new() -> Self {
        Self { entries: Vec::new() }
    }

    /// Inserts unless the key is already present.
    pub fn insert(&mut self, entry: Entry<T>) -> bool {
        if self.entries.iter().any(|e| e.key == entry.key) {
            return false;
        }
        let pos = self
            .entries
            .partition_point(|e| e.utility > entry.utility || (e.utility == entry.utility && e.key < entry.key));
        self.entries.insert(pos, entry);
        true
    }

    pub fn head(&self) -> Option<&Entry<T>> {
        self.entries.first()
    }

    pub fn get(&self, i: usize) -> Option<&Entry<T>> {
        self.entries.get(i)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Entry<T>> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveType {
    Init,
    Flip,
    Expansion,
    Extension,
}

/// One evaluated explanation in a search trace. `parent` is the `id` of the
/// node whose neighbourhood produced this one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub schema_version: u32,
    pub id: usize,
    pub restart: usize,
    pub step: usize,
    pub key: String,
    pub encoding: String,
    pub parent: Option<usize>,
    pub parent_key: Option<String>,
    #[serde(rename = "move")]
    pub move_type: MoveType,
    pub wkl: Option<f64>,
    pub utility: Option<f64>,
    pub filtered: bool,
    pub mean_return: f64,
    /// Whether the search moved to this node.
    pub accepted: bool,
}

impl TraceNode {
    fn from_record<T: Scalar>(
        id: usize,
        restart: usize,
        step: usize,
        encoding: &ExplanationEncoding,
        record: &UtilityRecord<T>,
        parent: Option<(usize, &str)>,
        move_type: MoveType,
    ) -> Self {
        Self {
            schema_version: TRACE_SCHEMA_VERSION,
            id,
            restart,
            step,
            key: record.key.clone(),
            encoding: encoding.to_string(),
            parent: parent.map(|p| p.0),
            parent_key: parent.map(|p| p.1.to_string()),
            move_type,
            wkl: record.wkl.map(|x| x.to_f64_lossy()),
            utility: record.utility.map(|x| x.to_f64_lossy()),
            filtered: record.filtered,
            mean_return: record.mean_return.to_f64_lossy(),
            accepted: false,
        }
    }
}
