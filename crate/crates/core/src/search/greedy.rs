
use rand::Rng;
use rayon::prelude::*;

use crate::formula::{enumerate_all, CanonicalExplanation, ExplanationEncoding};
use crate::metrics::UtilityRecord;
use crate::seed::keyed_rng;
use crate::Scalar;

use super::evaluator::Recorder;
use super::{Evaluator, MoveType, SearchError, TraceNode};

/// Largest predicate count the oracle accepts without `force`.
pub const ORACLE_LIMIT: usize = 4;

/// Result of one greedy restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult<T> {
    pub restart: usize,
    pub start: ExplanationEncoding,
    /// `None` when every explanation around the start was filtered.
    pub best: Option<(String, ExplanationEncoding, UtilityRecord<T>)>,
    /// Keys of accepted moves, starting with the start explanation.
    pub path: Vec<String>,
    /// Distinct canonical keys evaluated or looked up during this restart.
    pub searched: usize,
    pub searched_fraction: f64,
    /// Whether the search stopped at a local optimum before the step budget.
    pub converged: bool,
    pub trace: Vec<TraceNode>,
}

impl<T: Scalar> RestartResult<T> {
    pub fn utility(&self) -> Option<T> {
        self.best.as_ref().and_then(|b| b.2.utility)
    }

    pub fn key(&self) -> Option<&str> {
        self.best.as_ref().map(|b| b.0.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<T> {
    /// Restarts with a result, best first (utility descending, key, restart id),
    /// truncated to `top_k`.
    pub top: Vec<RestartResult<T>>,
    /// Every restart in run order.
    pub restarts: Vec<RestartResult<T>>,
    pub total_explanations: usize,
}

impl<T: Scalar> SearchOutcome<T> {
    pub fn trace(&self) -> impl Iterator<Item = &TraceNode> {
        self.restarts.iter().flat_map(|r| r.trace.iter())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult<T> {
    /// Unfiltered records, utility descending then key ascending.
    pub ranked: Vec<UtilityRecord<T>>,
    /// Filtered records in key order.
    pub filtered: Vec<UtilityRecord<T>>,
}

fn rank<T: Scalar>(a: &UtilityRecord<T>, b: &UtilityRecord<T>) -> std::cmp::Ordering {
    let (ua, ub) = (a.utility.expect("ranked"), b.utility.expect("ranked"));
    ub.partial_cmp(&ua).expect("finite utility").then_with(|| a.key.cmp(&b.key))
}

/// Uniform valid encoding by rejection on the temporal bits.
pub fn random_encoding<R: Rng + ?Sized>(n_pred: usize, rng: &mut R) -> ExplanationEncoding {
    let len = 3 * n_pred + 2;
    loop {
        let bits = rng.gen::<u64>() & ((1u64 << len) - 1);
        if let Ok(e) = ExplanationEncoding::from_bits(n_pred, bits) {
            return e;
        }
    }
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub fn total_explanations(&self) -> Result<usize, SearchError> {
        Ok(enumerate_all(self.setup.predicates.len(), self.params.predicate_cap)?.len())
    }

    /// Greedy local search from `start`, with expansion and extension as
    /// configured. Trace ids start at `id_offset`.
    pub fn greedy_search(
        &self,
        start: ExplanationEncoding,
        restart: usize,
        id_offset: usize,
    ) -> Result<RestartResult<T>, SearchError> {
        let total = self.total_explanations()?;
        let mut rec = Recorder::new(restart, id_offset);
        let start_record = self.evaluate(&CanonicalExplanation::decode(&start))?;
        rec.requested.insert(start_record.key.clone());
        rec.push(0, &start, &start_record, None, MoveType::Init);
        rec.accept(&start_record.key);

        let mut current = start;
        let mut current_key = start_record.key.clone();
        let mut current_record = start_record;
        let mut path = vec![current_key.clone()];
        let mut converged = false;
        let mut failed = false;

        for step in 1..=self.params.max_steps {
            let buffer = match self.eval_neighbors(&current, step, MoveType::Flip, &mut rec) {
                Ok(b) => b,
                Err(SearchError::EmptyBuffer(_)) => {
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            let head = buffer.head().expect("nonempty buffer").clone();
            if head.key != current_key {
                current = head.encoding;
                current_key = head.key;
            } else {
                let mut moved = false;
                if self.params.extension {
                    for i in 1..=self.params.extension_steps {
                        let Some(probe) = buffer.get(i) else { break };
                        let probe_buffer = self.eval_neighbors(&probe.encoding, step, MoveType::Extension, &mut rec)?;
                        let probe_head = probe_buffer.head().expect("probe is unfiltered");
                        if probe_head.utility > head.utility {
                            current = probe_head.encoding;
                            current_key = probe_head.key.clone();
                            moved = true;
                            break;
                        }
                    }
                }
                if !moved {
                    converged = true;
                    break;
                }
            }
            current_record = self.evaluate(&CanonicalExplanation::decode(&current))?;
            rec.accept(&current_key);
            path.push(current_key.clone());
        }

        let best = if failed || current_record.filtered {
            None
        } else {
            Some((current_key, current, current_record))
        };
        Ok(RestartResult {
            restart,
            start,
            best,
            path,
            searched: rec.requested.len(),
            searched_fraction: if total == 0 { 0.0 } else { rec.requested.len() as f64 / total as f64 },
            converged,
            trace: rec.nodes,
        })
    }

    /// `restarts` greedy searches from starts drawn with `(seed, "start", r)`,
    /// sharing this evaluator's cache.
    pub fn multi_start(&self) -> Result<SearchOutcome<T>, SearchError> {
        let n_pred = self.setup.predicates.len();
        let total = self.total_explanations()?;
        let mut restarts = Vec::with_capacity(self.params.restarts);
        let mut next_id = 0;
        for r in 0..self.params.restarts {
            let start = random_encoding(n_pred, &mut keyed_rng(self.setup.seed, "start", r as u64));
            let result = self.greedy_search(start, r, next_id)?;
            next_id += result.trace.len();
            restarts.push(result);
        }
        let mut top: Vec<RestartResult<T>> = restarts.iter().filter(|r| r.best.is_some()).cloned().collect();
        top.sort_by(|a, b| {
            let (ua, ub) = (a.utility().expect("scored"), b.utility().expect("scored"));
            ub.partial_cmp(&ua)
                .expect("finite utility")
                .then_with(|| a.key().cmp(&b.key()))
                .then_with(|| a.restart.cmp(&b.restart))
        });
        top.truncate(self.params.top_k);
        Ok(SearchOutcome { top, restarts, total_explanations: total })
    }

    /// Scores every canonical explanation. Refuses more than four predicates
    /// unless `force` is set.
    pub fn brute_force_oracle(&self, force: bool) -> Result<OracleResult<T>, SearchError> {
        let n = self.setup.predicates.len();
        if n > ORACLE_LIMIT && !force {
            return Err(SearchError::OracleTooLarge { n, limit: ORACLE_LIMIT });
        }
        let all: Vec<CanonicalExplanation> = enumerate_all(n, self.params.predicate_cap)?.into_iter().collect();
        let records: Vec<UtilityRecord<T>> =
            self.pool().install(|| all.par_iter().map(|c| self.evaluate(c)).collect::<Result<_, _>>())?;
        let (mut ranked, mut filtered): (Vec<_>, Vec<_>) = records.into_iter().partition(|r| !r.filtered);
        ranked.sort_by(rank);
        filtered.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(OracleResult { ranked, filtered })
    }
}
