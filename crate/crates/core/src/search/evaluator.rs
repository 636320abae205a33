use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;

use crate::formula::{expansion, neighborhood, CanonicalExplanation, ExplanationEncoding};
use crate::metrics::{sample_states, weighted_kl, MetricConfig, StateSample, UtilityRecord};
use crate::rl::{select_replicate, TabularPolicy};
use crate::seed::keyed_rng;
use crate::Scalar;

use super::{Entry, MoveType, SearchError, SearchParams, Setup, SortedBuffer, TraceNode};

/// Scores explanations against a fixed target policy and caches the results
/// by canonical key.
pub struct Evaluator<'a, T> {
    pub(super) setup: Setup<'a, T>,
    pub(super) params: SearchParams<T>,
    pub(super) metric: MetricConfig<T>,
    target: TabularPolicy<T>,
    sample: StateSample<T>,
    cache: Mutex<HashMap<String, UtilityRecord<T>>>,
    pool: rayon::ThreadPool,
}

/// Trace bookkeeping for one restart.
pub(super) struct Recorder {
    pub restart: usize,
    pub nodes: Vec<TraceNode>,
    pub requested: BTreeSet<String>,
    /// Latest node id per key.
    pub latest: HashMap<String, usize>,
    pub id_offset: usize,
}

impl Recorder {
    pub fn new(restart: usize, id_offset: usize) -> Self {
        Self { restart, nodes: Vec::new(), requested: BTreeSet::new(), latest: HashMap::new(), id_offset }
    }

    pub fn push<T: Scalar>(
        &mut self,
        step: usize,
        encoding: &ExplanationEncoding,
        record: &UtilityRecord<T>,
        parent: Option<&str>,
        move_type: MoveType,
    ) -> usize {
        let id = self.id_offset + self.nodes.len();
        let parent = parent.map(|k| (self.latest[k], k));
        self.nodes
            .push(TraceNode::from_record(id, self.restart, step, encoding, record, parent, move_type));
        self.latest.insert(record.key.clone(), id);
        id
    }

    pub fn accept(&mut self, key: &str) {
        if let Some(&id) = self.latest.get(key) {
            self.nodes[id - self.id_offset].accepted = true;
        }
    }
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    /// `pool` is the set `B_NT` is drawn from, keyed by `(seed, "b_nt", 0)`.
    /// `workers` threads evaluate neighbourhoods.
    pub fn new(
        setup: Setup<'a, T>,
        params: SearchParams<T>,
        metric: MetricConfig<T>,
        target: TabularPolicy<T>,
        pool: &[usize],
        workers: usize,
    ) -> Result<Self, SearchError> {
        params.validate()?;
        let n = metric.sample_size.min(pool.len()).max(1);
        let states = sample_states(pool, n, &mut keyed_rng(setup.seed, "b_nt", 0))?;
        let sample = StateSample::new(states, &target, metric.weights, setup.seed)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| SearchError::Pool(e.to_string()))?;
        Ok(Self { setup, params, metric, target, sample, cache: Mutex::new(HashMap::new()), pool })
    }

    pub fn setup(&self) -> &Setup<'a, T> {
        &self.setup
    }

    pub fn params(&self) -> &SearchParams<T> {
        &self.params
    }

    pub fn sample(&self) -> &StateSample<T> {
        &self.sample
    }

    pub fn target(&self) -> &TabularPolicy<T> {
        &self.target
    }

    pub(super) fn pool(&self) -> &rayon::ThreadPool {
        &self.pool
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn key(&self, c: &CanonicalExplanation) -> String {
        self.setup.key(c)
    }

    /// Cached evaluation of one explanation.
    pub fn evaluate(&self, c: &CanonicalExplanation) -> Result<UtilityRecord<T>, SearchError> {
        let key = self.key(c);
        if let Some(r) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(r.clone());
        }
        let record = self.evaluate_uncached(c)?;
        let mut cache = self.cache.lock().expect("cache lock");
        Ok(cache.entry(key).or_insert(record).clone())
    }

    /// Trains, filters and scores without consulting the cache.
    pub fn evaluate_uncached(&self, c: &CanonicalExplanation) -> Result<UtilityRecord<T>, SearchError> {
        let key = self.key(c);
        let mdp = self.setup.product_mdp(c)?;
        let table = mdp.expand_transitions();
        let replicates = self.params.replicates;
        let policies = self.setup.train(&table, &key, replicates)?;
        let chosen = select_replicate(
            &policies,
            &self.sample,
            self.params.selection,
            Some(&self.target),
            self.metric.epsilon,
        )?;
        let policy = &policies[chosen];
        let seed = self.setup.seed;
        let mean_return = mdp.average_return(policy, self.params.episodes, seed, &format!("return/{key}"))?;
        let trainer = self.setup.trainer.mode.id();
        if mean_return <= self.params.return_threshold {
            return Ok(UtilityRecord::filtered(key, mean_return, replicates, trainer, seed));
        }
        let wkl = weighted_kl(policy, &self.target, &self.sample, self.metric.epsilon)?;
        Ok(UtilityRecord::scored(key, wkl, mean_return, replicates, trainer, seed))
    }

    /// Evaluates encodings on the worker pool; results keep input order.
    /// Encodings sharing a canonical form are trained once.
    pub(super) fn evaluate_many(
        &self,
        encodings: &[ExplanationEncoding],
    ) -> Result<Vec<UtilityRecord<T>>, SearchError> {
        let canon: Vec<CanonicalExplanation> = encodings.iter().map(CanonicalExplanation::decode).collect();
        let mut unique: Vec<&CanonicalExplanation> = Vec::new();
        let mut seen = BTreeSet::new();
        for c in &canon {
            if seen.insert(c) {
                unique.push(c);
            }
        }
        let results: Vec<UtilityRecord<T>> = self
            .pool
            .install(|| unique.par_iter().map(|c| self.evaluate(c)).collect::<Result<_, _>>())?;
        let by_key: HashMap<&str, &UtilityRecord<T>> = results.iter().map(|r| (r.key.as_str(), r)).collect();
        Ok(canon.iter().map(|c| by_key[self.key(c).as_str()].clone()).collect())
    }

    /// Neighbourhood evaluation around `input` (which is included). When the
    /// buffer head is `input` itself and expansion is on, the expanded
    /// neighbourhood is evaluated as well.
    pub(super) fn eval_neighbors(
        &self,
        input: &ExplanationEncoding,
        step: usize,
        move_type: MoveType,
        rec: &mut Recorder,
    ) -> Result<SortedBuffer<T>, SearchError> {
        let input_key = self.key(&CanonicalExplanation::decode(input));
        let nbh = neighborhood(input);
        let mut buffer = SortedBuffer::new();
        let mut noted = BTreeSet::new();
        let mut batch = vec![*input];
        batch.extend_from_slice(&nbh);
        self.absorb(&batch, &input_key, step, move_type, rec, &mut buffer, &mut noted)?;
        if self.params.expansion && buffer.head().is_some_and(|h| h.key == input_key) {
            let expanded = expansion(input, &nbh);
            self.absorb(&expanded, &input_key, step, MoveType::Expansion, rec, &mut buffer, &mut noted)?;
        }
        if buffer.is_empty() {
            return Err(SearchError::EmptyBuffer(input_key));
        }
        Ok(buffer)
    }

    #[allow(clippy::too_many_arguments)]
    fn absorb(
        &self,
        batch: &[ExplanationEncoding],
        input_key: &str,
        step: usize,
        move_type: MoveType,
        rec: &mut Recorder,
        buffer: &mut SortedBuffer<T>,
        noted: &mut BTreeSet<String>,
    ) -> Result<(), SearchError> {
        let records = self.evaluate_many(batch)?;
        for (enc, r) in batch.iter().zip(&records) {
            rec.requested.insert(r.key.clone());
            if r.key != input_key && noted.insert(r.key.clone()) {
                rec.push(step, enc, r, Some(input_key), move_type);
            }
            if let Some(u) = r.utility {
                buffer.insert(Entry { key: r.key.clone(), utility: u, encoding: *enc });
            }
        }
        Ok(())
    }
}
