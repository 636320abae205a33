use std::collections::{HashMap, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;

use super::EnvError;

/// Default ceiling for [`enumerate_states`].
pub const DEFAULT_STATE_CAP: usize = 2_000_000;

/// A finite MDP with an explicit transition model.
pub trait Environment {
    type State: Clone + Eq + Hash + Debug;

    fn num_actions(&self) -> usize;

    fn feature_names(&self) -> &'static [&'static str];

    /// Start-state distribution.
    fn initial_states(&self) -> Vec<(Self::State, f64)>;

    fn is_terminal(&self, s: &Self::State) -> bool;

    /// Successor distribution of `(s, a)` with distinct states and positive
    /// probabilities summing to one.
    fn transitions(&self, s: &Self::State, action: usize) -> Result<Vec<(Self::State, f64)>, EnvError>;

    fn features(&self, s: &Self::State) -> Vec<f64>;

    /// Samples one successor with a single uniform draw.
    fn sample_step<R: Rng + ?Sized>(
        &self,
        s: &Self::State,
        action: usize,
        rng: &mut R,
    ) -> Result<Self::State, EnvError> {
        let outcomes = self.transitions(s, action)?;
        Ok(outcomes[sample_index(outcomes.iter().map(|o| o.1), rng)].0.clone())
    }
}

/// Index drawn from a discrete distribution with one uniform variate.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Every reachable state of an [`Environment`] with features and transitions
/// indexed for tabular algorithms.
#[derive(Debug, Clone)]
pub struct TabularEnv<S> {
    pub states: Vec<S>,
    index: HashMap<S, usize>,
    pub features: Vec<Vec<f64>>,
    pub terminal: Vec<bool>,
    /// Row `s * num_actions + a`; empty for terminal states.
    transitions: Vec<Vec<(usize, f64)>>,
    pub initial: Vec<(usize, f64)>,
    pub num_actions: usize,
    pub feature_names: &'static [&'static str],
}

impl<S: Clone + Eq + Hash + Debug> TabularEnv<S> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn transitions(&self, s: usize, action: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.num_actions + action]
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.initial[sample_index(self.initial.iter().map(|x| x.1), rng)].0
    }

    pub fn sample_next<R: Rng + ?Sized>(&self, s: usize, action: usize, rng: &mut R) -> usize {
        let row = self.transitions(s, action);
        row[sample_index(row.iter().map(|x| x.1), rng)].0
    }
}

/// Breadth-first enumeration from the start distribution over all actions.
/// State order is the discovery order, so it is deterministic.
pub fn enumerate_states<E: Environment>(env: &E, cap: usize) -> Result<TabularEnv<E::State>, EnvError> {
    let num_actions = env.num_actions();
    let mut states: Vec<E::State> = Vec::new();
    let mut index: HashMap<E::State, usize> = HashMap::new();
    let mut queue = VecDeque::new();

    let mut intern = |s: E::State, states: &mut Vec<E::State>, queue: &mut VecDeque<usize>| -> Result<usize, EnvError> {
        if let Some(&i) = index.get(&s) {
            return Ok(i);
        }
        if states.len() >= cap {
            return Err(EnvError::StateSpaceTooLarge { cap });
        }
        let i = states.len();
        index.insert(s.clone(), i);
        states.push(s);
        queue.push_back(i);
        Ok(i)
    };

    let mut initial = Vec::new();
    for (s, p) in env.initial_states() {
        let i = intern(s, &mut states, &mut queue)?;
        initial.push((i, p));
    }

    let mut rows: HashMap<usize, Vec<Vec<(usize, f64)>>> = HashMap::new();
    while let Some(i) = queue.pop_front() {
        let s = states[i].clone();
        if env.is_terminal(&s) {
            continue;
        }
        let mut per_action = Vec::with_capacity(num_actions);
        for a in 0..num_actions {
            let mut row = Vec::new();
            for (next, p) in env.transitions(&s, a)? {
                let j = intern(next, &mut states, &mut queue)?;
                row.push((j, p));
            }
            per_action.push(row);
        }
        rows.insert(i, per_action);
    }

    let mut transitions = Vec::with_capacity(states.len() * num_actions);
    for i in 0..states.len() {
        match rows.remove(&i) {
            Some(per_action) => transitions.extend(per_action),
            None => transitions.extend(std::iter::repeat_with(Vec::new).take(num_actions)),
        }
    }
    let features = states.iter().map(|s| env.features(s)).collect();
    let terminal = states.iter().map(|s| env.is_terminal(s)).collect();
    let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
    Ok(TabularEnv {
        states,
        index,
        features,
        terminal,
        transitions,
        initial,
        num_actions,
        feature_names: env.feature_names(),
    })
}

/// Object-safe view of an enumerated environment used by the product
/// construction.
pub trait EnvModel: Sync {
    fn num_states(&self) -> usize;
    fn num_actions(&self) -> usize;
    fn features(&self, s: usize) -> &[f64];
    fn is_terminal(&self, s: usize) -> bool;
    fn transitions(&self, s: usize, action: usize) -> &[(usize, f64)];
    fn initial(&self) -> &[(usize, f64)];
    fn feature_names(&self) -> &'static [&'static str];
}

impl<S: Clone + Eq + Hash + Debug + Sync> EnvModel for TabularEnv<S> {
    fn num_states(&self) -> usize {
        self.states.len()
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn features(&self, s: usize) -> &[f64] {
        &self.features[s]
    }

    fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    fn transitions(&self, s: usize, action: usize) -> &[(usize, f64)] {
        TabularEnv::transitions(self, s, action)
    }

    fn initial(&self) -> &[(usize, f64)] {
        &self.initial
    }

    fn feature_names(&self) -> &'static [&'static str] {
        self.feature_names
    }
}
