//! Product of an enumerated environment with an explanation's automaton.
//!
//! Product state `(s, q)` has index `3 * s + q`. Only `(s, q0)` with `s`
//! non-terminal can act: accepting and trap states are absorbing and end the
//! episode. The automaton reads each post-transition environment state, and
//! the reward is evaluated on that same state:
//!
//! | transition      | sparse        | dense            |
//! |-----------------|---------------|------------------|
//! | `q' = q`        | `0`           | `β ρ(b(q, q*))`  |
//! | `q' ∈ Tr`       | `-ρ(b(q,q'))` | `-ρ(b(q,q'))`    |
//! | otherwise       | `ρ(b(q,q'))`  | `ρ(b(q,q'))`     |
//!
//! with `q*` the most robust non-trap neighbour of `q`.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{sample_index, EnvModel};
use crate::fspa::{AutomatonState, Fspa};
use crate::rl::TabularPolicy;
use crate::seed::keyed_rng;
use crate::Scalar;

pub const AUTOMATON_STATES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewardMode {
    Sparse,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProductError {
    #[error("invalid product configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot step from terminal product state {0:?}")]
    StepOnTerminal(ProductState),
    #[error("policy covers {policy} states but the product has {product}")]
    PolicyShape { policy: usize, product: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProductConfig<T> {
    pub reward: RewardMode,
    pub beta: T,
    pub gamma: T,
    pub horizon: usize,
    pub rho_max: T,
}

impl<T: Scalar> Default for ProductConfig<T> {
    fn default() -> Self {
        Self {
            reward: RewardMode::Sparse,
            beta: T::of(0.1),
            gamma: T::of(0.95),
            horizon: 100,
            rho_max: T::of(crate::fspa::DEFAULT_RHO_MAX),
        }
    }
}

impl<T: Scalar> ProductConfig<T> {
    pub fn validate(&self) -> Result<(), ProductError> {
        let unit = |x: T| x >= T::zero() && x < T::one();
        if !unit(self.beta) {
            return Err(ProductError::InvalidConfig(format!("beta {} not in [0, 1)", self.beta)));
        }
        if !unit(self.gamma) {
            return Err(ProductError::InvalidConfig(format!("gamma {} not in [0, 1)", self.gamma)));
        }
        if self.horizon == 0 {
            return Err(ProductError::InvalidConfig("horizon must be positive".into()));
        }
        if !(self.rho_max > T::zero() && self.rho_max.is_finite()) {
            return Err(ProductError::InvalidConfig("rho_max must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProductState {
    pub env: usize,
    pub automaton: AutomatonState,
}

impl ProductState {
    pub fn index(self) -> usize {
        self.env * AUTOMATON_STATES + self.automaton.index()
    }

    pub fn from_index(i: usize) -> Self {
        Self {
            env: i / AUTOMATON_STATES,
            automaton: AutomatonState::from_index(i % AUTOMATON_STATES).expect("index mod 3"),
        }
    }
}

/// Automaton successor and reward when `q0` reads one environment state.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Arrival<T> {
    next: AutomatonState,
    reward: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step<T> {
    pub next: ProductState,
    pub reward: T,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rollout<T> {
    pub states: Vec<ProductState>,
    pub actions: Vec<usize>,
    pub ret: T,
}

pub struct ProductMdp<'a, T> {
    env: &'a dyn EnvModel,
    fspa: Fspa<T>,
    config: ProductConfig<T>,
    arrivals: Vec<Arrival<T>>,
}

impl<'a, T: Scalar> ProductMdp<'a, T> {
    pub fn new(env: &'a dyn EnvModel, fspa: Fspa<T>, config: ProductConfig<T>) -> Result<Self, ProductError> {
        config.validate()?;
        if let Some(f) = fspa.predicates().max_feature() {
            let have = env.feature_names().len();
            if f >= have {
                return Err(ProductError::InvalidConfig(format!(
                    "predicate feature {f} but the environment has {have} features"
                )));
            }
        }
        let arrivals = (0..env.num_states())
            .map(|s| {
                let x: Vec<T> = env.features(s).iter().map(|&v| T::of(v)).collect();
                arrival(&fspa, &config, &x)
            })
            .collect();
        Ok(Self { env, fspa, config, arrivals })
    }

    pub fn fspa(&self) -> &Fspa<T> {
        &self.fspa
    }

    pub fn config(&self) -> &ProductConfig<T> {
        &self.config
    }

    pub fn env(&self) -> &dyn EnvModel {
        self.env
    }

    pub fn num_states(&self) -> usize {
        self.env.num_states() * AUTOMATON_STATES
    }

    pub fn num_actions(&self) -> usize {
        self.env.num_actions()
    }

    pub fn is_terminal(&self, s: ProductState) -> bool {
        s.automaton.is_absorbing() || self.env.is_terminal(s.env)
    }

    pub fn initial(&self) -> Vec<(ProductState, f64)> {
        self.env
            .initial()
            .iter()
            .map(|&(env, p)| (ProductState { env, automaton: AutomatonState::Initial }, p))
            .collect()
    }

    /// Transition of `(s, q)` into environment state `next_env`.
    fn arrive(&self, next_env: usize) -> (ProductState, T, bool) {
        let a = self.arrivals[next_env];
        let next = ProductState { env: next_env, automaton: a.next };
        (next, a.reward, self.is_terminal(next))
    }

    /// One sampled step at time `t`; episodes also end once `t + 1` reaches the horizon.
    pub fn step<R: Rng + ?Sized>(
        &self,
        s: ProductState,
        t: usize,
        action: usize,
        rng: &mut R,
    ) -> Result<Step<T>, ProductError> {
        if self.is_terminal(s) || t >= self.config.horizon {
            return Err(ProductError::StepOnTerminal(s));
        }
        let row = self.env.transitions(s.env, action);
        let next_env = row[sample_index(row.iter().map(|x| x.1), rng)].0;
        let (next, reward, terminal) = self.arrive(next_env);
        Ok(Step {
            next,
            reward,
            terminal: terminal || t + 1 >= self.config.horizon,
        })
    }

    /// Exact model over all product states.
    pub fn expand_transitions(&self) -> TransitionTable<T> {
        let n_actions = self.num_actions();
        let mut table = TransitionTable::empty(self.num_states(), n_actions, self.config.gamma, self.config.horizon);
        for i in 0..self.num_states() {
            let s = ProductState::from_index(i);
            if self.is_terminal(s) {
                table.terminal[i] = true;
                table.close_rows(n_actions);
                continue;
            }
            for a in 0..n_actions {
                for &(next_env, p) in self.env.transitions(s.env, a) {
                    let (next, reward, _) = self.arrive(next_env);
                    table.push(next.index(), T::of(p), reward);
                }
                table.close_row();
            }
        }
        table.initial = self
            .initial()
            .into_iter()
            .map(|(s, p)| (s.index(), T::of(p)))
            .collect();
        table
    }

    pub fn rollout<R: Rng + ?Sized>(&self, policy: &TabularPolicy<T>, rng: &mut R) -> Result<Rollout<T>, ProductError> {
        if policy.num_states() != self.num_states() || policy.num_actions() != self.num_actions() {
            return Err(ProductError::PolicyShape {
                policy: policy.num_states(),
                product: self.num_states(),
            });
        }
        let init = self.initial();
        let mut s = init[sample_index(init.iter().map(|x| x.1), rng)].0;
        let mut out = Rollout { states: vec![s], actions: Vec::new(), ret: T::zero() };
        let mut t = 0;
        while !self.is_terminal(s) && t < self.config.horizon {
            let action = sample_index(policy.row(s.index()).iter().map(|p| p.to_f64_lossy()), rng);
            let step = self.step(s, t, action, rng)?;
            out.ret = out.ret + step.reward;
            out.actions.push(action);
            out.states.push(step.next);
            s = step.next;
            t += 1;
        }
        Ok(out)
    }

    /// Mean undiscounted return over `episodes` rollouts, episode `k` drawing
    /// from the stream keyed by `(seed, key, k)`.
    pub fn average_return(
        &self,
        policy: &TabularPolicy<T>,
        episodes: usize,
        seed: u64,
        key: &str,
    ) -> Result<T, ProductError> {
        assert!(episodes >= 1, "at least one episode is required");
        let mut total = T::zero();
        for k in 0..episodes {
            let mut rng = keyed_rng(seed, key, k as u64);
            total = total + self.rollout(policy, &mut rng)?.ret;
        }
        Ok(total / T::of(episodes as f64))
    }
}

fn arrival<T: Scalar>(fspa: &Fspa<T>, config: &ProductConfig<T>, x: &[T]) -> Arrival<T> {
    let q = AutomatonState::Initial;
    let next = fspa.step(q, x);
    let rho = |to| fspa.guard_robustness(q, to, x).expect("template edge");
    let reward = match next {
        AutomatonState::Initial => match config.reward {
            RewardMode::Sparse => T::zero(),
            RewardMode::Dense => {
                let best = fspa.best_nontrap_neighbor(q, x).expect("q0 is not a trap");
                config.beta * rho(best)
            }
        },
        AutomatonState::Trap => -rho(next),
        AutomatonState::Accept => rho(next),
    };
    Arrival { next, reward }
}

/// Compressed transition model: for each `(state, action)` a list of
/// `(next, probability, reward)` entries. Terminal states have empty rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable<T> {
    num_states: usize,
    num_actions: usize,
    row_start: Vec<usize>,
    next: Vec<usize>,
    prob: Vec<T>,
    reward: Vec<T>,
    pub terminal: Vec<bool>,
    pub initial: Vec<(usize, T)>,
    pub gamma: T,
    pub horizon: usize,
}

impl<T: Scalar> TransitionTable<T> {
    fn empty(num_states: usize, num_actions: usize, gamma: T, horizon: usize) -> Self {
        Self {
            num_states,
            num_actions,
            row_start: vec![0],
            next: Vec::new(),
            prob: Vec::new(),
            reward: Vec::new(),
            terminal: vec![false; num_states],
            initial: Vec::new(),
            gamma,
            horizon,
        }
    }

    fn push(&mut self, next: usize, prob: T, reward: T) {
        self.next.push(next);
        self.prob.push(prob);
        self.reward.push(reward);
    }

    fn close_row(&mut self) {
        self.row_start.push(self.next.len());
    }

    fn close_rows(&mut self, n: usize) {
        for _ in 0..n {
            self.close_row();
        }
    }

    /// Table over product indices in which only `(s, q0)` acts and rewards
    /// come from `reward(s, s')` instead of an automaton.
    pub fn from_env_rewards(env: &dyn EnvModel, gamma: T, horizon: usize, reward: impl Fn(usize, usize) -> T) -> Self {
        let n_actions = env.num_actions();
        let mut table = Self::empty(env.num_states() * AUTOMATON_STATES, n_actions, gamma, horizon);
        for i in 0..table.num_states {
            let s = ProductState::from_index(i);
            if s.automaton != AutomatonState::Initial || env.is_terminal(s.env) {
                table.terminal[i] = true;
                table.close_rows(n_actions);
                continue;
            }
            for a in 0..n_actions {
                for &(next_env, p) in env.transitions(s.env, a) {
                    let next = ProductState { env: next_env, automaton: AutomatonState::Initial };
                    table.push(next.index(), T::of(p), reward(s.env, next_env));
                }
                table.close_row();
            }
        }
        table.initial = env
            .initial()
            .iter()
            .map(|&(e, p)| (ProductState { env: e, automaton: AutomatonState::Initial }.index(), T::of(p)))
            .collect();
        table
    }

    /// Builds a table directly from per-state, per-action outcome lists.
    /// `rows[s]` empty marks `s` terminal.
    pub fn from_rows(
        num_actions: usize,
        gamma: T,
        horizon: usize,
        rows: Vec<Vec<Vec<(usize, T, T)>>>,
        initial: Vec<(usize, T)>,
    ) -> Self {
        let mut table = Self::empty(rows.len(), num_actions, gamma, horizon);
        for (s, per_action) in rows.into_iter().enumerate() {
            if per_action.is_empty() {
                table.terminal[s] = true;
                table.close_rows(num_actions);
                continue;
            }
            assert_eq!(per_action.len(), num_actions, "state {s} has a wrong action count");
            for outcomes in per_action {
                for (next, p, r) in outcomes {
                    table.push(next, p, r);
                }
                table.close_row();
            }
        }
        table.initial = initial;
        table
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `(next, probability, reward)` entries of `(s, a)`.
    pub fn row(&self, s: usize, a: usize) -> impl Iterator<Item = (usize, T, T)> + '_ {
        let r = s * self.num_actions + a;
        (self.row_start[r]..self.row_start[r + 1]).map(move |k| (self.next[k], self.prob[k], self.reward[k]))
    }

    /// Samples `(next, reward)` from the row of `(s, a)`.
    pub fn sample<R: Rng + ?Sized>(&self, s: usize, a: usize, rng: &mut R) -> (usize, T) {
        let r = s * self.num_actions + a;
        let lo = self.row_start[r];
        let k = lo + sample_index(self.prob[lo..self.row_start[r + 1]].iter().map(|p| p.to_f64_lossy()), rng);
        (self.next[k], self.reward[k])
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.initial[sample_index(self.initial.iter().map(|x| x.1.to_f64_lossy()), rng)].0
    }

    /// States reachable from the initial distribution under some action sequence.
    pub fn reachable(&self) -> Vec<usize> {
        let mut seen = vec![false; self.num_states];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &(s, _) in &self.initial {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for a in 0..self.num_actions {
                for (n, p, _) in self.row(s, a) {
                    if p > T::zero() && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        (0..self.num_states).filter(|&s| seen[s]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{enumerate_states, CtfEnv, GridMap, NavEnv, NavMap};
    use crate::formula::{parse_explanation, PredicateSet};
    use crate::seed::rng_from_seed;

    /// Three env states: 0 -> (stay | go to 1 | go to 2); 1 and 2 terminal.
    /// Feature 0 is the task distance, feature 1 the hazard distance.
    struct Chain {
        features: Vec<Vec<f64>>,
        rows: Vec<Vec<(usize, f64)>>,
    }

    impl Chain {
        fn new(features: Vec<Vec<f64>>) -> Self {
            Self {
                features,
                rows: vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]],
            }
        }
    }

    impl EnvModel for Chain {
        fn num_states(&self) -> usize {
            3
        }
        fn num_actions(&self) -> usize {
            3
        }
        fn features(&self, s: usize) -> &[f64] {
            &self.features[s]
        }
        fn is_terminal(&self, s: usize) -> bool {
            s != 0
        }
        fn transitions(&self, _s: usize, a: usize) -> &[(usize, f64)] {
            &self.rows[a]
        }
        fn initial(&self) -> &[(usize, f64)] {
            &[(0, 1.0)]
        }
        fn feature_names(&self) -> &'static [&'static str] {
            &["goal", "hazard"]
        }
    }

    fn mdp<'a>(env: &'a Chain, reward: RewardMode) -> ProductMdp<'a, f64> {
        let set = PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.0)]).unwrap();
        let c = parse_explanation("F(psi0) & G(!psi1)", &["psi0", "psi1"]).unwrap();
        let fspa = Fspa::build(&c, &set, 1000.0);
        let config = ProductConfig { reward, beta: 0.1, ..ProductConfig::default() };
        ProductMdp::new(env, fspa, config).unwrap()
    }

    fn reward_of(m: &ProductMdp<f64>, action: usize) -> f64 {
        let t = m.expand_transitions();
        let row: Vec<_> = t.row(0, action).collect();
        assert_eq!(row.len(), 1);
        row[0].2
    }

    #[test]
    fn sparse_reward_cases() {
        // s0: task dist 2 (ρF = -1), hazard dist 3 (ρG = 2) -> self-loop
        // s1: task 0.5 (ρF = .5), hazard 1.6 (ρG = .6) -> accept, ρ = .5
        // s2: hazard 0.6 -> ρ(¬G) = 0.4 -> trap
        let env = Chain::new(vec![vec![2.0, 3.0], vec![0.5, 1.6], vec![4.0, 0.6]]);
        let m = mdp(&env, RewardMode::Sparse);
        assert_eq!(reward_of(&m, 0), 0.0);
        assert_eq!(reward_of(&m, 1), 0.5);
        assert!((reward_of(&m, 2) + 0.4).abs() < 1e-12);
    }

    #[test]
    fn dense_self_loop_reward() {
        // s0: ρF = 1 - 1.5 = -0.5, ρG = 0.5 -> stay guard min(0.5, 0.5) = 0.5,
        // accept guard -0.5, so q* = q0 and the reward is 0.1 * 0.5.
        let env = Chain::new(vec![vec![1.5, 2.5], vec![0.5, 1.6], vec![4.0, 0.6]]);
        let m = mdp(&env, RewardMode::Dense);
        assert!((reward_of(&m, 0) - 0.05).abs() < 1e-15);
        assert!((reward_of(&m, 2) + 0.4).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let env = Chain::new(vec![vec![2.0, 3.0]; 3]);
        let set = PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.0)]).unwrap();
        let c = parse_explanation("F(psi0) & G(!psi1)", &["psi0", "psi1"]).unwrap();
        for bad in [
            ProductConfig { beta: 1.0, ..ProductConfig::default() },
            ProductConfig { gamma: -0.1, ..ProductConfig::default() },
            ProductConfig { horizon: 0, ..ProductConfig::default() },
        ] {
            assert!(ProductMdp::new(&env, Fspa::build(&c, &set, 1000.0), bad).is_err());
        }
        let far = PredicateSet::from_thresholds(&[(0, 1.0), (5, 1.0)]).unwrap();
        assert!(ProductMdp::new(&env, Fspa::build(&c, &far, 1000.0), ProductConfig::default()).is_err());
    }

    fn ctf() -> (crate::envs::TabularEnv<crate::envs::CtfState>, PredicateSet<f64>) {
        let map = GridMap::parse(
            "b b r r R
             b b r r r
             b b r r r
             b b r r r
             B b r r r",
        )
        .unwrap()
        .with_starts(vec![crate::envs::Cell::new(2, 0)], vec![crate::envs::Cell::new(2, 3)])
        .unwrap();
        let env = enumerate_states(&CtfEnv::new(map), 1_000_000).unwrap();
        let set = PredicateSet::from_thresholds(&[(1, 1.0), (2, 1.5), (3, 1.0)]).unwrap();
        (env, set)
    }

    #[test]
    fn table_rows_are_distributions() {
        let (env, set) = ctf();
        let c = parse_explanation("F(psi0) & G(!psi1 | psi2)", &["psi0", "psi1", "psi2"]).unwrap();
        let m = ProductMdp::new(&env, Fspa::build(&c, &set, 1000.0), ProductConfig::default()).unwrap();
        let t = m.expand_transitions();
        let mut combat_rows = 0;
        for s in 0..t.num_states() {
            for a in 0..t.num_actions() {
                let row: Vec<_> = t.row(s, a).collect();
                if t.terminal[s] {
                    assert!(row.is_empty());
                    continue;
                }
                let sum: f64 = row.iter().map(|x| x.1).sum();
                assert!((sum - 1.0).abs() < 1e-12);
                if row.len() == 2 {
                    let mut ps: Vec<f64> = row.iter().map(|x| x.1).collect();
                    ps.sort_by(f64::total_cmp);
                    assert_eq!(ps, vec![0.25, 0.75]);
                    combat_rows += 1;
                }
            }
        }
        assert!(combat_rows > 0);
    }

    #[test]
    fn sampled_steps_match_table() {
        let (env, set) = ctf();
        let c = parse_explanation("F(psi0) & G(!psi1 | psi2)", &["psi0", "psi1", "psi2"]).unwrap();
        let m = ProductMdp::new(&env, Fspa::build(&c, &set, 1000.0), ProductConfig::default()).unwrap();
        let t = m.expand_transitions();
        // First product state/action with a stochastic row.
        let (s, a) = (0..t.num_states())
            .flat_map(|s| (0..t.num_actions()).map(move |a| (s, a)))
            .find(|&(s, a)| t.row(s, a).count() == 2)
            .unwrap();
        let row: Vec<_> = t.row(s, a).collect();
        let mut rng = rng_from_seed(5);
        let n = 100_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let step = m.step(ProductState::from_index(s), 0, a, &mut rng).unwrap();
            let entry = row.iter().find(|e| e.0 == step.next.index()).unwrap();
            assert_eq!(entry.2, step.reward);
            if step.next.index() == row[0].0 {
                hits += 1;
            }
        }
        let p = row[0].1;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn deterministic_env_rows_are_single() {
        let env = enumerate_states(
            &NavEnv::new(NavMap::parse("S . .\n. H .\n. . G").unwrap()),
            1000,
        )
        .unwrap();
        let set = PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.0)]).unwrap();
        let c = parse_explanation("F(psi0) & G(!psi1)", &["psi0", "psi1"]).unwrap();
        let m = ProductMdp::new(&env, Fspa::build(&c, &set, 1000.0), ProductConfig::default()).unwrap();
        let t = m.expand_transitions();
        for s in 0..t.num_states() {
            if !t.terminal[s] {
                for a in 0..t.num_actions() {
                    let row: Vec<_> = t.row(s, a).collect();
                    assert_eq!(row.len(), 1);
                    assert_eq!(row[0].1, 1.0);
                }
            }
        }
        let reach = t.reachable();
        assert!(reach.iter().all(|&s| ProductState::from_index(s).automaton != AutomatonState::Trap || t.terminal[s]));
    }

    #[test]
    fn terminal_steps_are_rejected() {
        let env = Chain::new(vec![vec![2.0, 3.0], vec![0.5, 1.6], vec![4.0, 0.6]]);
        let m = mdp(&env, RewardMode::Sparse);
        let mut rng = rng_from_seed(0);
        let done = ProductState { env: 1, automaton: AutomatonState::Accept };
        assert!(m.step(done, 0, 0, &mut rng).is_err());
        let live = ProductState { env: 0, automaton: AutomatonState::Initial };
        assert!(m.step(live, 100, 0, &mut rng).is_err());
        let last = m.step(live, 99, 0, &mut rng).unwrap();
        assert!(last.terminal);
    }
}
