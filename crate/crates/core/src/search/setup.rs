use crate::envs::EnvModel;
use crate::formula::{CanonicalExplanation, PredicateSet};
use crate::fspa::Fspa;
use crate::metrics::nontrap_states;
use crate::product::{ProductConfig, ProductMdp, TransitionTable};
use crate::rl::{policy_entropy, q_learning, soft_value_iteration, TabularPolicy, TrainerConfig, TrainerMode};
use crate::seed::keyed_rng;
use crate::Scalar;

use super::SearchError;

/// Everything needed to turn an explanation into a trained policy.
pub struct Setup<'a, T> {
    pub env: &'a dyn EnvModel,
    pub predicates: PredicateSet<T>,
    pub product: ProductConfig<T>,
    pub trainer: TrainerConfig<T>,
    /// Global seed.
    pub seed: u64,
}

impl<'a, T: Scalar> Setup<'a, T> {
    pub fn new(
        env: &'a dyn EnvModel,
        predicates: PredicateSet<T>,
        product: ProductConfig<T>,
        trainer: TrainerConfig<T>,
        seed: u64,
    ) -> Result<Self, SearchError> {
        product.validate()?;
        trainer.validate()?;
        Ok(Self { env, predicates, product, trainer, seed })
    }

    pub fn names(&self) -> Vec<&str> {
        self.predicates.names()
    }

    pub fn key(&self, c: &CanonicalExplanation) -> String {
        c.render(&self.names())
    }

    pub fn product_mdp(&self, c: &CanonicalExplanation) -> Result<ProductMdp<'a, T>, SearchError> {
        let fspa = Fspa::build(c, &self.predicates, self.product.rho_max);
        Ok(ProductMdp::new(self.env, fspa, self.product)?)
    }

    /// Trains `replicates` policies on `table`; replicate `r` of a stochastic
    /// trainer draws from the stream keyed by `(seed, "train/<key>", r)`.
    pub fn train(&self, table: &TransitionTable<T>, key: &str, replicates: usize) -> Result<Vec<TabularPolicy<T>>, SearchError> {
        (0..replicates)
            .map(|r| match self.trainer.mode {
                TrainerMode::SoftVi => Ok(soft_value_iteration(table, &self.trainer)?.0),
                TrainerMode::QLearning => {
                    let mut rng = keyed_rng(self.seed, &format!("train/{key}"), r as u64);
                    Ok(q_learning(table, &self.trainer, self.seed, &mut rng)?)
                }
            })
            .collect()
    }

    /// Target trained on an explanation: the highest-entropy replicate over the
    /// target's non-trap states, together with those states.
    pub fn explanation_target(
        &self,
        c: &CanonicalExplanation,
        replicates: usize,
    ) -> Result<(TabularPolicy<T>, Vec<usize>), SearchError> {
        let table = self.product_mdp(c)?.expand_transitions();
        let pool = nontrap_states(&table);
        let policies = self.train(&table, &format!("target/{}", self.key(c)), replicates.max(1))?;
        let mut best = 0;
        let mut best_h = T::neg_infinity();
        for (i, p) in policies.iter().enumerate() {
            let h = if pool.is_empty() { T::zero() } else { policy_entropy(p, &pool)? };
            if h > best_h {
                best = i;
                best_h = h;
            }
        }
        Ok((policies.into_iter().nth(best).expect("at least one replicate"), pool))
    }

    /// Target trained on the environment reward `reward(s, s')`, with no automaton.
    pub fn reward_target(&self, reward: impl Fn(usize, usize) -> T) -> Result<(TabularPolicy<T>, Vec<usize>), SearchError> {
        let table = TransitionTable::from_env_rewards(self.env, self.product.gamma, self.product.horizon, reward);
        let pool = nontrap_states(&table);
        let policy = self.train(&table, "target/reward", 1)?.remove(0);
        Ok((policy, pool))
    }

    /// Live `(s, q0)` states reachable in the bare environment; the sampling
    /// pool for a target loaded from disk.
    pub fn env_pool(&self) -> Vec<usize> {
        let table = TransitionTable::from_env_rewards(self.env, self.product.gamma, self.product.horizon, |_, _| T::zero());
        nontrap_states(&table)
    }
}
