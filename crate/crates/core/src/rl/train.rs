use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::product::TransitionTable;
use crate::Scalar;

use super::policy::{soft_max_value, TabularPolicy};
use super::RlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainerMode {
    SoftVi,
    QLearning,
}

impl TrainerMode {
    pub fn id(self) -> &'static str {
        match self {
            TrainerMode::SoftVi => "soft-vi",
            TrainerMode::QLearning => "q-learning",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainerConfig<T> {
    pub mode: TrainerMode,
    pub tau: T,
    /// Soft VI stops once the largest value change falls below this.
    pub tolerance: T,
    pub max_iter: usize,
    /// Q-learning episode budget.
    pub episodes: usize,
    /// Step size `alpha / (1 + n)^0.6` after `n` visits, floored at `alpha_min`.
    pub alpha: T,
    pub alpha_min: T,
    /// Exploration rate, linear from `epsilon_start` to `epsilon_end` over the budget.
    pub epsilon_start: T,
    pub epsilon_end: T,
}

impl<T: Scalar> Default for TrainerConfig<T> {
    fn default() -> Self {
        Self {
            mode: TrainerMode::SoftVi,
            tau: T::of(0.1),
            tolerance: T::of(1e-10).max(T::epsilon() * T::of(1e3)),
            max_iter: 10_000,
            episodes: 20_000,
            alpha: T::of(0.5),
            alpha_min: T::of(0.01),
            epsilon_start: T::one(),
            epsilon_end: T::of(0.05),
        }
    }
}

impl<T: Scalar> TrainerConfig<T> {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::InvalidConfig(m.into()));
        if !(self.tau > T::zero() && self.tau.is_finite()) {
            return bad("tau must be positive");
        }
        if !(self.tolerance > T::zero()) {
            return bad("tolerance must be positive");
        }
        if self.max_iter == 0 || self.episodes == 0 {
            return bad("max_iter and episodes must be positive");
        }
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !(self.alpha > T::zero() && unit(self.alpha) && unit(self.alpha_min)) {
            return bad("learning rates must lie in (0, 1]");
        }
        if !(unit(self.epsilon_start) && unit(self.epsilon_end)) {
            return bad("exploration rates must lie in [0, 1]");
        }
        Ok(())
    }
}

fn backup<T: Scalar>(table: &TransitionTable<T>, v: &[T], s: usize, a: usize) -> T {
    table
        .row(s, a)
        .map(|(n, p, r)| p * (r + table.gamma * v[n]))
        .sum()
}

/// Entropy-regularised value iteration; terminal states have value 0.
/// Returns the policy and the converged state values.
pub fn soft_value_iteration<T: Scalar>(
    table: &TransitionTable<T>,
    cfg: &TrainerConfig<T>,
) -> Result<(TabularPolicy<T>, Vec<T>), RlError> {
    cfg.validate()?;
    let (ns, na) = (table.num_states(), table.num_actions());
    let mut v = vec![T::zero(); ns];
    let mut next = vec![T::zero(); ns];
    let mut q = vec![T::zero(); na];
    let mut residual = T::infinity();
    for _ in 0..cfg.max_iter {
        residual = T::zero();
        for s in 0..ns {
            if table.terminal[s] {
                continue;
            }
            for (a, slot) in q.iter_mut().enumerate() {
                *slot = backup(table, &v, s, a);
            }
            next[s] = soft_max_value(&q, cfg.tau);
            residual = residual.max((next[s] - v[s]).abs());
        }
        std::mem::swap(&mut v, &mut next);
        if residual < cfg.tolerance {
            return Ok((greedy_softmax(table, &v, cfg.tau, TrainerMode::SoftVi.id(), 0), v));
        }
    }
    Err(RlError::NoConvergence { iterations: cfg.max_iter, residual: residual.to_f64_lossy() })
}

fn greedy_softmax<T: Scalar>(table: &TransitionTable<T>, v: &[T], tau: T, trainer: &str, seed: u64) -> TabularPolicy<T> {
    let na = table.num_actions();
    let mut qs = vec![T::zero(); table.num_states() * na];
    for s in 0..table.num_states() {
        if !table.terminal[s] {
            for a in 0..na {
                qs[s * na + a] = backup(table, v, s, a);
            }
        }
    }
    TabularPolicy::softmax(&qs, na, tau, trainer, seed)
}

/// Tabular Q-learning with epsilon-greedy exploration. Episodes start from
/// the table's initial distribution and are cut at its horizon; the returned
/// policy is the softmax of the learned values at temperature `tau`.
pub fn q_learning<T: Scalar, R: Rng + ?Sized>(
    table: &TransitionTable<T>,
    cfg: &TrainerConfig<T>,
    seed: u64,
    rng: &mut R,
) -> Result<TabularPolicy<T>, RlError> {
    cfg.validate()?;
    let na = table.num_actions();
    let mut q = vec![T::zero(); table.num_states() * na];
    let mut visits = vec![0u32; q.len()];
    let span = (cfg.episodes.max(2) - 1) as f64;
    for ep in 0..cfg.episodes {
        let frac = T::of(ep as f64 / span);
        let epsilon = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
        let mut s = table.sample_initial(rng);
        for _ in 0..table.horizon {
            if table.terminal[s] {
                break;
            }
            let row = &q[s * na..(s + 1) * na];
            let a = if T::of(rng.gen::<f64>()) < epsilon {
                rng.gen_range(0..na)
            } else {
                argmax(row)
            };
            let (n, r) = table.sample(s, a, rng);
            let future = if table.terminal[n] {
                T::zero()
            } else {
                q[n * na..(n + 1) * na].iter().copied().fold(T::neg_infinity(), T::max)
            };
            let k = s * na + a;
            visits[k] += 1;
            let step = (cfg.alpha / T::of((visits[k] as f64).powf(0.6))).max(cfg.alpha_min);
            q[k] = q[k] + step * (r + table.gamma * future - q[k]);
            s = n;
        }
    }
    Ok(TabularPolicy::softmax(&q, na, cfg.tau, TrainerMode::QLearning.id(), seed))
}

/// Index of the first maximum.
pub(crate) fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in row.iter().enumerate() {
        if *x > row[best] {
            best = i;
        }
    }
    best
}
