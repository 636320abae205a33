//! Policy similarity: non-trap state samples, KL divergence, normalized
//! entropy weights and the weighted-KL utility.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fspa::AutomatonState;
use crate::product::{ProductState, TransitionTable};
use crate::rl::{row_entropy, TabularPolicy};
use crate::Scalar;

pub const DEFAULT_SAMPLE_SIZE: usize = 256;
pub const DEFAULT_KL_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricConfig<T> {
    /// Requested `|B_NT|`; the whole non-trap set is used when smaller.
    pub sample_size: usize,
    pub epsilon: T,
    /// Entropy weights; `false` sets every weight to one.
    pub weights: bool,
}

impl<T: Scalar> Default for MetricConfig<T> {
    fn default() -> Self {
        Self { sample_size: DEFAULT_SAMPLE_SIZE, epsilon: T::of(DEFAULT_KL_EPSILON), weights: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no reachable non-trap states to sample")]
    NoNontrapStates,
    #[error("sample size must be positive")]
    EmptySample,
    #[error("distributions have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("state {state} is outside a policy over {states} states")]
    CoverageGap { state: usize, states: usize },
}

/// The sampled states `B_NT` with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSample<T> {
    pub states: Vec<usize>,
    pub weights: Vec<T>,
    pub seed: u64,
    /// Set when the target is uniform on every sampled state and the weights
    /// fell back to `1 / |B_NT|`.
    pub degenerate: bool,
}

impl<T: Scalar> StateSample<T> {
    /// Weights from the target's normalized entropies, or all ones when
    /// `weighted` is false.
    pub fn new(states: Vec<usize>, target: &TabularPolicy<T>, weighted: bool, seed: u64) -> Result<Self, MetricsError> {
        if states.is_empty() {
            return Err(MetricsError::EmptySample);
        }
        check_coverage(target, &states)?;
        let (weights, degenerate) = if weighted {
            weights(target, &states)
        } else {
            (vec![T::one(); states.len()], false)
        };
        Ok(Self { states, weights, seed, degenerate })
    }
}

fn check_coverage<T: Scalar>(policy: &TabularPolicy<T>, states: &[usize]) -> Result<(), MetricsError> {
    match states.iter().find(|&&s| s >= policy.num_states()) {
        Some(&state) => Err(MetricsError::CoverageGap { state, states: policy.num_states() }),
        None => Ok(()),
    }
}

/// Reachable product states that are neither trap nor terminal, in index order.
pub fn nontrap_states<T: Scalar>(table: &TransitionTable<T>) -> Vec<usize> {
    table
        .reachable()
        .into_iter()
        .filter(|&s| ProductState::from_index(s).automaton != AutomatonState::Trap && !table.terminal[s])
        .collect()
}

/// `n` states drawn without replacement from [`nontrap_states`], or with
/// replacement when fewer exist; sorted by index.
pub fn sample_nontrap<T: Scalar, R: Rng + ?Sized>(
    table: &TransitionTable<T>,
    n: usize,
    rng: &mut R,
) -> Result<Vec<usize>, MetricsError> {
    sample_states(&nontrap_states(table), n, rng)
}

/// `n` members of `pool`, without replacement when possible; sorted.
pub fn sample_states<R: Rng + ?Sized>(pool: &[usize], n: usize, rng: &mut R) -> Result<Vec<usize>, MetricsError> {
    if n == 0 {
        return Err(MetricsError::EmptySample);
    }
    if pool.is_empty() {
        return Err(MetricsError::NoNontrapStates);
    }
    let mut out: Vec<usize> = if n <= pool.len() {
        index::sample(rng, pool.len(), n).into_iter().map(|i| pool[i]).collect()
    } else {
        (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect()
    };
    out.sort_unstable();
    Ok(out)
}

/// `sum p log(p / q)` after clamping both rows to `[epsilon, 1]` and renormalizing.
pub fn kl<T: Scalar>(p: &[T], q: &[T], epsilon: T) -> Result<T, MetricsError> {
    if p.len() != q.len() {
        return Err(MetricsError::LengthMismatch(p.len(), q.len()));
    }
    let clamp = |xs: &[T]| -> Vec<T> {
        let c: Vec<T> = xs.iter().map(|&x| x.max(epsilon).min(T::one())).collect();
        let total: T = c.iter().copied().sum();
        c.into_iter().map(|x| x / total).collect()
    };
    let (p, q) = (clamp(p), clamp(q));
    Ok(p.iter()
        .zip(&q)
        .map(|(&a, &b)| if a > T::zero() { a * (a / b).ln() } else { T::zero() })
        .sum())
}

/// Mean of per-dimension divergences for factored action spaces.
pub fn mean_kl<T: Scalar>(pairs: &[(&[T], &[T])], epsilon: T) -> Result<T, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let mut total = T::zero();
    for (p, q) in pairs {
        total = total + kl(p, q, epsilon)?;
    }
    Ok(total / T::of(pairs.len() as f64))
}

/// `1 - H(p) / h_max`, clamped to `[0, 1]`.
pub fn normalized_entropy<T: Scalar>(p: &[T], h_max: T) -> T {
    (T::one() - row_entropy(p) / h_max).max(T::zero()).min(T::one())
}

/// Normalized normalized-entropies of the target on `states`, with a flag set
/// when every value is zero and uniform weights were used instead.
pub fn weights<T: Scalar>(target: &TabularPolicy<T>, states: &[usize]) -> (Vec<T>, bool) {
    let h_max = T::of(target.num_actions() as f64).ln();
    let raw: Vec<T> = states
        .iter()
        .map(|&s| if h_max > T::zero() { normalized_entropy(target.row(s), h_max) } else { T::one() })
        .collect();
    let total: T = raw.iter().copied().sum();
    if total > T::zero() {
        (raw.into_iter().map(|x| x / total).collect(), false)
    } else {
        let w = T::one() / T::of(states.len() as f64);
        (vec![w; states.len()], true)
    }
}

/// `sum_i w_i KL(candidate(s_i) || target(s_i))`.
pub fn weighted_kl<T: Scalar>(
    candidate: &TabularPolicy<T>,
    target: &TabularPolicy<T>,
    sample: &StateSample<T>,
    epsilon: T,
) -> Result<T, MetricsError> {
    check_coverage(candidate, &sample.states)?;
    check_coverage(target, &sample.states)?;
    let mut total = T::zero();
    for (&s, &w) in sample.states.iter().zip(&sample.weights) {
        total = total + w * kl(candidate.row(s), target.row(s), epsilon)?;
    }
    Ok(total)
}

/// Evaluation result for one explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRecord<T> {
    pub key: String,
    pub wkl: Option<T>,
    pub utility: Option<T>,
    pub mean_return: T,
    pub filtered: bool,
    pub replicates: usize,
    pub trainer: String,
    pub seed: u64,
}

impl<T: Scalar> UtilityRecord<T> {
    pub fn scored(key: String, wkl: T, mean_return: T, replicates: usize, trainer: &str, seed: u64) -> Self {
        Self {
            key,
            wkl: Some(wkl),
            utility: Some(-wkl),
            mean_return,
            filtered: false,
            replicates,
            trainer: trainer.into(),
            seed,
        }
    }

    pub fn filtered(key: String, mean_return: T, replicates: usize, trainer: &str, seed: u64) -> Self {
        Self {
            key,
            wkl: None,
            utility: None,
            mean_return,
            filtered: true,
            replicates,
            trainer: trainer.into(),
            seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    fn policy(rows: &[&[f64]]) -> TabularPolicy<f64> {
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        TabularPolicy::new(rows[0].len(), flat, "test", 0, 1.0).unwrap()
    }

    #[test]
    fn kl_closed_forms() {
        assert_eq!(kl(&[0.3, 0.7], &[0.3, 0.7], 1e-8).unwrap(), 0.0);
        let d = kl(&[1.0, 0.0], &[0.5, 0.5], 1e-8).unwrap();
        assert!((d - 2f64.ln()).abs() < 1e-6);
        assert!(kl(&[1.0], &[0.5, 0.5], 1e-8).is_err());
        assert!(kl::<f64>(&[0.0, 1.0], &[1.0, 0.0], 1e-8).unwrap().is_finite());
    }

    #[test]
    fn normalized_entropy_ends() {
        let h = 4f64.ln();
        assert!(normalized_entropy(&[0.25; 4], h).abs() < 1e-12);
        assert_eq!(normalized_entropy(&[0.0, 1.0, 0.0, 0.0], h), 1.0);
    }

    #[test]
    fn weight_cases() {
        let t = policy(&[&[1.0, 0.0], &[0.5, 0.5], &[0.0, 1.0]]);
        let (w, degenerate) = weights(&t, &[0, 2]);
        assert_eq!(w, vec![0.5, 0.5]);
        assert!(!degenerate);
        let (w, _) = weights(&t, &[0, 1]);
        assert!(w[0] > w[1]);
        let (w, degenerate) = weights(&t, &[1, 1]);
        assert_eq!(w, vec![0.5, 0.5]);
        assert!(degenerate);
        let s = StateSample::new(vec![0, 1], &t, false, 0).unwrap();
        assert_eq!(s.weights, vec![1.0, 1.0]);
        assert!(StateSample::new(vec![7], &t, true, 0).is_err());
    }

    #[test]
    fn utility_is_negated_wkl() {
        let t = policy(&[&[0.9, 0.1], &[0.2, 0.8]]);
        let c = policy(&[&[0.5, 0.5], &[0.2, 0.8]]);
        let s = StateSample::new(vec![0, 1], &t, true, 0).unwrap();
        assert_eq!(weighted_kl(&t, &t, &s, 1e-8).unwrap(), 0.0);
        let w = weighted_kl(&c, &t, &s, 1e-8).unwrap();
        let r = UtilityRecord::scored("k".into(), w, 1.0, 1, "soft-vi", 0);
        assert_eq!(r.utility, Some(-w));
        assert!(w > 0.0);
    }

    #[test]
    fn sampling_excludes_traps_and_terminals() {
        // Product indices: 0 = (0,q0) live, 1 = (0,acc), 2 = (0,trap), 3 = (1,q0) live.
        let table = TransitionTable::from_rows(
            1,
            0.9,
            10,
            vec![vec![vec![(3, 0.5, 0.0), (2, 0.5, -1.0)]], vec![], vec![], vec![vec![(1, 1.0, 1.0)]]],
            vec![(0, 1.0)],
        );
        assert_eq!(nontrap_states(&table), vec![0, 3]);
        let all = sample_nontrap(&table, 2, &mut rng_from_seed(1)).unwrap();
        assert_eq!(all, vec![0, 3]);
        let more = sample_nontrap(&table, 5, &mut rng_from_seed(1)).unwrap();
        assert_eq!(more.len(), 5);
        assert_eq!(more, sample_nontrap(&table, 5, &mut rng_from_seed(1)).unwrap());
        assert!(sample_nontrap(&table, 0, &mut rng_from_seed(1)).is_err());
    }
}
