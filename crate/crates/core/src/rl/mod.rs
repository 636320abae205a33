//! Tabular trainers and replicate selection.

mod policy;
mod train;

pub use policy::{row_entropy, simplex_tolerance, TabularPolicy};
pub use train::{q_learning, soft_value_iteration, TrainerConfig, TrainerMode};

use serde::{Deserialize, Serialize};

use crate::metrics::{weighted_kl, StateSample};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RlError {
    #[error("invalid trainer configuration: {0}")]
    InvalidConfig(String),
    #[error("value iteration did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("state sample is empty")]
    EmptySample,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("policy text line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("no replicates to select from")]
    NoReplicates,
    #[error("selection by utility needs a target policy")]
    MissingTarget,
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    ByEntropy,
    ByUtility,
}

/// Mean action entropy over `states`.
pub fn policy_entropy<T: Scalar>(policy: &TabularPolicy<T>, states: &[usize]) -> Result<T, RlError> {
    if states.is_empty() {
        return Err(RlError::EmptySample);
    }
    let total: T = states.iter().map(|&s| row_entropy(policy.row(s))).sum();
    Ok(total / T::of(states.len() as f64))
}

/// Index of the preferred replicate; ties go to the lowest index.
pub fn select_replicate<T: Scalar>(
    policies: &[TabularPolicy<T>],
    sample: &StateSample<T>,
    mode: Selection,
    target: Option<&TabularPolicy<T>>,
    epsilon: T,
) -> Result<usize, RlError> {
    if policies.is_empty() {
        return Err(RlError::NoReplicates);
    }
    let score = |p: &TabularPolicy<T>| -> Result<T, RlError> {
        match mode {
            Selection::ByEntropy => policy_entropy(p, &sample.states),
            Selection::ByUtility => {
                let target = target.ok_or(RlError::MissingTarget)?;
                Ok(-weighted_kl(p, target, sample, epsilon)?)
            }
        }
    };
    let mut best = 0;
    let mut best_score = score(&policies[0])?;
    for (i, p) in policies.iter().enumerate().skip(1) {
        let s = score(p)?;
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(best)
}
