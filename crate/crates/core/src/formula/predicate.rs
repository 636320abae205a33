use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::FormulaError;
use crate::Scalar;

/// `ψ(s) := f(s) < c` over feature `feature` with threshold `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicPredicate<T> {
    pub index: usize,
    pub name: String,
    pub feature: usize,
    pub threshold: T,
}

impl<T: Scalar> AtomicPredicate<T> {
    /// `c - f(s)`.
    #[inline]
    pub fn robustness(&self, features: &[T]) -> T {
        self.threshold - features[self.feature]
    }

    #[inline]
    pub fn holds(&self, features: &[T]) -> bool {
        features[self.feature] < self.threshold
    }
}

/// The vocabulary Ψ. Indices are `0..len` in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateSet<T> {
    predicates: Vec<AtomicPredicate<T>>,
}

impl<T: Scalar> PredicateSet<T> {
    pub fn new(predicates: Vec<AtomicPredicate<T>>) -> Result<Self, FormulaError> {
        let mut names = HashSet::new();
        for (i, p) in predicates.iter().enumerate() {
            if p.index != i {
                return Err(FormulaError::InvalidPredicates(format!(
                    "predicate `{}` has index {} at position {}",
                    p.name, p.index, i
                )));
            }
            if !p.threshold.is_finite() {
                return Err(FormulaError::InvalidPredicates(format!(
                    "predicate `{}` has a non-finite threshold",
                    p.name
                )));
            }
            if p.name.is_empty() || !p.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(FormulaError::InvalidPredicates(format!(
                    "predicate name `{}` must be a nonempty identifier",
                    p.name
                )));
            }
            if !names.insert(p.name.clone()) {
                return Err(FormulaError::InvalidPredicates(format!(
                    "duplicate predicate name `{}`",
                    p.name
                )));
            }
        }
        Ok(Self { predicates })
    }

    /// Builds `psi0..psiN` from `(feature, threshold)` pairs.
    pub fn from_thresholds(specs: &[(usize, T)]) -> Result<Self, FormulaError> {
        Self::new(
            specs
                .iter()
                .enumerate()
                .map(|(i, &(feature, threshold))| AtomicPredicate {
                    index: i,
                    name: format!("psi{i}"),
                    feature,
                    threshold,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    pub fn get(&self, index: usize) -> &AtomicPredicate<T> {
        &self.predicates[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &AtomicPredicate<T>> {
        self.predicates.iter()
    }

    pub fn names(&self) -> Vec<&str> {
        self.predicates.iter().map(|p| p.name.as_str()).collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    /// Largest feature index referenced, if any.
    pub fn max_feature(&self) -> Option<usize> {
        self.predicates.iter().map(|p| p.feature).max()
    }
}
