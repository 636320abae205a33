use super::canonical::Literal;
use super::{FormulaError, PredicateSet};
use crate::Scalar;

/// Propositional formula over atomic predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Literal(Literal),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(predicate: usize) -> Self {
        Formula::Literal(Literal::new(predicate, false))
    }

    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Self {
        Formula::And(vec![self, other])
    }

    pub fn or(self, other: Formula) -> Self {
        Formula::Or(vec![self, other])
    }

    /// Quantitative semantics at one state: `c - f(s)` for a predicate,
    /// sign flip for negation, `min` for conjunction and `max` for disjunction.
    pub fn robustness<T: Scalar>(&self, predicates: &PredicateSet<T>, features: &[T]) -> T {
        match self {
            Formula::Literal(l) => {
                let r = predicates.get(l.predicate).robustness(features);
                if l.negated {
                    -r
                } else {
                    r
                }
            }
            Formula::Not(inner) => -inner.robustness(predicates, features),
            Formula::And(args) => args
                .iter()
                .map(|a| a.robustness(predicates, features))
                .fold(T::infinity(), T::min),
            Formula::Or(args) => args
                .iter()
                .map(|a| a.robustness(predicates, features))
                .fold(T::neg_infinity(), T::max),
        }
    }

    /// Boolean semantics with `ψ` true iff `f(s) < c`.
    pub fn holds<T: Scalar>(&self, predicates: &PredicateSet<T>, features: &[T]) -> bool {
        match self {
            Formula::Literal(l) => predicates.get(l.predicate).holds(features) != l.negated,
            Formula::Not(inner) => !inner.holds(predicates, features),
            Formula::And(args) => args.iter().all(|a| a.holds(predicates, features)),
            Formula::Or(args) => args.iter().any(|a| a.holds(predicates, features)),
        }
    }

    /// Predicate indices referenced by the formula, with repetition.
    pub fn predicates(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            Formula::Literal(l) => out.push(l.predicate),
            Formula::Not(inner) => inner.collect(out),
            Formula::And(args) | Formula::Or(args) => args.iter().for_each(|a| a.collect(out)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalOp {
    Eventually,
    Globally,
}

/// Robustness of `F` (max) or `G` (min) over per-state robustness values.
pub fn robustness_trajectory<T: Scalar>(op: TemporalOp, per_state: &[T]) -> Result<T, FormulaError> {
    let (first, rest) = per_state.split_first().ok_or(FormulaError::EmptyTrajectory)?;
    Ok(rest.iter().fold(*first, |acc, &x| match op {
        TemporalOp::Eventually => acc.max(x),
        TemporalOp::Globally => acc.min(x),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one() -> PredicateSet<f64> {
        PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.0)]).unwrap()
    }

    #[test]
    fn state_rules() {
        let set = one();
        let lit = Formula::atom(0);
        assert!((lit.robustness(&set, &[0.3, 0.0]) - 0.7).abs() < 1e-15);
        assert!((lit.clone().not().robustness(&set, &[0.3, 0.0]) + 0.7).abs() < 1e-15);
        // rho(a) = 0.2, rho(b) = -0.3
        let both = Formula::atom(0).and(Formula::atom(1));
        assert_eq!(both.robustness(&set, &[0.8, 1.3]), 1.0 - 1.3);
        let either = Formula::atom(0).or(Formula::atom(1));
        assert_eq!(either.robustness(&set, &[0.8, 1.3]), 1.0 - 0.8);
    }

    #[test]
    fn trajectory_rules() {
        let xs = [-1.0, 0.5, 0.2];
        assert_eq!(robustness_trajectory(TemporalOp::Eventually, &xs).unwrap(), 0.5);
        assert_eq!(robustness_trajectory(TemporalOp::Globally, &xs).unwrap(), -1.0);
        assert_eq!(robustness_trajectory(TemporalOp::Eventually, &[0.0]).unwrap(), 0.0);
        assert_eq!(
            robustness_trajectory::<f64>(TemporalOp::Globally, &[]),
            Err(FormulaError::EmptyTrajectory)
        );
    }

    #[test]
    fn de_morgan_is_exact() {
        let set = one();
        let lhs = Formula::atom(0).and(Formula::atom(1)).not();
        let rhs = Formula::atom(0).not().or(Formula::atom(1).not());
        for &(a, b) in &[(0.1, 2.0), (1.0, 1.0), (-3.5, 0.25), (7.0, -1.0)] {
            assert_eq!(lhs.robustness(&set, &[a, b]), rhs.robustness(&set, &[a, b]));
        }
    }

    #[test]
    fn works_in_f32() {
        let set: PredicateSet<f32> = PredicateSet::from_thresholds(&[(0, 1.5)]).unwrap();
        assert_eq!(Formula::atom(0).robustness(&set, &[0.5f32]), 1.0f32);
    }
}
