//! Three-state predicate automaton for `F(φ_F) ∧ G(φ_G)`.
//!
//! ```text
//!        φ_G ∧ ¬φ_F
//!          ┌──┐
//!          ▼  │   φ_G ∧ φ_F
//!          q0 ─────────────▶ q_acc ⟲ ⊤
//!          │
//!          │ ¬φ_G
//!          ▼
//!        q_trap ⟲ ⊤
//! ```
//!
//! A guard is satisfied when its robustness is strictly positive. Ties at
//! zero are resolved toward staying in `q0` on the task part and toward the
//! trap on the constraint part.

use serde::{Deserialize, Serialize};

use crate::formula::{CanonicalExplanation, Formula, PredicateSet};
use crate::Scalar;

/// Robustness reported for `⊤` guards.
pub const DEFAULT_RHO_MAX: f64 = 1.0e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AutomatonState {
    Initial,
    Accept,
    Trap,
}

impl AutomatonState {
    pub const ALL: [AutomatonState; 3] =
        [AutomatonState::Initial, AutomatonState::Accept, AutomatonState::Trap];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_trap(self) -> bool {
        self == AutomatonState::Trap
    }

    pub fn is_final(self) -> bool {
        self == AutomatonState::Accept
    }

    pub fn is_absorbing(self) -> bool {
        self != AutomatonState::Initial
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Guard {
    Always,
    Formula(Formula),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: AutomatonState,
    pub to: AutomatonState,
    pub guard: Guard,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FspaError {
    #[error("no edge from {0:?} to {1:?}")]
    NoSuchEdge(AutomatonState, AutomatonState),
    #[error("{0:?} is a trap state")]
    TrapState(AutomatonState),
}

#[derive(Debug, Clone)]
pub struct Fspa<T> {
    predicates: PredicateSet<T>,
    task: Formula,
    constraint: Formula,
    edges: Vec<Edge>,
    rho_max: T,
}

impl<T: Scalar> Fspa<T> {
    pub fn build(explanation: &CanonicalExplanation, predicates: &PredicateSet<T>, rho_max: T) -> Self {
        use AutomatonState::*;
        let task = explanation.eventually.to_formula();
        let constraint = explanation.globally.to_formula();
        let edges = vec![
            Edge {
                from: Initial,
                to: Initial,
                guard: Guard::Formula(constraint.clone().and(task.clone().not())),
            },
            Edge {
                from: Initial,
                to: Accept,
                guard: Guard::Formula(constraint.clone().and(task.clone())),
            },
            Edge {
                from: Initial,
                to: Trap,
                guard: Guard::Formula(constraint.clone().not()),
            },
            Edge { from: Accept, to: Accept, guard: Guard::Always },
            Edge { from: Trap, to: Trap, guard: Guard::Always },
        ];
        Self {
            predicates: predicates.clone(),
            task,
            constraint,
            edges,
            rho_max,
        }
    }

    pub fn initial(&self) -> AutomatonState {
        AutomatonState::Initial
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn guard(&self, from: AutomatonState, to: AutomatonState) -> Option<&Guard> {
        self.edges
            .iter()
            .find(|e| e.from == from && e.to == to)
            .map(|e| &e.guard)
    }

    /// `(ρ(φ_F), ρ(φ_G))` at one state.
    pub fn part_robustness(&self, features: &[T]) -> (T, T) {
        (
            self.task.robustness(&self.predicates, features),
            self.constraint.robustness(&self.predicates, features),
        )
    }

    pub fn guard_robustness(
        &self,
        from: AutomatonState,
        to: AutomatonState,
        features: &[T],
    ) -> Result<T, FspaError> {
        match self.guard(from, to) {
            None => Err(FspaError::NoSuchEdge(from, to)),
            Some(Guard::Always) => Ok(self.rho_max),
            Some(Guard::Formula(f)) => Ok(f.robustness(&self.predicates, features)),
        }
    }

    /// Successor of `q` after reading `features`.
    pub fn step(&self, q: AutomatonState, features: &[T]) -> AutomatonState {
        match q {
            AutomatonState::Initial => {
                let (task, constraint) = self.part_robustness(features);
                if constraint <= T::zero() {
                    AutomatonState::Trap
                } else if task > T::zero() {
                    AutomatonState::Accept
                } else {
                    AutomatonState::Initial
                }
            }
            absorbing => absorbing,
        }
    }

    /// The non-trap neighbour of `q` whose guard is most robust; ties go to
    /// the earlier state (`q0` before `q_acc`).
    pub fn best_nontrap_neighbor(
        &self,
        q: AutomatonState,
        features: &[T],
    ) -> Result<AutomatonState, FspaError> {
        if q.is_trap() {
            return Err(FspaError::TrapState(q));
        }
        let mut best: Option<(AutomatonState, T)> = None;
        for e in self.edges.iter().filter(|e| e.from == q && !e.to.is_trap()) {
            let r = self.guard_robustness(q, e.to, features)?;
            match best {
                Some((b, br)) if br > r || (br == r && b <= e.to) => {}
                _ => best = Some((e.to, r)),
            }
        }
        Ok(best.expect("every non-trap state has a non-trap successor").0)
    }

    pub fn rho_max(&self) -> T {
        self.rho_max
    }

    pub fn predicates(&self) -> &PredicateSet<T> {
        &self.predicates
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse_explanation, enumerate_all, robustness_trajectory, TemporalOp};
    use rand::{Rng, SeedableRng};
    use AutomatonState::*;

    fn two() -> PredicateSet<f64> {
        PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.0)]).unwrap()
    }

    fn fspa(text: &str, set: &PredicateSet<f64>) -> Fspa<f64> {
        let names = set.names();
        Fspa::build(&parse_explanation(text, &names).unwrap(), set, DEFAULT_RHO_MAX)
    }

    #[test]
    fn template_guards() {
        let set = two();
        let a = fspa("F(psi0) & G(!psi1)", &set);
        let g = |from, to| match a.guard(from, to).unwrap() {
            Guard::Formula(f) => f.clone(),
            Guard::Always => panic!("expected a formula"),
        };
        let p0 = Formula::atom(0);
        let p1 = Formula::atom(1);
        // Features (f0, f1) for which the guard must hold / fail.
        let check = |f: &Formula, feats: [f64; 2], want: bool| {
            assert_eq!(f.holds(&set, &feats), want, "{f:?} at {feats:?}");
        };
        let acc = g(Initial, Accept);
        let trap = g(Initial, Trap);
        let stay = g(Initial, Initial);
        for feats in [[0.0, 0.0], [0.0, 2.0], [2.0, 0.0], [2.0, 2.0]] {
            let (x0, x1) = (p0.holds(&set, &feats), p1.holds(&set, &feats));
            check(&acc, feats, !x1 && x0);
            check(&trap, feats, x1);
            check(&stay, feats, !x1 && !x0);
        }
        assert!(a.guard(Accept, Initial).is_none());
        assert_eq!(a.guard(Trap, Trap), Some(&Guard::Always));
    }

    #[test]
    fn trap_guard_negates_constraint() {
        let set = PredicateSet::from_thresholds(&[(0, 1.0), (1, 3.0), (2, 4.0)]).unwrap();
        let a = fspa("F(psi0) & G(!psi1 & !psi2)", &set);
        // ¬(¬ψo ∧ ¬ψw) fires exactly when ψo ∨ ψw does.
        let either = Formula::atom(1).or(Formula::atom(2));
        let Some(Guard::Formula(trap)) = a.guard(Initial, Trap) else { panic!() };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..6.0)).collect();
            assert_eq!(trap.robustness(&set, &x), either.robustness(&set, &x));
        }
    }

    #[test]
    fn stepping() {
        let set = two();
        let a = fspa("F(psi0) & G(!psi1)", &set);
        assert_eq!(a.step(Trap, &[0.0, 0.0]), Trap);
        assert_eq!(a.step(Accept, &[5.0, 0.0]), Accept);
        assert_eq!(a.step(Initial, &[0.0, 2.0]), Accept);
        assert_eq!(a.step(Initial, &[2.0, 2.0]), Initial);
        // ρ(φ_G) = f1 - 1 = 0 exactly routes to the trap.
        assert_eq!(a.step(Initial, &[0.0, 1.0]), Trap);
        // ρ(φ_F) = 0 exactly does not accept.
        assert_eq!(a.step(Initial, &[1.0, 2.0]), Initial);
    }

    #[test]
    fn guard_robustness_values() {
        let set = two();
        let a = fspa("F(psi0) & G(!psi1)", &set);
        assert_eq!(a.guard_robustness(Initial, Trap, &[0.0, 0.4]).unwrap(), 0.6);
        assert_eq!(a.guard_robustness(Accept, Accept, &[0.0, 0.4]).unwrap(), DEFAULT_RHO_MAX);
        // ρ(φ_G) = 0.2, ρ(φ_F) = -0.1
        let r = a.guard_robustness(Initial, Accept, &[1.1, 1.2]).unwrap();
        assert!((r + 0.1).abs() < 1e-12);
        assert_eq!(
            a.guard_robustness(Accept, Initial, &[0.0, 0.0]),
            Err(FspaError::NoSuchEdge(Accept, Initial))
        );
    }

    #[test]
    fn best_neighbor() {
        let set = two();
        let a = fspa("F(psi0) & G(!psi1)", &set);
        // stay guard = min(f1-1, f0-1), accept guard = min(f1-1, 1-f0)
        // f0 = 1.3, f1 = 2 -> stay 0.3, accept -0.3
        assert_eq!(a.best_nontrap_neighbor(Initial, &[1.3, 2.0]).unwrap(), Initial);
        // f0 = 0.5, f1 = 1.3 -> stay min(0.3,-0.5), accept min(0.3, 0.5)=0.3
        assert_eq!(a.best_nontrap_neighbor(Initial, &[0.5, 1.3]).unwrap(), Accept);
        // f0 = 1.0 -> both guards equal, tie goes to q0
        assert_eq!(a.best_nontrap_neighbor(Initial, &[1.0, 1.3]).unwrap(), Initial);
        assert_eq!(a.best_nontrap_neighbor(Accept, &[0.0, 0.0]).unwrap(), Accept);
        assert!(a.best_nontrap_neighbor(Trap, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn exactly_one_initial_guard_fires() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let set = PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.5), (2, 0.5), (3, 2.0)]).unwrap();
        let explanations: Vec<_> = enumerate_all(4, 6).unwrap().into_iter().collect();
        for _ in 0..10_000 {
            let c = &explanations[rng.gen_range(0..explanations.len())];
            let a = Fspa::build(c, &set, DEFAULT_RHO_MAX);
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..4.0)).collect();
            let fired: Vec<_> = AutomatonState::ALL
                .iter()
                .filter(|&&to| a.guard_robustness(Initial, to, &x).unwrap() > 0.0)
                .copied()
                .collect();
            assert_eq!(fired.len(), 1);
            assert_eq!(a.step(Initial, &x), fired[0]);
        }
    }

    #[test]
    fn runs_agree_with_trajectory_semantics() {
        // Features from a coarse grid so ties at zero are exercised too.
        let set = two();
        let values = [0.0, 1.0, 2.0];
        let grid: Vec<[f64; 2]> = values
            .iter()
            .flat_map(|&a| values.iter().map(move |&b| [a, b]))
            .collect();
        for text in ["F(psi0) & G(!psi1)", "F(!psi0) & G(psi1)", "F(psi1) & G(psi0)"] {
            let a = fspa(text, &set);
            for len in 1..=4usize {
                for code in 0..grid.len().pow(len as u32) {
                    let mut c = code;
                    let seq: Vec<[f64; 2]> = (0..len)
                        .map(|_| {
                            let x = grid[c % grid.len()];
                            c /= grid.len();
                            x
                        })
                        .collect();
                    let mut q = Initial;
                    for x in &seq {
                        q = a.step(q, x);
                    }
                    let parts: Vec<(f64, f64)> = seq.iter().map(|x| a.part_robustness(x)).collect();
                    let expected = (0..len).any(|k| {
                        let g: Vec<f64> = parts[..=k].iter().map(|p| p.1).collect();
                        parts[k].0 > 0.0
                            && robustness_trajectory(TemporalOp::Globally, &g).unwrap() > 0.0
                    });
                    assert_eq!(q == Accept, expected, "{text} on {seq:?}");
                    if q == Trap {
                        assert_eq!(a.step(q, &[0.0, 2.0]), Trap);
                    }
                }
            }
        }
    }
}
