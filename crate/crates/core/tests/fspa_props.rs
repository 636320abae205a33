use ltl_explain::formula::{enumerate_all, PredicateSet};
use ltl_explain::fspa::{AutomatonState, Fspa};
use std::sync::OnceLock;

use ltl_explain::formula::CanonicalExplanation;
use proptest::prelude::*;

fn all(n: usize) -> &'static [CanonicalExplanation] {
    static FOUR: OnceLock<Vec<CanonicalExplanation>> = OnceLock::new();
    static THREE: OnceLock<Vec<CanonicalExplanation>> = OnceLock::new();
    let cell = if n == 4 { &FOUR } else { &THREE };
    cell.get_or_init(|| enumerate_all(n, 6).unwrap().into_iter().collect())
}

fn preds() -> PredicateSet<f64> {
    PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.5), (2, 0.5), (3, 2.0)]).unwrap()
}

proptest! {
    #[test]
    fn exactly_one_initial_guard_fires(i in 0usize..1408, x in prop::collection::vec(-1.0f64..4.0, 4)) {
        let fspa = Fspa::build(&all(4)[i], &preds(), 1000.0);
        let q0 = AutomatonState::Initial;
        let firing = AutomatonState::ALL
            .iter()
            .filter(|&&to| fspa.guard_robustness(q0, to, &x).unwrap() > 0.0)
            .count();
        prop_assert_eq!(firing, 1);
        let next = fspa.step(q0, &x);
        prop_assert!(fspa.guard_robustness(q0, next, &x).unwrap() > 0.0);
    }

    #[test]
    fn absorbing_states_stay(i in 0usize..96, run in prop::collection::vec(prop::collection::vec(-1.0f64..4.0, 3), 1..8)) {
        let set = PredicateSet::from_thresholds(&[(0, 1.0), (1, 1.5), (2, 0.5)]).unwrap();
        let fspa = Fspa::build(&all(3)[i], &set, 1000.0);
        let mut q = fspa.initial();
        let mut absorbed: Option<AutomatonState> = None;
        for x in &run {
            q = fspa.step(q, x);
            if let Some(a) = absorbed {
                prop_assert_eq!(q, a);
            } else if q.is_absorbing() {
                absorbed = Some(q);
            }
        }
        prop_assert_eq!(fspa.guard_robustness(AutomatonState::Trap, AutomatonState::Trap, &run[0]).unwrap(), 1000.0);
        prop_assert!(fspa.guard_robustness(AutomatonState::Trap, AutomatonState::Initial, &run[0]).is_err());
    }
}
