#![allow(dead_code)]

use ltl_explain::envs::{enumerate_states, NavEnv, NavMap, NavState, TabularEnv};
use ltl_explain::formula::{AtomicPredicate, PredicateSet};

pub const NAV: &str = "
    S . . . .
    . H . V .
    . . . . .
    . V . H .
    . . . . G";

pub fn nav(text: &str) -> TabularEnv<NavState> {
    enumerate_states(&NavEnv::new(NavMap::parse(text).unwrap()), 10_000).unwrap()
}

/// goal, hazard and vase distances below 0.5 (on the cell; avoids robustness ties on the integer grid).
pub fn nav_predicates() -> PredicateSet<f64> {
    let p = |index, name: &str, feature| AtomicPredicate { index, name: name.into(), feature, threshold: 0.5 };
    PredicateSet::new(vec![p(0, "psi_goal", 0), p(1, "psi_hazard", 1), p(2, "psi_vase", 2)]).unwrap()
}
