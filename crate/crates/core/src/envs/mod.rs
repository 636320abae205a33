//! Discrete surrogate environments and their exhaustive tabular form.

mod ctf;
mod grid;
mod nav;
mod tabular;

pub use ctf::{CtfEnv, CtfState, CTF_FEATURES, DEFAULT_CHASE_RADIUS, DEFAULT_KILL_PROBABILITY};
pub use grid::{Action, Cell, GridMap, MapKind, NavMap};
pub use nav::{NavEnv, NavState, NAV_FEATURES};
pub use tabular::{enumerate_states, EnvModel, Environment, TabularEnv, DEFAULT_STATE_CAP};
pub(crate) use tabular::sample_index;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnvError {
    #[error("map parse error at line {line}: {reason}")]
    MapParse { line: usize, reason: String },
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("cannot step from a terminal state")]
    StepOnTerminal,
    #[error("state space exceeds the cap of {cap} states")]
    StateSpaceTooLarge { cap: usize },
    #[error("action index {0} out of range")]
    BadAction(usize),
}
