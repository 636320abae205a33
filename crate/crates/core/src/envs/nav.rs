//! Single-agent goal/hazard navigation. Hazards end the episode, vases do not.

use rand::{Rng, SeedableRng};

use super::grid::{Action, Cell, NavMap};
use super::tabular::Environment;
use super::EnvError;
use crate::seed::Rng as SeedRng;

pub const NAV_FEATURES: [&str; 3] = ["d_goal", "d_hazard", "d_vase"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NavState {
    pub agent: Cell,
}

#[derive(Debug, Clone)]
pub struct NavEnv {
    map: NavMap,
}

impl NavEnv {
    pub fn new(map: NavMap) -> Self {
        Self { map }
    }

    pub fn map(&self) -> &NavMap {
        &self.map
    }

    pub fn reset(&self, seed: u64) -> NavState {
        let mut rng = SeedRng::seed_from_u64(seed);
        NavState {
            agent: self.map.starts[rng.gen_range(0..self.map.starts.len())],
        }
    }

    pub fn step(&self, s: &NavState, action: Action) -> Result<NavState, EnvError> {
        if self.is_terminal(s) {
            return Err(EnvError::StepOnTerminal);
        }
        Ok(NavState {
            agent: self.map.layout.apply(s.agent, action),
        })
    }

    fn nearest(&self, c: Cell, targets: &[Cell]) -> f64 {
        targets
            .iter()
            .map(|&t| c.euclidean(t))
            .reduce(f64::min)
            .unwrap_or_else(|| self.map.layout.diagonal())
    }

    /// Reward of the non-temporal-logic reference policy: progress toward the
    /// goal plus a terminal bonus for the goal and penalty for a hazard.
    pub fn shaped_reward(&self, s: &NavState, next: &NavState) -> f64 {
        let progress = s.agent.euclidean(self.map.goal) - next.agent.euclidean(self.map.goal);
        let terminal = if next.agent == self.map.goal {
            1.0
        } else if self.map.hazards.contains(&next.agent) {
            -1.0
        } else {
            0.0
        };
        0.1 * progress + terminal
    }
}

impl Environment for NavEnv {
    type State = NavState;

    fn num_actions(&self) -> usize {
        Action::ALL.len()
    }

    fn feature_names(&self) -> &'static [&'static str] {
        &NAV_FEATURES
    }

    fn initial_states(&self) -> Vec<(NavState, f64)> {
        let mut starts = self.map.starts.clone();
        starts.dedup();
        let p = 1.0 / starts.len() as f64;
        starts.into_iter().map(|agent| (NavState { agent }, p)).collect()
    }

    fn is_terminal(&self, s: &NavState) -> bool {
        s.agent == self.map.goal || self.map.hazards.contains(&s.agent)
    }

    fn transitions(&self, s: &NavState, action: usize) -> Result<Vec<(NavState, f64)>, EnvError> {
        Ok(vec![(self.step(s, Action::from_index(action)?)?, 1.0)])
    }

    fn features(&self, s: &NavState) -> Vec<f64> {
        vec![
            s.agent.euclidean(self.map.goal),
            self.nearest(s.agent, &self.map.hazards),
            self.nearest(s.agent, &self.map.vases),
        ]
    }
}
