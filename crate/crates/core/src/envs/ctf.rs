//! Capture-the-flag against a scripted red defender.
//!
//! Each step the blue agent moves first. Entering the red flag cell captures
//! it and ends the episode. Otherwise red moves: toward blue while blue is
//! within `chase_radius` of red territory, else toward the border cell level
//! with blue. Red entering the blue flag captures it. If both agents are then
//! within Chebyshev distance 1, the agent standing in the other's territory
//! is at risk: with blue on blue ground red dies with `kill_probability`,
//! otherwise blue does.

use rand::{Rng, SeedableRng};

use super::grid::{Action, Cell, GridMap};
use super::tabular::Environment;
use super::EnvError;
use crate::seed::Rng as SeedRng;

pub const CTF_FEATURES: [&str; 4] = ["d_ra_bf", "d_ba_rf", "d_ba_ra", "d_ba_bt"];

pub const DEFAULT_KILL_PROBABILITY: f64 = 0.75;
pub const DEFAULT_CHASE_RADIUS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtfState {
    pub blue: Cell,
    pub red: Cell,
    pub blue_alive: bool,
    pub red_alive: bool,
    /// Blue holds the red flag.
    pub blue_captured: bool,
    /// Red holds the blue flag.
    pub red_captured: bool,
}

impl CtfState {
    pub fn new(blue: Cell, red: Cell) -> Self {
        Self {
            blue,
            red,
            blue_alive: true,
            red_alive: true,
            blue_captured: false,
            red_captured: false,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.blue_captured || self.red_captured || !self.blue_alive || !self.red_alive
    }
}

#[derive(Debug, Clone)]
pub struct CtfEnv {
    map: GridMap,
    kill_probability: f64,
    chase_radius: f64,
    to_blue: Vec<f64>,
    to_red: Vec<f64>,
    border: Vec<Cell>,
}

impl CtfEnv {
    pub fn new(map: GridMap) -> Self {
        let to_blue = map.layout.cells().map(|c| map.distance_to_territory(c, true)).collect();
        let to_red = map.layout.cells().map(|c| map.distance_to_territory(c, false)).collect();
        let border = map.red_border();
        Self {
            map,
            kill_probability: DEFAULT_KILL_PROBABILITY,
            chase_radius: DEFAULT_CHASE_RADIUS,
            to_blue,
            to_red,
            border,
        }
    }

    pub fn with_kill_probability(mut self, p: f64) -> Self {
        assert!((0.0..=1.0).contains(&p), "kill probability {p} outside [0, 1]");
        self.kill_probability = p;
        self
    }

    pub fn with_chase_radius(mut self, r: f64) -> Self {
        self.chase_radius = r;
        self
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    fn cell_index(&self, c: Cell) -> usize {
        c.row * self.map.layout.width + c.col
    }

    /// Start state drawn uniformly from the start lists, determined by `seed`.
    pub fn reset(&self, seed: u64) -> CtfState {
        let mut rng = SeedRng::seed_from_u64(seed);
        let starts = self.start_pairs();
        let (b, r) = starts[rng.gen_range(0..starts.len())];
        CtfState::new(b, r)
    }

    fn start_pairs(&self) -> Vec<(Cell, Cell)> {
        let mut out = Vec::new();
        for &b in &self.map.blue_starts {
            for &r in &self.map.red_starts {
                if !out.contains(&(b, r)) {
                    out.push((b, r));
                }
            }
        }
        out
    }

    pub fn step<R: Rng + ?Sized>(&self, s: &CtfState, action: Action, rng: &mut R) -> Result<CtfState, EnvError> {
        self.sample_step(s, action as usize, rng)
    }

    /// Red's deterministic move given blue's new cell.
    pub fn red_move(&self, red: Cell, blue: Cell) -> Cell {
        let target = if self.to_red[self.cell_index(blue)] <= self.chase_radius {
            blue
        } else {
            *self
                .border
                .iter()
                .min_by(|a, b| {
                    let ka = (a.row.abs_diff(blue.row), red.euclidean(**a));
                    let kb = (b.row.abs_diff(blue.row), red.euclidean(**b));
                    ka.partial_cmp(&kb).expect("distances are finite")
                })
                .unwrap_or(&red)
        };
        let mut best = red;
        let mut best_d = f64::INFINITY;
        for a in Action::ALL {
            let next = self.map.layout.apply(red, a);
            let d = next.euclidean(target);
            if d < best_d {
                best = next;
                best_d = d;
            }
        }
        best
    }

    /// Distance from `c` to the nearest blue-territory cell.
    pub fn distance_to_blue_territory(&self, c: Cell) -> f64 {
        self.to_blue[self.cell_index(c)]
    }
}

impl Environment for CtfEnv {
    type State = CtfState;

    fn num_actions(&self) -> usize {
        Action::ALL.len()
    }

    fn feature_names(&self) -> &'static [&'static str] {
        &CTF_FEATURES
    }

    fn initial_states(&self) -> Vec<(CtfState, f64)> {
        let starts = self.start_pairs();
        let p = 1.0 / starts.len() as f64;
        starts.into_iter().map(|(b, r)| (CtfState::new(b, r), p)).collect()
    }

    fn is_terminal(&self, s: &CtfState) -> bool {
        s.is_terminal()
    }

    fn transitions(&self, s: &CtfState, action: usize) -> Result<Vec<(CtfState, f64)>, EnvError> {
        if s.is_terminal() {
            return Err(EnvError::StepOnTerminal);
        }
        let action = Action::from_index(action)?;
        let mut next = s.clone();
        next.blue = self.map.layout.apply(s.blue, action);
        if next.blue == self.map.red_flag {
            next.blue_captured = true;
            return Ok(vec![(next, 1.0)]);
        }
        next.red = self.red_move(s.red, next.blue);
        if next.red == self.map.blue_flag {
            next.red_captured = true;
            return Ok(vec![(next, 1.0)]);
        }
        if next.blue.chebyshev(next.red) > 1 {
            return Ok(vec![(next, 1.0)]);
        }
        let p = self.kill_probability;
        let mut killed = next.clone();
        if self.map.is_blue_territory(next.blue) {
            killed.red_alive = false;
        } else {
            killed.blue_alive = false;
        }
        Ok([(killed, p), (next, 1.0 - p)]
            .into_iter()
            .filter(|o| o.1 > 0.0)
            .collect())
    }

    fn features(&self, s: &CtfState) -> Vec<f64> {
        let d_max = self.map.layout.diagonal();
        let ra_bf = if s.red_alive { s.red.euclidean(self.map.blue_flag) } else { d_max };
        let (ba_rf, ba_bt) = if s.blue_alive {
            (s.blue.euclidean(self.map.red_flag), self.distance_to_blue_territory(s.blue))
        } else {
            (d_max, d_max)
        };
        let ba_ra = if s.blue_alive && s.red_alive { s.blue.euclidean(s.red) } else { d_max };
        vec![ra_bf, ba_rf, ba_ra, ba_bt]
    }
}
