use std::fmt;

use serde::{Deserialize, Serialize};

use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn euclidean(self, other: Cell) -> f64 {
        let dr = self.row as f64 - other.row as f64;
        let dc = self.col as f64 - other.col as f64;
        dr.hypot(dc)
    }

    pub fn chebyshev(self, other: Cell) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Grid moves. The discriminant is the action index and also the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay];

    pub fn from_index(i: usize) -> Result<Self, EnvError> {
        Self::ALL.get(i).copied().ok_or(EnvError::BadAction(i))
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::Stay => (0, 0),
        }
    }
}

/// Walls and dimensions shared by both map kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub width: usize,
    pub height: usize,
    walls: Vec<bool>,
}

impl Layout {
    fn idx(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.row < self.height && c.col < self.width
    }

    pub fn is_wall(&self, c: Cell) -> bool {
        self.walls[self.idx(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.contains(c) && !self.is_wall(c)
    }

    /// Cell reached by `a`; moves into walls or off the grid leave `c` unchanged.
    pub fn apply(&self, c: Cell, a: Action) -> Cell {
        let (dr, dc) = a.delta();
        let (Some(row), Some(col)) = (c.row.checked_add_signed(dr), c.col.checked_add_signed(dc)) else {
            return c;
        };
        let next = Cell::new(row, col);
        if self.is_free(next) {
            next
        } else {
            c
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| Cell::new(r, c)))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells().filter(|&c| !self.is_wall(c))
    }

    /// Length of the map diagonal, larger than any in-map distance.
    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }
}

fn read_rows(text: &str) -> Result<Vec<(usize, Vec<char>)>, EnvError> {
    let rows: Vec<(usize, Vec<char>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<String>().chars().collect::<Vec<_>>()))
        .filter(|(_, l)| !l.is_empty() && l[0] != ';')
        .collect();
    let Some((_, first)) = rows.first() else {
        return Err(EnvError::InvalidMap("map has no rows".into()));
    };
    let width = first.len();
    for (line, r) in &rows {
        if r.len() != width {
            return Err(EnvError::MapParse {
                line: *line,
                reason: format!("row has {} cells, expected {width}", r.len()),
            });
        }
    }
    Ok(rows)
}

/// Capture-the-flag map.
///
/// Text form, one row per line (whitespace ignored, `;` starts a comment line):
/// `#` wall, `.` free cell (territory by half: left is blue), `b`/`r` blue or
/// red territory, `B`/`R` blue or red flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    pub layout: Layout,
    blue_territory: Vec<bool>,
    pub blue_flag: Cell,
    pub red_flag: Cell,
    pub blue_starts: Vec<Cell>,
    pub red_starts: Vec<Cell>,
}

impl GridMap {
    /// Parses a map; agents start on their own flags until
    /// [`GridMap::with_starts`] says otherwise.
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let rows = read_rows(text)?;
        let height = rows.len();
        let width = rows[0].1.len();
        let mut walls = vec![false; width * height];
        let mut blue = vec![false; width * height];
        let (mut blue_flag, mut red_flag) = (None, None);
        for (r, (line, chars)) in rows.iter().enumerate() {
            for (c, &ch) in chars.iter().enumerate() {
                let i = r * width + c;
                let cell = Cell::new(r, c);
                match ch {
                    '#' => walls[i] = true,
                    '.' => blue[i] = c < width / 2,
                    'b' => blue[i] = true,
                    'r' => {}
                    'B' | 'R' => {
                        let slot = if ch == 'B' { &mut blue_flag } else { &mut red_flag };
                        if slot.replace(cell).is_some() {
                            return Err(EnvError::MapParse {
                                line: *line,
                                reason: format!("second `{ch}` flag"),
                            });
                        }
                        blue[i] = ch == 'B';
                    }
                    other => {
                        return Err(EnvError::MapParse {
                            line: *line,
                            reason: format!("unknown map character `{other}`"),
                        })
                    }
                }
            }
        }
        let blue_flag = blue_flag.ok_or_else(|| EnvError::InvalidMap("missing blue flag `B`".into()))?;
        let red_flag = red_flag.ok_or_else(|| EnvError::InvalidMap("missing red flag `R`".into()))?;
        let map = Self {
            layout: Layout { width, height, walls },
            blue_territory: blue,
            blue_flag,
            red_flag,
            blue_starts: vec![blue_flag],
            red_starts: vec![red_flag],
        };
        Ok(map)
    }

    pub fn with_starts(mut self, blue: Vec<Cell>, red: Vec<Cell>) -> Result<Self, EnvError> {
        if blue.is_empty() || red.is_empty() {
            return Err(EnvError::InvalidMap("start lists must be nonempty".into()));
        }
        for &c in blue.iter().chain(&red) {
            if !self.layout.is_free(c) {
                return Err(EnvError::InvalidMap(format!("start cell {c} is a wall or off the map")));
            }
        }
        self.blue_starts = blue;
        self.red_starts = red;
        Ok(self)
    }

    pub fn is_blue_territory(&self, c: Cell) -> bool {
        self.blue_territory[self.layout.idx(c)]
    }

    /// Distance from `c` to the nearest free cell of the given territory (0 inside).
    pub fn distance_to_territory(&self, c: Cell, blue: bool) -> f64 {
        self.layout
            .free_cells()
            .filter(|&x| self.is_blue_territory(x) == blue)
            .map(|x| c.euclidean(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Red-territory cells that touch blue territory.
    pub fn red_border(&self) -> Vec<Cell> {
        self.layout
            .free_cells()
            .filter(|&c| !self.is_blue_territory(c))
            .filter(|&c| {
                Action::ALL[..4]
                    .iter()
                    .map(|&a| self.layout.apply(c, a))
                    .any(|n| n != c && self.is_blue_territory(n))
            })
            .collect()
    }
}

/// Navigation map: `#` wall, `.` free, `G` goal, `H` hazard, `V` vase, `S` start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavMap {
    pub layout: Layout,
    pub goal: Cell,
    pub hazards: Vec<Cell>,
    pub vases: Vec<Cell>,
    pub starts: Vec<Cell>,
}

impl NavMap {
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let rows = read_rows(text)?;
        let height = rows.len();
        let width = rows[0].1.len();
        let mut walls = vec![false; width * height];
        let (mut goal, mut hazards, mut vases, mut starts) = (None, vec![], vec![], vec![]);
        for (r, (line, chars)) in rows.iter().enumerate() {
            for (c, &ch) in chars.iter().enumerate() {
                let cell = Cell::new(r, c);
                match ch {
                    '#' => walls[r * width + c] = true,
                    '.' => {}
                    'G' => {
                        if goal.replace(cell).is_some() {
                            return Err(EnvError::MapParse {
                                line: *line,
                                reason: "second goal `G`".into(),
                            });
                        }
                    }
                    'H' => hazards.push(cell),
                    'V' => vases.push(cell),
                    'S' => starts.push(cell),
                    other => {
                        return Err(EnvError::MapParse {
                            line: *line,
                            reason: format!("unknown map character `{other}`"),
                        })
                    }
                }
            }
        }
        let goal = goal.ok_or_else(|| EnvError::InvalidMap("missing goal `G`".into()))?;
        if starts.is_empty() {
            return Err(EnvError::InvalidMap("missing start `S`".into()));
        }
        Ok(Self {
            layout: Layout { width, height, walls },
            goal,
            hazards,
            vases,
            starts,
        })
    }
}

/// Which environment family a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Ctf,
    Nav,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP: &str = "
        b b r r R
        b # r r r
        B b . . r
    ";

    #[test]
    fn parses_ctf_map() {
        let m = GridMap::parse(MAP).unwrap();
        assert_eq!((m.layout.width, m.layout.height), (5, 3));
        assert_eq!(m.blue_flag, Cell::new(2, 0));
        assert_eq!(m.red_flag, Cell::new(0, 4));
        assert!(m.layout.is_wall(Cell::new(1, 1)));
        // `.` falls back to the left-half rule: column 2 of 5 is red.
        assert!(!m.is_blue_territory(Cell::new(2, 2)));
        assert!(m.is_blue_territory(Cell::new(2, 1)));
        assert_eq!(m.distance_to_territory(Cell::new(0, 4), true), 3.0);
        assert_eq!(m.distance_to_territory(Cell::new(0, 0), true), 0.0);
        assert_eq!(m.red_border(), vec![Cell::new(0, 2), Cell::new(2, 2)]);
    }

    #[test]
    fn map_errors() {
        assert!(matches!(GridMap::parse("b b\nr"), Err(EnvError::MapParse { line: 2, .. })));
        assert!(GridMap::parse("b r R").is_err());
        assert!(GridMap::parse("B x R").is_err());
        let m = GridMap::parse(MAP).unwrap();
        assert!(m.clone().with_starts(vec![Cell::new(1, 1)], vec![Cell::new(0, 4)]).is_err());
        assert!(m.with_starts(vec![Cell::new(0, 0)], vec![]).is_err());
    }

    #[test]
    fn moves_respect_walls_and_edges() {
        let m = GridMap::parse(MAP).unwrap();
        let l = &m.layout;
        assert_eq!(l.apply(Cell::new(0, 1), Action::Down), Cell::new(0, 1));
        assert_eq!(l.apply(Cell::new(0, 0), Action::Up), Cell::new(0, 0));
        assert_eq!(l.apply(Cell::new(0, 0), Action::Right), Cell::new(0, 1));
        assert_eq!(l.apply(Cell::new(2, 4), Action::Right), Cell::new(2, 4));
    }

    #[test]
    fn parses_nav_map() {
        let m = NavMap::parse("S . . .\n. H . .\n. . V .\n# . . G").unwrap();
        assert_eq!(m.goal, Cell::new(3, 3));
        assert_eq!(m.hazards, vec![Cell::new(1, 1)]);
        assert_eq!(m.vases, vec![Cell::new(2, 2)]);
        assert_eq!(m.starts, vec![Cell::new(0, 0)]);
        assert!(NavMap::parse(". . G").is_err());
    }
}
