//! Discrete target tracking on a grid with a central obstacle.
//!
//! The target walks a fixed closed path, one cell per phase. The agent may
//! jump to any cell of the square of half-width `max_move` around it; a
//! jump that would leave the grid or cross the obstacle stops at the valid
//! cell closest to where it left the free area. Reward falls with the
//! squared distance to the target's next position, cost grows with the
//! distance moved. From the last phase every action returns the agent and
//! the target to the start of the path.

use crate::error::{Error, Result};
use crate::task::{bertsekas_split, SplitTask, TabularSmdp, Transition};

pub type Cell = (i32, i32);

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingParams {
    pub width: i32,
    pub height: i32,
    pub obstacle: Vec<Cell>,
    /// Target positions in phase order; the first one is also where the
    /// agent restarts.
    pub path: Vec<Cell>,
    pub max_move: i32,
}

impl Default for TrackingParams {
    fn default() -> Self {
        Self {
            width: 10,
            height: 10,
            obstacle: vec![(4, 4), (5, 4), (4, 5), (5, 5)],
            path: vec![(1, 1), (4, 2), (5, 4), (6, 6), (4, 8), (2, 8), (0, 6), (0, 4)],
            max_move: 4,
        }
    }
}

impl TrackingParams {
    pub fn validate(&self) -> Result<()> {
        if self.width <= 0 || self.height <= 0 || self.max_move < 0 {
            return Err(Error::InvalidArgument("grid and move range must be positive".into()));
        }
        if self.path.len() < 2 {
            return Err(Error::InvalidArgument("target path needs two cells".into()));
        }
        if let Some(c) = self.obstacle.iter().chain(&self.path).find(|c| !self.in_grid(**c)) {
            return Err(Error::InvalidArgument(format!("cell {c:?} outside the grid")));
        }
        if !self.is_free(self.path[0]) {
            return Err(Error::InvalidArgument("path must start on a free cell".into()));
        }
        Ok(())
    }

    fn in_grid(&self, (x, y): Cell) -> bool {
        (0..self.width).contains(&x) && (0..self.height).contains(&y)
    }

    /// Inside the grid and not on the obstacle.
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_grid(c) && !self.obstacle.contains(&c)
    }

    pub fn phases(&self) -> usize {
        self.path.len()
    }

    /// Cells the agent can occupy, in row-major order.
    pub fn free_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&c| self.is_free(c))
            .collect()
    }

    pub fn n_actions(&self) -> usize {
        let side = (2 * self.max_move + 1) as usize;
        side * side
    }

    pub fn action(&self, (dx, dy): Cell) -> usize {
        let side = 2 * self.max_move + 1;
        ((dy + self.max_move) * side + dx + self.max_move) as usize
    }

    pub fn displacement(&self, a: usize) -> Cell {
        let side = 2 * self.max_move + 1;
        let a = a as i32;
        (a % side - self.max_move, a / side - self.max_move)
    }

    /// Where a jump by `delta` from `from` ends.
    pub fn move_agent(&self, from: Cell, delta: Cell) -> Cell {
        let target = (from.0 + delta.0, from.1 + delta.1);
        let steps = 64 * delta.0.abs().max(delta.1.abs());
        let mut last = (from.0 as f64, from.1 as f64);
        for i in 1..=steps {
            let t = f64::from(i) / f64::from(steps);
            let p = (from.0 as f64 + t * delta.0 as f64, from.1 as f64 + t * delta.1 as f64);
            if !self.is_free((p.0.round() as i32, p.1.round() as i32)) {
                return self.closest_free(last);
            }
            last = p;
        }
        target
    }

    /// Nearest free cell centre; ties go to the smaller Manhattan distance,
    /// then to the first cell in row-major order.
    fn closest_free(&self, p: (f64, f64)) -> Cell {
        let key = |&(x, y): &Cell| {
            let (dx, dy) = ((x as f64 - p.0).abs(), (y as f64 - p.1).abs());
            (dx * dx + dy * dy, dx + dy)
        };
        self.free_cells()
            .into_iter()
            .fold(None::<(Cell, (f64, f64))>, |best, c| {
                let k = key(&c);
                match best {
                    Some((_, bk)) if bk <= k => best,
                    _ => Some((c, k)),
                }
            })
            .map(|(c, _)| c)
            .expect("grid has a free cell")
    }
}

pub fn tracking_reward(agent: Cell, target: Cell) -> f64 {
    let (dx, dy) = (f64::from(agent.0 - target.0), f64::from(agent.1 - target.1));
    let d = 1.0 + dx * dx + dy * dy;
    1.0 / (d * d)
}

pub fn tracking_cost(from: Cell, to: Cell) -> f64 {
    1.0 + f64::from((from.0 - to.0).abs() + (from.1 - to.1).abs())
}

/// State indexing for a tracking task.
#[derive(Debug, Clone)]
pub struct TrackingLayout {
    cells: Vec<Cell>,
    index: Vec<Option<usize>>,
    width: i32,
}

impl TrackingLayout {
    pub fn new(p: &TrackingParams) -> Self {
        let cells = p.free_cells();
        let mut index = vec![None; (p.width * p.height) as usize];
        for (i, &(x, y)) in cells.iter().enumerate() {
            index[(y * p.width + x) as usize] = Some(i);
        }
        Self { cells, index, width: p.width }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn state(&self, (x, y): Cell, phase: usize) -> usize {
        let cell = self.index[(y * self.width + x) as usize].expect("agent on a free cell");
        phase * self.cells.len() + cell
    }

    pub fn decode(&self, s: usize) -> (Cell, usize) {
        (self.cells[s % self.cells.len()], s / self.cells.len())
    }
}

/// Builds the unsplit tracking task; the recurrent state is the agent on
/// the first path cell at phase zero.
pub fn tracking_smdp(p: &TrackingParams) -> Result<TabularSmdp> {
    p.validate()?;
    let layout = TrackingLayout::new(p);
    let phases = p.phases();
    let start = p.path[0];
    let mut rows = Vec::with_capacity(layout.n_cells() * phases);
    for s in 0..layout.n_cells() * phases {
        let (agent, phase) = layout.decode(s);
        let row = if phase + 1 == phases {
            let t = Transition::new(
                layout.state(start, 0),
                1.0,
                tracking_reward(start, start),
                tracking_cost(agent, start),
            );
            vec![vec![t]; p.n_actions()]
        } else {
            let target = p.path[phase + 1];
            (0..p.n_actions())
                .map(|a| {
                    let to = p.move_agent(agent, p.displacement(a));
                    vec![Transition::new(
                        layout.state(to, phase + 1),
                        1.0,
                        tracking_reward(to, target),
                        tracking_cost(agent, to),
                    )]
                })
                .collect()
        };
        rows.push(row);
    }
    TabularSmdp::new(rows)
}

/// The tracking task split at its restart state.
pub fn build_tracking_task(p: &TrackingParams) -> Result<SplitTask> {
    let task = tracking_smdp(p)?;
    let restart = TrackingLayout::new(p).state(p.path[0], 0);
    bertsekas_split(&task, restart)
}
