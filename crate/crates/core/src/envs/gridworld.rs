use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    North,
    East,
    South,
    West,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [Self::North, Self::East, Self::South, Self::West];

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Open rectangular grid with deterministic moves; moving into a wall leaves
/// the agent in place. Cells are numbered `row * width + col`, row 0 at the
/// top, and observed as one-hot vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub start: usize,
    pub goal: usize,
    pub step_limit: usize,
}

impl Default for GridWorld {
    fn default() -> Self {
        Self {
            width: 5,
            height: 5,
            start: 0,
            goal: 24,
            step_limit: 50,
        }
    }
}

impl GridWorld {
    pub fn new(width: usize, height: usize, start: usize, goal: usize, step_limit: usize) -> Result<Self> {
        let n = width * height;
        if width == 0 || height == 0 || start >= n || goal >= n || start == goal || step_limit == 0 {
            return Err(Error::Config(format!(
                "invalid grid {width}x{height} start {start} goal {goal} limit {step_limit}"
            )));
        }
        Ok(Self {
            width,
            height,
            start,
            goal,
            step_limit,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn observation(&self, cell: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_cells()];
        v[cell] = 1.0;
        v
    }

    pub fn cell_of(&self, observation: &[f64]) -> Result<usize> {
        if observation.len() == self.n_cells() {
            let mut hot = observation.iter().enumerate().filter(|(_, &x)| x != 0.0);
            if let (Some((i, &x)), None) = (hot.next(), hot.next()) {
                if x == 1.0 {
                    return Ok(i);
                }
            }
        }
        Err(Error::Input("observation is not a one-hot grid cell".into()))
    }

    pub fn next_cell(&self, cell: usize, action: GridAction) -> usize {
        let (r, c) = (cell / self.width, cell % self.width);
        let (r, c) = match action {
            GridAction::North => (r.saturating_sub(1), c),
            GridAction::East => (r, (c + 1).min(self.width - 1)),
            GridAction::South => ((r + 1).min(self.height - 1), c),
            GridAction::West => (r, c.saturating_sub(1)),
        };
        r * self.width + c
    }

    pub fn distance_to_goal(&self, cell: usize) -> usize {
        let (r, c) = (cell / self.width, cell % self.width);
        let (gr, gc) = (self.goal / self.width, self.goal % self.width);
        r.abs_diff(gr) + c.abs_diff(gc)
    }

    /// A shortest-path action: close the column gap first, then the row gap.
    pub fn optimal_action(&self, cell: usize) -> GridAction {
        let (r, c) = (cell / self.width, cell % self.width);
        let (gr, gc) = (self.goal / self.width, self.goal % self.width);
        if c < gc {
            GridAction::East
        } else if c > gc {
            GridAction::West
        } else if r < gr {
            GridAction::South
        } else {
            GridAction::North
        }
    }
}
