use std::fmt;

use super::PlanningError;

/// Grid cell index; `row` 0 is the top line of a map file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub fn new(col: usize, row: usize) -> Self {
        Cell { col, row }
    }

    pub fn manhattan(&self, other: &Cell) -> usize {
        self.col.abs_diff(other.col) + self.row.abs_diff(other.row)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.col, self.row)
    }
}

/// Binary occupancy map. Cell `(col, row)` has world coordinates
/// `origin + (col, row) * resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    resolution: f64,
    origin: [f64; 2],
    occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, resolution: f64) -> Result<Self, PlanningError> {
        if width == 0 || height == 0 {
            return Err(PlanningError::InvalidGrid(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(PlanningError::InvalidGrid(format!(
                "resolution must be positive, got {resolution}"
            )));
        }
        Ok(OccupancyGrid {
            width,
            height,
            resolution,
            origin: [0.0, 0.0],
            occupied: vec![false; width * height],
        })
    }

    pub fn with_origin(mut self, origin: [f64; 2]) -> Self {
        self.origin = origin;
        self
    }

    /// Parses the ASCII map format: a `width height resolution` header
    /// followed by `height` rows of `width` characters from `{0, 1}`.
    pub fn parse(text: &str) -> Result<Self, PlanningError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines.next().ok_or(PlanningError::MapParse {
            line: 1,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(PlanningError::MapParse {
                line: hline,
                msg: "header must be `width height resolution`".into(),
            });
        }
        let bad = |msg: &str| PlanningError::MapParse {
            line: hline,
            msg: msg.into(),
        };
        let width: usize = fields[0].parse().map_err(|_| bad("bad width"))?;
        let height: usize = fields[1].parse().map_err(|_| bad("bad height"))?;
        let resolution: f64 = fields[2].parse().map_err(|_| bad("bad resolution"))?;
        let mut grid = OccupancyGrid::new(width, height, resolution)?;

        let mut row = 0;
        for (lineno, line) in lines {
            if row == height {
                return Err(PlanningError::MapParse {
                    line: lineno,
                    msg: format!("expected {height} rows, found more"),
                });
            }
            if line.chars().count() != width {
                return Err(PlanningError::MapParse {
                    line: lineno,
                    msg: format!("expected {width} cells, found {}", line.chars().count()),
                });
            }
            for (col, ch) in line.chars().enumerate() {
                match ch {
                    '0' => {}
                    '1' => grid.set_occupied(Cell::new(col, row), true),
                    other => {
                        return Err(PlanningError::MapParse {
                            line: lineno,
                            msg: format!("unexpected character {other:?}"),
                        })
                    }
                }
            }
            row += 1;
        }
        if row != height {
            return Err(PlanningError::MapParse {
                line: hline,
                msg: format!("expected {height} rows, found {row}"),
            });
        }
        Ok(grid)
    }

    pub fn to_map_string(&self) -> String {
        let mut s = format!("{} {} {}\n", self.width, self.height, self.resolution);
        for row in 0..self.height {
            for col in 0..self.width {
                s.push(if self.is_occupied(Cell::new(col, row)) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.col < self.width && c.row < self.height
    }

    /// Out-of-bounds cells count as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.contains(c) || self.occupied[c.row * self.width + c.col]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_occupied(c)
    }

    pub fn set_occupied(&mut self, c: Cell, occupied: bool) {
        assert!(self.contains(c), "cell {c} outside {}x{} grid", self.width, self.height);
        self.occupied[c.row * self.width + c.col] = occupied;
    }

    /// Marks every cell of the inclusive rectangle as an obstacle.
    pub fn fill_rect(&mut self, min: Cell, max: Cell) {
        for row in min.row..=max.row.min(self.height - 1) {
            for col in min.col..=max.col.min(self.width - 1) {
                self.set_occupied(Cell::new(col, row), true);
            }
        }
    }

    pub fn world_of(&self, c: Cell) -> [f64; 2] {
        [
            self.origin[0] + c.col as f64 * self.resolution,
            self.origin[1] + c.row as f64 * self.resolution,
        ]
    }

    /// Free 4-neighbours of `c` in the order right, down, left, up.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let candidates = [
            (c.col.checked_add(1), Some(c.row)),
            (Some(c.col), c.row.checked_add(1)),
            (c.col.checked_sub(1), Some(c.row)),
            (Some(c.col), c.row.checked_sub(1)),
        ];
        candidates.into_iter().filter_map(move |pair| match pair {
            (Some(col), Some(row)) if self.is_free(Cell::new(col, row)) => {
                Some(Cell::new(col, row))
            }
            _ => None,
        })
    }

    /// Dilates obstacles by `ceil(radius / resolution)` cells (Euclidean disk).
    pub fn inflate(&self, radius: f64) -> OccupancyGrid {
        let k = (radius / self.resolution).ceil().max(0.0) as isize;
        let mut out = self.clone();
        if k == 0 {
            return out;
        }
        for row in 0..self.height {
            for col in 0..self.width {
                if !self.occupied[row * self.width + col] {
                    continue;
                }
                for dr in -k..=k {
                    for dc in -k..=k {
                        if dr * dr + dc * dc > k * k {
                            continue;
                        }
                        let (r, c) = (row as isize + dr, col as isize + dc);
                        if r >= 0 && c >= 0 && (r as usize) < self.height && (c as usize) < self.width {
                            out.occupied[r as usize * self.width + c as usize] = true;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Sequence of 4-connected free cells from start to goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPath {
    cells: Vec<Cell>,
}

impl GridPath {
    /// Validates connectivity and occupancy against `grid`.
    pub fn new(cells: Vec<Cell>, grid: &OccupancyGrid) -> Result<Self, PlanningError> {
        if cells.is_empty() {
            return Err(PlanningError::InvalidGrid("empty path".into()));
        }
        if let Some(c) = cells.iter().find(|c| grid.is_occupied(**c)) {
            return Err(PlanningError::InvalidCell(*c));
        }
        if cells.windows(2).any(|w| w[0].manhattan(&w[1]) != 1) {
            return Err(PlanningError::InvalidGrid("path cells are not 4-connected".into()));
        }
        Ok(GridPath { cells })
    }

    pub(super) fn from_search(cells: Vec<Cell>) -> Self {
        GridPath { cells }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Number of unit moves.
    pub fn cost(&self) -> usize {
        self.cells.len() - 1
    }

    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn goal(&self) -> Cell {
        *self.cells.last().unwrap()
    }
}
