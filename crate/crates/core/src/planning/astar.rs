use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::grid::{Cell, GridPath, OccupancyGrid};
use super::PlanningError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    /// Nodes popped from the open list and expanded.
    pub expanded: usize,
}

/// Minimum-cost 4-connected path with unit step costs.
pub fn astar(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Result<GridPath, PlanningError> {
    astar_with_stats(grid, start, goal).map(|(p, _)| p)
}

/// A* with `f = g + h`, `h` the Manhattan distance to the goal. Ties on `f`
/// go to the lower `h`, then to the earliest insertion.
pub fn astar_with_stats(
    grid: &OccupancyGrid,
    start: Cell,
    goal: Cell,
) -> Result<(GridPath, SearchStats), PlanningError> {
    for c in [start, goal] {
        if grid.is_occupied(c) {
            return Err(PlanningError::InvalidCell(c));
        }
    }
    let idx = |c: Cell| c.row * grid.width() + c.col;
    let n = grid.width() * grid.height();
    let mut g_cost = vec![usize::MAX; n];
    let mut parent: Vec<Option<Cell>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0usize;
    let mut stats = SearchStats::default();

    g_cost[idx(start)] = 0;
    open.push(Reverse((start.manhattan(&goal), start.manhattan(&goal), seq, start)));

    while let Some(Reverse((_, _, _, cell))) = open.pop() {
        if closed[idx(cell)] {
            continue;
        }
        closed[idx(cell)] = true;
        stats.expanded += 1;
        if cell == goal {
            let mut cells = vec![goal];
            let mut cur = goal;
            while let Some(p) = parent[idx(cur)] {
                cells.push(p);
                cur = p;
            }
            cells.reverse();
            return Ok((GridPath::from_search(cells), stats));
        }
        let g_next = g_cost[idx(cell)] + 1;
        for nb in grid.neighbors(cell) {
            let i = idx(nb);
            if closed[i] || g_next >= g_cost[i] {
                continue;
            }
            g_cost[i] = g_next;
            parent[i] = Some(cell);
            let h = nb.manhattan(&goal);
            seq += 1;
            open.push(Reverse((g_next + h, h, seq, nb)));
        }
    }
    Err(PlanningError::NoPath { start, goal })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn open_grid_meets_manhattan_bound() {
        let g = OccupancyGrid::new(3, 3, 1.0).unwrap();
        let p = astar(&g, Cell::new(0, 0), Cell::new(2, 2)).unwrap();
        assert_eq!(p.cost(), 4);
        assert_eq!(p.start(), Cell::new(0, 0));
        assert_eq!(p.goal(), Cell::new(2, 2));
        assert!(GridPath::new(p.cells().to_vec(), &g).is_ok());
    }

    #[test]
    fn walled_grid_has_no_path() {
        let g = OccupancyGrid::parse("5 3 1\n00100\n00100\n00100\n").unwrap();
        assert_eq!(
            astar(&g, Cell::new(0, 0), Cell::new(4, 2)),
            Err(PlanningError::NoPath {
                start: Cell::new(0, 0),
                goal: Cell::new(4, 2)
            })
        );
    }

    #[test]
    fn occupied_or_outside_endpoints_rejected() {
        let g = OccupancyGrid::parse("3 1 1\n010\n").unwrap();
        assert!(matches!(
            astar(&g, Cell::new(1, 0), Cell::new(2, 0)),
            Err(PlanningError::InvalidCell(_))
        ));
        assert!(matches!(
            astar(&g, Cell::new(0, 0), Cell::new(9, 0)),
            Err(PlanningError::InvalidCell(_))
        ));
    }

    #[test]
    fn start_equals_goal() {
        let g = OccupancyGrid::new(2, 2, 1.0).unwrap();
        let p = astar(&g, Cell::new(1, 1), Cell::new(1, 1)).unwrap();
        assert_eq!(p.cells(), &[Cell::new(1, 1)]);
        assert_eq!(p.cost(), 0);
    }

    #[test]
    fn detours_around_wall() {
        let g = OccupancyGrid::parse("3 3 1\n000\n110\n000\n").unwrap();
        let p = astar(&g, Cell::new(0, 0), Cell::new(0, 2)).unwrap();
        assert_eq!(p.cost(), 6);
    }
}
