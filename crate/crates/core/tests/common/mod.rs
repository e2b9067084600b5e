#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use omnitrack::fuzzy::RuleBase;
use omnitrack::planning::{Cell, OccupancyGrid};
use rand::Rng;

/// Gain rule table, rows e = NB..PB, columns de = NB..PB, cells kp/ki/kd.
pub const GAIN_RULES: [[&str; 7]; 7] = [
    ["PB/NB/PS", "PB/NB/NS", "PM/NM/NB", "PM/NM/NB", "PS/NS/NB", "ZO/ZO/NM", "ZO/ZO/PS"],
    ["PB/NB/PS", "PB/NB/NS", "PM/NM/NB", "PS/NS/NM", "PS/NS/NM", "ZO/ZO/NS", "NS/ZO/ZO"],
    ["PM/NB/ZO", "PM/NM/NM", "PM/NS/NM", "PS/NS/NM", "ZO/ZO/NS", "NS/PS/NS", "NS/PS/ZO"],
    ["PM/NM/ZO", "PM/NM/NS", "PS/NS/NS", "ZO/ZO/NS", "NS/PS/NS", "NM/PM/NS", "NM/PM/ZO"],
    ["PS/NM/ZO", "PS/NS/ZO", "ZO/ZO/ZO", "NS/PS/ZO", "NS/PS/ZO", "NM/PM/ZO", "NM/PB/ZO"],
    ["PS/ZO/PB", "ZO/ZO/NS", "NS/PS/PS", "NM/PS/PS", "NM/PM/PS", "NM/PB/PS", "NB/PB/PB"],
    ["ZO/ZO/PB", "ZO/ZO/PM", "NM/PS/PM", "NM/PM/PM", "NM/PM/PS", "NB/PB/PS", "NB/PB/PB"],
];

/// Table cells (e, de, output) that differ from [`GAIN_RULES`].
pub fn rule_mismatches(rules: &RuleBase) -> Vec<String> {
    let labels = omnitrack::fuzzy::Label::ALL;
    let mut bad = Vec::new();
    for (i, row) in GAIN_RULES.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            for (out, want) in cell.split('/').enumerate() {
                let got = rules.consequent(out, labels[i], labels[j]);
                if got.as_str() != want {
                    bad.push(format!("e={} de={} out={out}: {got} != {want}", labels[i], labels[j]));
                }
            }
        }
    }
    bad
}

pub fn random_grid(rng: &mut impl Rng, width: usize, height: usize, fill: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(width, height, 1.0).unwrap();
    for row in 0..height {
        for col in 0..width {
            if rng.random::<f64>() < fill {
                g.set_occupied(Cell::new(col, row), true);
            }
        }
    }
    g
}

/// Plain Dijkstra over free 4-neighbours with unit costs.
pub fn dijkstra_cost(grid: &OccupancyGrid, start: Cell, goal: Cell) -> Option<usize> {
    if !grid.is_free(start) || !grid.is_free(goal) {
        return None;
    }
    let idx = |c: Cell| c.row * grid.width() + c.col;
    let mut dist = vec![usize::MAX; grid.width() * grid.height()];
    let mut heap = BinaryHeap::new();
    dist[idx(start)] = 0;
    heap.push(Reverse((0usize, start.col, start.row)));
    while let Some(Reverse((d, col, row))) = heap.pop() {
        let c = Cell::new(col, row);
        if c == goal {
            return Some(d);
        }
        if d > dist[idx(c)] {
            continue;
        }
        let moves: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        for (dc, dr) in moves {
            let (nc, nr) = (col as isize + dc, row as isize + dr);
            if nc < 0 || nr < 0 {
                continue;
            }
            let n = Cell::new(nc as usize, nr as usize);
            if !grid.contains(n) || !grid.is_free(n) {
                continue;
            }
            if d + 1 < dist[idx(n)] {
                dist[idx(n)] = d + 1;
                heap.push(Reverse((d + 1, n.col, n.row)));
            }
        }
    }
    None
}

/// Number of cells Dijkstra settles before reaching `goal`.
pub fn dijkstra_settled(grid: &OccupancyGrid, start: Cell, goal: Cell) -> usize {
    let idx = |c: Cell| c.row * grid.width() + c.col;
    let mut dist = vec![usize::MAX; grid.width() * grid.height()];
    let mut heap = BinaryHeap::new();
    let mut settled = 0;
    dist[idx(start)] = 0;
    heap.push(Reverse((0usize, start.col, start.row)));
    while let Some(Reverse((d, col, row))) = heap.pop() {
        let c = Cell::new(col, row);
        if d > dist[idx(c)] {
            continue;
        }
        settled += 1;
        if c == goal {
            break;
        }
        for n in grid.neighbors(c) {
            if d + 1 < dist[idx(n)] {
                dist[idx(n)] = d + 1;
                heap.push(Reverse((d + 1, n.col, n.row)));
            }
        }
    }
    settled
}
