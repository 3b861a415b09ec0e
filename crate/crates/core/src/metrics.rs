//! Reference implementations backing the test suites, plus trace
//! aggregation helpers.
//!
//! The oracles deliberately avoid the planner's open-list machinery (plain
//! `BinaryHeap` of reversed keys, queue-based flood fill) while sharing the
//! exact move graph through [`search::neighbors`] and the clearance
//! predicate, so cost comparisons are meaningful. They run at test scale;
//! clarity beats speed here.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};

use crate::clearance::{traversable, ClearanceMatrix, ClearanceMode};
use crate::map_io::{Cell, OccupancyGrid};
use crate::search::{knight_stones, neighbors, Neighborhood};

#[derive(Debug, Clone, Copy)]
struct QueueItem {
    dist: f64,
    idx: u32,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for QueueItem {}
impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

/// Uniform-cost shortest path over the identical move graph; `None` when the
/// goal is unreachable (or the start itself is blocked).
pub fn dijkstra_cost(
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
    mode: ClearanceMode,
    start: Cell,
    goal: Cell,
    neighborhood: Neighborhood,
) -> Option<f64> {
    if !grid.in_bounds(start) || !grid.in_bounds(goal) {
        return None;
    }
    if !traversable(grid, cm, mode, start) {
        return None;
    }
    let n = grid.cell_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let start_idx = grid.index(start) as u32;
    dist[start_idx as usize] = 0.0;
    let mut queue = BinaryHeap::new();
    queue.push(QueueItem { dist: 0.0, idx: start_idx });
    while let Some(item) = queue.pop() {
        let idx = item.idx as usize;
        if done[idx] {
            continue;
        }
        done[idx] = true;
        let cell = Cell::new((idx % grid.width()) as i32, (idx / grid.width()) as i32);
        if cell == goal {
            return Some(dist[idx]);
        }
        for (ncell, cost) in neighbors(cell, neighborhood) {
            if !grid.in_bounds(ncell) || !traversable(grid, cm, mode, ncell) {
                continue;
            }
            if let Some(stones) = knight_stones(cell, ncell) {
                if stones
                    .iter()
                    .any(|&s| !grid.in_bounds(s) || !traversable(grid, cm, mode, s))
                {
                    continue;
                }
            }
            let nidx = grid.index(ncell);
            let cand = dist[idx] + cost;
            if cand < dist[nidx] {
                dist[nidx] = cand;
                queue.push(QueueItem { dist: cand, idx: nidx as u32 });
            }
        }
    }
    None
}

/// Every cell reachable from `start` over traversable moves (flood fill).
pub fn reachable_set(
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
    mode: ClearanceMode,
    start: Cell,
    neighborhood: Neighborhood,
) -> HashSet<Cell> {
    let mut out = HashSet::new();
    if !grid.in_bounds(start) || !traversable(grid, cm, mode, start) {
        return out;
    }
    let mut queue = VecDeque::new();
    queue.push_back(start);
    out.insert(start);
    while let Some(cell) = queue.pop_front() {
        for (ncell, _) in neighbors(cell, neighborhood) {
            if out.contains(&ncell) || !grid.in_bounds(ncell) {
                continue;
            }
            if !traversable(grid, cm, mode, ncell) {
                continue;
            }
            if let Some(stones) = knight_stones(cell, ncell) {
                if stones
                    .iter()
                    .any(|&s| !grid.in_bounds(s) || !traversable(grid, cm, mode, s))
                {
                    continue;
                }
            }
            out.insert(ncell);
            queue.push_back(ncell);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::{path_cost, plan, PlannerConfig, SmoothingMode, SQRT_2};

    fn empty(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(w, h, vec![false; w * h]).unwrap()
    }

    fn random_grid(w: usize, h: usize, seed: u64, density_shift: u32) -> OccupancyGrid {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(3);
        let mut cells = Vec::with_capacity(w * h);
        for _ in 0..w * h {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            cells.push(state >> (64 - density_shift) == 0);
        }
        OccupancyGrid::new(w, h, cells).unwrap()
    }

    fn cfg_plain() -> PlannerConfig {
        PlannerConfig {
            w_far: 1.0,
            w_near: 1.0,
            tie_break_p: 0.0,
            bidirectional: false,
            use_clearance: ClearanceMode::Off,
            smoothing: SmoothingMode::Off,
            ..PlannerConfig::default()
        }
    }

    #[test]
    fn dijkstra_empty_diagonal() {
        let g = empty(5, 5);
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        let cost = dijkstra_cost(
            &g,
            &mut cm,
            ClearanceMode::Off,
            Cell::new(0, 0),
            Cell::new(4, 4),
            Neighborhood::Eight,
        )
        .unwrap();
        assert!((cost - 4.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn dijkstra_walled_goal_is_none() {
        let mut cells = vec![false; 100];
        for (x, y) in [(7, 7), (8, 7), (9, 7), (7, 8), (7, 9)] {
            cells[y * 10 + x] = true;
        }
        let g = OccupancyGrid::new(10, 10, cells).unwrap();
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        assert!(dijkstra_cost(
            &g,
            &mut cm,
            ClearanceMode::Off,
            Cell::new(0, 0),
            Cell::new(9, 9),
            Neighborhood::Eight,
        )
        .is_none());
    }

    #[test]
    fn dijkstra_never_beaten_by_planner() {
        for seed in 0..50u64 {
            let g = random_grid(20, 20, seed, 3);
            let start = Cell::new(0, 0);
            let goal = Cell::new(19, 19);
            if g.is_obstacle(start) || g.is_obstacle(goal) {
                continue;
            }
            let mut cm = ClearanceMatrix::new(&g, 0.0);
            let oracle = dijkstra_cost(
                &g,
                &mut cm,
                ClearanceMode::Off,
                start,
                goal,
                Neighborhood::Eight,
            );
            for w in [1.0, 1.5, 2.0] {
                let cfg = PlannerConfig { w_far: w, w_near: w, ..cfg_plain() };
                let mut cm2 = ClearanceMatrix::new(&g, 0.0);
                let r = plan(&g, &mut cm2, start, goal, &cfg).unwrap();
                match oracle {
                    Some(c) => {
                        assert!(r.reached_goal, "seed {seed} w {w}");
                        assert!(
                            path_cost(&r.path) >= c - 1e-9,
                            "planner beat dijkstra on seed {seed}"
                        );
                    }
                    None => assert!(!r.reached_goal, "seed {seed}: oracle says unreachable"),
                }
            }
        }
    }

    #[test]
    fn reachable_set_full_and_blocked() {
        let g = empty(6, 4);
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        let set = reachable_set(&g, &mut cm, ClearanceMode::Off, Cell::new(0, 0), Neighborhood::Eight);
        assert_eq!(set.len(), 24);

        let g = OccupancyGrid::new(3, 3, vec![true; 9]).unwrap();
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        let set = reachable_set(&g, &mut cm, ClearanceMode::Off, Cell::new(1, 1), Neighborhood::Eight);
        assert!(set.is_empty());
    }

    #[test]
    fn planner_path_cells_lie_in_reachable_set() {
        for seed in 0..20u64 {
            let g = random_grid(20, 20, seed, 3);
            let start = Cell::new(0, 0);
            let goal = Cell::new(19, 19);
            if g.is_obstacle(start) {
                continue;
            }
            let mut cm = ClearanceMatrix::new(&g, 0.0);
            let set = reachable_set(&g, &mut cm, ClearanceMode::Off, start, Neighborhood::Eight);
            let mut cm2 = ClearanceMatrix::new(&g, 0.0);
            let r = plan(&g, &mut cm2, start, goal, &cfg_plain()).unwrap();
            for c in &r.path {
                assert!(set.contains(c), "seed {seed}: {c} outside reachable set");
            }
        }
    }
}
