//! Baseline and improved A* over the occupancy grid.
//!
//! The planner is one engine with every improvement behind a
//! [`PlannerConfig`] toggle so comparison runs can isolate each strategy:
//!
//! - distance-switched heuristic weighting with a small tie-break offset,
//!   `f = g + (w + p) h`;
//! - binary-heap open list (lazy deletion) versus the plain scanned list;
//! - eight- or sixteen-neighborhood expansion, where knight moves are
//!   dropped if either stepping-stone cell is blocked;
//! - bidirectional search whose per-direction heuristic targets the
//!   lowest-cost closed node of the opposite direction;
//! - best-effort fallback when the goal is unreachable: the search returns
//!   the path to the reachable cell nearest the goal.
//!
//! Step costs are Euclidean segment lengths (1, sqrt(2), sqrt(5)), matching
//! the Euclidean heuristic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clearance::{traversable, ClearanceMatrix, ClearanceMode};
use crate::map_io::{Cell, OccupancyGrid};

pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
pub const SQRT_5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicKind {
    Euclidean,
    Manhattan,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    Eight,
    Sixteen,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingMode {
    Bspline,
    Off,
}

/// Every planner toggle and tuning constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Heuristic weight while far from the target.
    pub w_far: f64,
    /// Heuristic weight once within `switch_distance` of the target.
    pub w_near: f64,
    pub switch_distance: f64,
    /// Small additive offset that orders equal-f nodes toward the goal.
    pub tie_break_p: f64,
    pub neighborhood: Neighborhood,
    pub use_binary_heap: bool,
    pub bidirectional: bool,
    pub use_clearance: ClearanceMode,
    pub smoothing: SmoothingMode,
    pub heuristic: HeuristicKind,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            w_far: 1.5,
            w_near: 0.8,
            switch_distance: 15.0,
            tie_break_p: 0.001,
            neighborhood: Neighborhood::Eight,
            use_binary_heap: true,
            bidirectional: true,
            use_clearance: ClearanceMode::Lazy,
            smoothing: SmoothingMode::Bspline,
            heuristic: HeuristicKind::Euclidean,
        }
    }
}

impl PlannerConfig {
    /// The paper-style unimproved configuration: uniform unit weight, list
    /// open set, unidirectional, eagerly inflated map, no smoothing.
    pub fn baseline() -> Self {
        PlannerConfig {
            w_far: 1.0,
            w_near: 1.0,
            tie_break_p: 0.0,
            use_binary_heap: false,
            bidirectional: false,
            use_clearance: ClearanceMode::Eager,
            smoothing: SmoothingMode::Off,
            ..PlannerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.w_far < 0.0 || self.w_near < 0.0 {
            return Err("heuristic weights must be non-negative".into());
        }
        if self.switch_distance < 0.0 {
            return Err("switch_distance must be non-negative".into());
        }
        if !(0.0..0.01).contains(&self.tie_break_p) {
            return Err("tie_break_p must lie in [0, 0.01)".into());
        }
        Ok(())
    }
}

/// Outcome of one planning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    /// Start-to-end cell sequence; ends at the goal when `reached_goal`,
    /// otherwise at `best_effort_cell`.
    pub path: Vec<Cell>,
    pub reached_goal: bool,
    /// Reachable cell nearest the goal, recorded when the goal was not reached.
    pub best_effort_cell: Option<Cell>,
    /// Nodes moved from open to closed, over both directions.
    pub expansions: usize,
    /// Peak open-list occupancy (both directions combined).
    pub open_max: usize,
    pub wall_time_ms: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("start cell {0} outside the grid")]
    StartOutOfBounds(Cell),
    #[error("start cell {0} is not traversable")]
    StartBlocked(Cell),
    #[error("goal cell {0} outside the grid")]
    GoalOutOfBounds(Cell),
}

/// Heuristic distance between two cells.
pub fn heuristic(a: Cell, b: Cell, kind: HeuristicKind) -> f64 {
    match kind {
        HeuristicKind::Euclidean => a.euclidean(b),
        HeuristicKind::Manhattan => a.manhattan(b),
        HeuristicKind::Diagonal => {
            let dx = f64::from((a.x - b.x).abs());
            let dy = f64::from((a.y - b.y).abs());
            dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
        }
    }
}

/// Node priority `f = g + (w + p) h`.
pub fn priority(g: f64, h: f64, w_effective: f64, p: f64) -> f64 {
    g + (w_effective + p) * h
}

/// Weight switch: `w_near` once strictly inside `switch_distance` of the
/// target, `w_far` otherwise.
pub fn effective_weight(node: Cell, target: Cell, cfg: &PlannerConfig) -> f64 {
    if node.euclidean(target) < cfg.switch_distance {
        cfg.w_near
    } else {
        cfg.w_far
    }
}

static OFFSETS_EIGHT: [(i32, i32, f64); 8] = [
    (1, 0, 1.0),
    (1, 1, SQRT_2),
    (0, 1, 1.0),
    (-1, 1, SQRT_2),
    (-1, 0, 1.0),
    (-1, -1, SQRT_2),
    (0, -1, 1.0),
    (1, -1, SQRT_2),
];

static OFFSETS_KNIGHT: [(i32, i32, f64); 8] = [
    (2, 1, SQRT_5),
    (1, 2, SQRT_5),
    (-1, 2, SQRT_5),
    (-2, 1, SQRT_5),
    (-2, -1, SQRT_5),
    (-1, -2, SQRT_5),
    (1, -2, SQRT_5),
    (2, -1, SQRT_5),
];

/// Candidate moves from a cell in deterministic order: the eight-ring
/// clockwise from `(+1, 0)`, then (for [`Neighborhood::Sixteen`]) the knight
/// ring clockwise from `(+2, +1)`. The caller filters bounds and clearance.
pub fn neighbors(cell: Cell, kind: Neighborhood) -> Vec<(Cell, f64)> {
    let mut out = Vec::with_capacity(match kind {
        Neighborhood::Eight => 8,
        Neighborhood::Sixteen => 16,
    });
    for &(dx, dy, c) in &OFFSETS_EIGHT {
        out.push((Cell::new(cell.x + dx, cell.y + dy), c));
    }
    if kind == Neighborhood::Sixteen {
        for &(dx, dy, c) in &OFFSETS_KNIGHT {
            out.push((Cell::new(cell.x + dx, cell.y + dy), c));
        }
    }
    out
}

/// The two eight-neighborhood cells a knight move passes between. `None`
/// for non-knight offsets.
pub fn knight_stones(from: Cell, to: Cell) -> Option<[Cell; 2]> {
    let dx = to.x - from.x;
    let dy = to.y - from.y;
    if dx.abs() + dy.abs() != 3 || dx == 0 || dy == 0 {
        return None;
    }
    Some(if dx.abs() == 2 {
        [
            Cell::new(from.x + dx / 2, from.y),
            Cell::new(from.x + dx / 2, from.y + dy),
        ]
    } else {
        [
            Cell::new(from.x, from.y + dy / 2),
            Cell::new(from.x + dx, from.y + dy / 2),
        ]
    })
}

/// Total Euclidean length of a cell path; for legal moves this equals the
/// sum of the step costs.
pub fn path_cost(path: &[Cell]) -> f64 {
    path.windows(2).map(|w| w[0].euclidean(w[1])).sum()
}

// --------------------------------------------------------------------------
// Open-list implementations
// --------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    f: f64,
    g_at_push: f64,
    seq: u64,
    idx: u32,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    // Reversed so BinaryHeap pops the lowest f; f-ties break FIFO by seq.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[derive(Debug, Clone, Copy)]
struct ScanEntry {
    idx: u32,
    g: f64,
    f: f64,
    seq: u64,
}

/// Open list behind either a binary heap (stale entries skipped on pop) or
/// the plain list the unimproved algorithm scans in full.
enum OpenList {
    Heap(BinaryHeap<HeapEntry>),
    Scan(Vec<ScanEntry>),
}

impl OpenList {
    fn new(use_heap: bool) -> Self {
        if use_heap {
            OpenList::Heap(BinaryHeap::new())
        } else {
            OpenList::Scan(Vec::new())
        }
    }

    fn len(&self) -> usize {
        match self {
            OpenList::Heap(h) => h.len(),
            OpenList::Scan(v) => v.len(),
        }
    }

    fn push(&mut self, idx: u32, g: f64, f: f64, seq: u64) {
        match self {
            OpenList::Heap(h) => h.push(HeapEntry { f, g_at_push: g, seq, idx }),
            OpenList::Scan(v) => v.push(ScanEntry { idx, g, f, seq }),
        }
    }

    /// Updates the priority of an open cell after re-parenting. Heap mode
    /// pushes a fresh entry and lets the stale one die on pop.
    fn decrease(&mut self, idx: u32, g: f64, f: f64, seq: u64) {
        match self {
            OpenList::Heap(h) => h.push(HeapEntry { f, g_at_push: g, seq, idx }),
            OpenList::Scan(v) => {
                for e in v.iter_mut() {
                    if e.idx == idx {
                        e.g = g;
                        e.f = f;
                        return;
                    }
                }
                v.push(ScanEntry { idx, g, f, seq });
            }
        }
    }

    /// Pops the lowest-f live entry, skipping stale heap duplicates.
    fn pop(&mut self, g: &[f64], closed: &[bool]) -> Option<u32> {
        match self {
            OpenList::Heap(h) => {
                while let Some(e) = h.pop() {
                    let idx = e.idx as usize;
                    if closed[idx] || e.g_at_push > g[idx] + 1e-12 {
                        continue;
                    }
                    return Some(e.idx);
                }
                None
            }
            OpenList::Scan(v) => {
                let mut best: Option<usize> = None;
                for (i, e) in v.iter().enumerate() {
                    let better = match best {
                        None => true,
                        Some(b) => {
                            let eb = &v[b];
                            e.f < eb.f || (e.f == eb.f && e.seq < eb.seq)
                        }
                    };
                    if better {
                        best = Some(i);
                    }
                }
                best.map(|i| v.swap_remove(i).idx)
            }
        }
    }
}

// --------------------------------------------------------------------------
// Planner
// --------------------------------------------------------------------------

struct Direction {
    root: Cell,
    g: Vec<f64>,
    parent: Vec<u32>,
    closed: Vec<bool>,
    open: OpenList,
    seq: u64,
    /// Closed node with the lowest f so far: the opposite direction's
    /// heuristic target.
    best_closed: Option<(f64, Cell)>,
    alive: bool,
}

impl Direction {
    fn new(root: Cell, grid: &OccupancyGrid, use_heap: bool) -> Self {
        let n = grid.cell_count();
        let mut dir = Direction {
            root,
            g: vec![f64::INFINITY; n],
            parent: vec![u32::MAX; n],
            closed: vec![false; n],
            open: OpenList::new(use_heap),
            seq: 0,
            best_closed: None,
            alive: true,
        };
        let idx = grid.index(root) as u32;
        dir.g[idx as usize] = 0.0;
        dir.open.push(idx, 0.0, 0.0, dir.seq);
        dir.seq += 1;
        dir
    }

    /// Heuristic target for the opposite direction.
    fn target(&self) -> Cell {
        self.best_closed.map(|(_, c)| c).unwrap_or(self.root)
    }

    fn chain_to_root(&self, from: Cell, grid: &OccupancyGrid) -> Vec<Cell> {
        let mut out = vec![from];
        let mut idx = grid.index(from) as u32;
        while self.parent[idx as usize] != u32::MAX {
            idx = self.parent[idx as usize];
            let x = (idx as usize % grid.width()) as i32;
            let y = (idx as usize / grid.width()) as i32;
            out.push(Cell::new(x, y));
        }
        out
    }
}

struct PlanCounters {
    expansions: usize,
    open_max: usize,
}

/// Expands one node in `dir`; returns the closed cell, or `None` when the
/// open list is exhausted.
#[allow(clippy::too_many_arguments)]
fn expand_one(
    dir: &mut Direction,
    target: Cell,
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
    cfg: &PlannerConfig,
    counters: &mut PlanCounters,
    other_open_len: usize,
) -> Option<Cell> {
    let idx = match dir.open.pop(&dir.g, &dir.closed) {
        Some(i) => i,
        None => {
            dir.alive = false;
            return None;
        }
    };
    let cell = Cell::new(
        (idx as usize % grid.width()) as i32,
        (idx as usize / grid.width()) as i32,
    );
    dir.closed[idx as usize] = true;
    counters.expansions += 1;

    let g_cur = dir.g[idx as usize];
    let h_cur = heuristic(cell, target, cfg.heuristic);
    let f_cur = priority(
        g_cur,
        h_cur,
        effective_weight(cell, target, cfg),
        cfg.tie_break_p,
    );
    if dir.best_closed.map_or(true, |(f, _)| f_cur < f) {
        dir.best_closed = Some((f_cur, cell));
    }

    for (ncell, step_cost) in neighbors(cell, cfg.neighborhood) {
        if !grid.in_bounds(ncell) {
            continue;
        }
        if !traversable(grid, cm, cfg.use_clearance, ncell) {
            continue;
        }
        if let Some(stones) = knight_stones(cell, ncell) {
            // A knight move through a blocked stepping stone would thread
            // the path between obstacles the car cannot actually pass.
            if stones
                .iter()
                .any(|&s| !grid.in_bounds(s) || !traversable(grid, cm, cfg.use_clearance, s))
            {
                continue;
            }
        }
        let nidx = grid.index(ncell) as u32;
        if dir.closed[nidx as usize] {
            continue;
        }
        let tentative = g_cur + step_cost;
        let known = dir.g[nidx as usize];
        if known.is_infinite() {
            dir.g[nidx as usize] = tentative;
            dir.parent[nidx as usize] = idx;
            let h = heuristic(ncell, target, cfg.heuristic);
            let f = priority(tentative, h, effective_weight(ncell, target, cfg), cfg.tie_break_p);
            dir.open.push(nidx, tentative, f, dir.seq);
            dir.seq += 1;
        } else if tentative < known - 1e-12 {
            dir.g[nidx as usize] = tentative;
            dir.parent[nidx as usize] = idx;
            let h = heuristic(ncell, target, cfg.heuristic);
            let f = priority(tentative, h, effective_weight(ncell, target, cfg), cfg.tie_break_p);
            dir.open.decrease(nidx, tentative, f, dir.seq);
            dir.seq += 1;
        }
    }
    counters.open_max = counters.open_max.max(dir.open.len() + other_open_len);
    Some(cell)
}

/// Plans a path from `start` to `goal`. The goal may be blocked or
/// unreachable; the result then carries the best-effort path (see
/// [`SearchResult::best_effort_cell`]).
pub fn plan(
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
    start: Cell,
    goal: Cell,
    cfg: &PlannerConfig,
) -> Result<SearchResult, SearchError> {
    let t0 = Instant::now();
    if !grid.in_bounds(start) {
        return Err(SearchError::StartOutOfBounds(start));
    }
    if !grid.in_bounds(goal) {
        return Err(SearchError::GoalOutOfBounds(goal));
    }
    if !traversable(grid, cm, cfg.use_clearance, start) {
        return Err(SearchError::StartBlocked(start));
    }

    if start == goal {
        return Ok(SearchResult {
            path: vec![start],
            reached_goal: true,
            best_effort_cell: None,
            expansions: 0,
            open_max: 0,
            wall_time_ms: ms_since(t0),
        });
    }

    let mut counters = PlanCounters { expansions: 0, open_max: 0 };
    let mut fwd = Direction::new(start, grid, cfg.use_binary_heap);
    // Best-effort fallback bookkeeping, forward direction only.
    let mut best_effort: (f64, f64, Cell) = (f64::INFINITY, f64::INFINITY, start);

    let mut bwd = if cfg.bidirectional && traversable(grid, cm, cfg.use_clearance, goal) {
        Some(Direction::new(goal, grid, cfg.use_binary_heap))
    } else {
        None
    };

    let mut meet: Option<Cell> = None;
    'outer: loop {
        // Forward step, aimed at the goal or at the opposite frontier.
        let fwd_target = match &bwd {
            Some(b) if b.alive => b.target(),
            _ => goal,
        };
        let bwd_open_len = bwd.as_ref().map_or(0, |b| b.open.len());
        match expand_one(&mut fwd, fwd_target, grid, cm, cfg, &mut counters, bwd_open_len) {
            Some(cell) => {
                let d = cell.euclidean(goal);
                let g = fwd.g[grid.index(cell)];
                if d < best_effort.0 - 1e-12
                    || ((d - best_effort.0).abs() <= 1e-12 && g < best_effort.1 - 1e-12)
                {
                    best_effort = (d, g, cell);
                }
                if cell == goal {
                    meet = Some(cell);
                    break 'outer;
                }
                if let Some(b) = &bwd {
                    if b.closed[grid.index(cell)] {
                        meet = Some(cell);
                        break 'outer;
                    }
                }
            }
            None => break 'outer, // forward exhausted: fall back
        }

        if let Some(b) = &mut bwd {
            if b.alive {
                let target = fwd.target();
                let fwd_open_len = fwd.open.len();
                if let Some(cell) =
                    expand_one(b, target, grid, cm, cfg, &mut counters, fwd_open_len)
                {
                    if fwd.closed[grid.index(cell)] {
                        meet = Some(cell);
                        break 'outer;
                    }
                }
                // When the backward search exhausts without meeting, the run
                // degrades into a unidirectional forward search on the goal.
            }
        }
    }

    let result = match meet {
        Some(m) => {
            let mut path: Vec<Cell> = fwd.chain_to_root(m, grid);
            path.reverse(); // start .. m
            if let Some(b) = &bwd {
                if b.closed[grid.index(m)] && m != goal {
                    // m .. goal, skipping the duplicated meeting cell.
                    let tail = b.chain_to_root(m, grid);
                    path.extend(tail.into_iter().skip(1));
                }
            }
            SearchResult {
                path,
                reached_goal: true,
                best_effort_cell: None,
                expansions: counters.expansions,
                open_max: counters.open_max,
                wall_time_ms: ms_since(t0),
            }
        }
        None => {
            let mut path = fwd.chain_to_root(best_effort.2, grid);
            path.reverse();
            SearchResult {
                path,
                reached_goal: false,
                best_effort_cell: Some(best_effort.2),
                expansions: counters.expansions,
                open_max: counters.open_max,
                wall_time_ms: ms_since(t0),
            }
        }
    };
    Ok(result)
}

fn ms_since(t0: Instant) -> f64 {
    t0.elapsed().as_secs_f64() * 1e3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clearance::ClearanceMatrix;

    fn empty(w: usize, h: usize) -> OccupancyGrid {
        OccupancyGrid::new(w, h, vec![false; w * h]).unwrap()
    }

    fn with_obstacles(w: usize, h: usize, obs: &[(i32, i32)]) -> OccupancyGrid {
        let mut cells = vec![false; w * h];
        for &(x, y) in obs {
            cells[y as usize * w + x as usize] = true;
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
    fn heuristic_values() {
        let a = Cell::new(0, 0);
        let b = Cell::new(3, 4);
        assert_eq!(heuristic(a, b, HeuristicKind::Euclidean), 5.0);
        assert_eq!(heuristic(a, b, HeuristicKind::Manhattan), 7.0);
        assert!((heuristic(a, b, HeuristicKind::Diagonal) - 5.242640687119286).abs() < 1e-12);
    }

    #[test]
    fn priority_arithmetic() {
        assert_eq!(priority(10.0, 5.0, 1.0, 0.0), 15.0);
        assert!((priority(10.0, 5.0, 1.0, 0.001) - 15.005).abs() < 1e-12);
        assert_eq!(priority(10.0, 0.0, 1.7, 0.003), 10.0);
    }

    #[test]
    fn effective_weight_branches() {
        let cfg = PlannerConfig {
            w_far: 1.5,
            w_near: 0.8,
            switch_distance: 10.0,
            ..PlannerConfig::default()
        };
        let target = Cell::new(0, 0);
        assert_eq!(effective_weight(Cell::new(3, 0), target, &cfg), 0.8);
        assert_eq!(effective_weight(Cell::new(30, 0), target, &cfg), 1.5);
        // Boundary is strict: exactly at the switch distance the far weight holds.
        assert_eq!(effective_weight(Cell::new(10, 0), target, &cfg), 1.5);
    }

    #[test]
    fn neighbor_rings() {
        let c = Cell::new(5, 5);
        let eight = neighbors(c, Neighborhood::Eight);
        assert_eq!(eight.len(), 8);
        assert_eq!(eight.iter().filter(|(_, c)| *c == 1.0).count(), 4);
        assert_eq!(eight.iter().filter(|(_, c)| *c == SQRT_2).count(), 4);
        assert_eq!(eight[0].0, Cell::new(6, 5));

        let sixteen = neighbors(c, Neighborhood::Sixteen);
        assert_eq!(sixteen.len(), 16);
        assert_eq!(sixteen.iter().filter(|(_, c)| *c == SQRT_5).count(), 8);
        assert_eq!(sixteen[8].0, Cell::new(7, 6));
        assert!((SQRT_5 - 5.0_f64.sqrt()).abs() < 1e-15);
        // Deterministic order.
        assert_eq!(neighbors(c, Neighborhood::Sixteen), sixteen);
    }

    #[test]
    fn knight_stone_lookup() {
        let from = Cell::new(4, 4);
        assert_eq!(
            knight_stones(from, Cell::new(6, 5)).unwrap(),
            [Cell::new(5, 4), Cell::new(5, 5)]
        );
        assert_eq!(
            knight_stones(from, Cell::new(3, 2)).unwrap(),
            [Cell::new(4, 3), Cell::new(3, 3)]
        );
        assert!(knight_stones(from, Cell::new(5, 5)).is_none());
        assert!(knight_stones(from, Cell::new(4, 5)).is_none());
    }

    #[test]
    fn unobstructed_diagonal() {
        let g = empty(5, 5);
        for use_heap in [true, false] {
            for bidirectional in [false, true] {
                let cfg = PlannerConfig { use_binary_heap: use_heap, bidirectional, ..cfg_plain() };
                let mut cm = ClearanceMatrix::new(&g, 0.0);
                let r = plan(&g, &mut cm, Cell::new(0, 0), Cell::new(4, 4), &cfg).unwrap();
                assert!(r.reached_goal);
                assert!((path_cost(&r.path) - 4.0 * SQRT_2).abs() < 1e-9);
                assert_eq!(r.path.first(), Some(&Cell::new(0, 0)));
                assert_eq!(r.path.last(), Some(&Cell::new(4, 4)));
            }
        }
    }

    #[test]
    fn start_equals_goal() {
        let g = empty(5, 5);
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        let r = plan(&g, &mut cm, Cell::new(2, 2), Cell::new(2, 2), &cfg_plain()).unwrap();
        assert!(r.reached_goal);
        assert_eq!(r.path, vec![Cell::new(2, 2)]);
        assert_eq!(r.expansions, 0);
    }

    #[test]
    fn start_errors() {
        let g = with_obstacles(5, 5, &[(0, 0)]);
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        assert!(matches!(
            plan(&g, &mut cm, Cell::new(0, 0), Cell::new(4, 4), &cfg_plain()),
            Err(SearchError::StartBlocked(_))
        ));
        assert!(matches!(
            plan(&g, &mut cm, Cell::new(-1, 0), Cell::new(4, 4), &cfg_plain()),
            Err(SearchError::StartOutOfBounds(_))
        ));
        assert!(matches!(
            plan(&g, &mut cm, Cell::new(1, 1), Cell::new(9, 0), &cfg_plain()),
            Err(SearchError::GoalOutOfBounds(_))
        ));
    }

    #[test]
    fn walled_goal_falls_back_to_nearest_cell() {
        // Goal boxed in at (8, 8); nearest reachable cell is on the wall ring.
        let mut obs = Vec::new();
        for x in 7..=9 {
            for y in 7..=9 {
                if (x, y) != (8, 8) {
                    obs.push((x, y));
                }
            }
        }
        let g = with_obstacles(12, 12, &obs);
        for bidirectional in [false, true] {
            let cfg = PlannerConfig { bidirectional, ..cfg_plain() };
            let mut cm = ClearanceMatrix::new(&g, 0.0);
            let r = plan(&g, &mut cm, Cell::new(0, 0), Cell::new(8, 8), &cfg).unwrap();
            assert!(!r.reached_goal);
            let best = r.best_effort_cell.unwrap();
            assert_eq!(r.path.last(), Some(&best));
            // Every free cell adjacent to the wall ring is sqrt(2)+ away; the
            // nearest reachable cells sit at distance 2 from the goal.
            assert!((best.euclidean(Cell::new(8, 8)) - 2.0).abs() < 1e-9, "best {best}");
        }
    }

    #[test]
    fn bidirectional_path_is_continuous_and_clear() {
        let g = with_obstacles(
            20,
            20,
            &[(5, 0), (5, 1), (5, 2), (5, 3), (5, 4), (10, 19), (10, 18), (10, 17)],
        );
        let cfg = PlannerConfig { bidirectional: true, ..cfg_plain() };
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        let r = plan(&g, &mut cm, Cell::new(0, 0), Cell::new(19, 19), &cfg).unwrap();
        assert!(r.reached_goal);
        assert_eq!(r.path[0], Cell::new(0, 0));
        assert_eq!(*r.path.last().unwrap(), Cell::new(19, 19));
        for w in r.path.windows(2) {
            let legal = neighbors(w[0], cfg.neighborhood)
                .iter()
                .any(|(c, _)| *c == w[1]);
            assert!(legal, "illegal move {} -> {}", w[0], w[1]);
            assert!(!g.is_obstacle(w[1]));
        }
    }

    #[test]
    fn sixteen_neighborhood_respects_stepping_stones() {
        // A diagonal wall with a knight-size gap: without the stepping-stone
        // rule the planner would jump straight through.
        let g = with_obstacles(9, 9, &[(4, 0), (4, 1), (4, 2), (4, 3), (4, 5), (4, 6), (4, 7), (4, 8)]);
        let cfg = PlannerConfig {
            neighborhood: Neighborhood::Sixteen,
            ..cfg_plain()
        };
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        let r = plan(&g, &mut cm, Cell::new(0, 4), Cell::new(8, 4), &cfg).unwrap();
        assert!(r.reached_goal);
        for w in r.path.windows(2) {
            if let Some(stones) = knight_stones(w[0], w[1]) {
                for s in stones {
                    assert!(!g.is_obstacle(s), "knight move passed through obstacle at {s}");
                }
            }
        }
    }

    #[test]
    fn heap_and_scan_agree_on_cost() {
        let g = with_obstacles(15, 15, &[(7, 3), (7, 4), (7, 5), (7, 6), (3, 10), (4, 10), (5, 10)]);
        let mut costs = Vec::new();
        for use_heap in [true, false] {
            let cfg = PlannerConfig { use_binary_heap: use_heap, ..cfg_plain() };
            let mut cm = ClearanceMatrix::new(&g, 0.0);
            let r = plan(&g, &mut cm, Cell::new(0, 0), Cell::new(14, 14), &cfg).unwrap();
            assert!(r.reached_goal);
            costs.push(path_cost(&r.path));
        }
        assert!((costs[0] - costs[1]).abs() < 1e-9);
    }

    #[test]
    fn lazy_clearance_resolves_only_visited_cells() {
        let g = empty(60, 60);
        let cfg = PlannerConfig {
            use_clearance: ClearanceMode::Lazy,
            bidirectional: false,
            ..PlannerConfig::default()
        };
        let mut cm = ClearanceMatrix::new(&g, 2.0);
        let r = plan(&g, &mut cm, Cell::new(5, 5), Cell::new(20, 5), &cfg).unwrap();
        assert!(r.reached_goal);
        assert!(cm.resolved_count() < g.cell_count());
        assert!(cm.resolved_count() > 0);
    }
}
