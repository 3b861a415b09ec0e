//! Vehicle-volume traversability over the occupancy grid.
//!
//! A cell is traversable only when no obstacle lies within the vehicle's
//! footprint radius of it. Verdicts live in a tri-state matrix
//! (`-1` impassable, `0` unknown, `1` traversable) that is resolved lazily:
//! the planner pays the disc scan only for cells it actually visits.
//! [`ClearanceMatrix::precompute_all`] keeps the eager full-grid variant
//! around for comparison runs; it re-derives every verdict by scanning the
//! stored obstacle list per cell, which is deliberately the naive approach.
//!
//! Area outside the map counts as obstacle, so cells whose clearance disc
//! crosses the boundary are impassable (exempt at radius 0, where the matrix
//! reduces to the raw raster).

use serde::{Deserialize, Serialize};

use crate::map_io::{Cell, OccupancyGrid};

/// Per-cell resolution state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellState {
    Impassable,
    Unknown,
    Traversable,
}

/// Which clearance path the planner uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClearanceMode {
    /// Resolve cells on demand during search.
    Lazy,
    /// Resolve the whole grid up front (slow baseline).
    Eager,
    /// Ignore vehicle volume; raw obstacle raster only.
    Off,
}

#[derive(Debug, thiserror::Error)]
pub enum ClearanceError {
    #[error("cell {0} outside the grid")]
    OutOfBounds(Cell),
}

/// Lazily resolved clearance verdicts for one grid and one radius.
#[derive(Debug)]
pub struct ClearanceMatrix<'g> {
    grid: &'g OccupancyGrid,
    radius: f64,
    states: Vec<i8>,
    resolved: usize,
    /// Integer offsets with dx^2 + dy^2 <= radius^2.
    disc: Vec<(i32, i32)>,
}

impl<'g> ClearanceMatrix<'g> {
    /// An all-unknown matrix; verdicts appear as cells get queried.
    pub fn new(grid: &'g OccupancyGrid, radius: f64) -> Self {
        assert!(radius >= 0.0, "radius must be non-negative");
        let r = radius.floor() as i32;
        let r2 = radius * radius;
        let mut disc = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if f64::from(dx * dx + dy * dy) <= r2 {
                    disc.push((dx, dy));
                }
            }
        }
        ClearanceMatrix {
            grid,
            radius,
            states: vec![0; grid.cell_count()],
            resolved: 0,
            disc,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn grid(&self) -> &OccupancyGrid {
        self.grid
    }

    /// Cached state of a cell without resolving it.
    pub fn state(&self, cell: Cell) -> Result<CellState, ClearanceError> {
        if !self.grid.in_bounds(cell) {
            return Err(ClearanceError::OutOfBounds(cell));
        }
        Ok(match self.states[self.grid.index(cell)] {
            -1 => CellState::Impassable,
            0 => CellState::Unknown,
            _ => CellState::Traversable,
        })
    }

    /// Number of cells whose verdict has been computed.
    pub fn resolved_count(&self) -> usize {
        self.resolved
    }

    /// Returns the clearance verdict, resolving and caching it on first use.
    /// `true` means traversable.
    pub fn query(&mut self, cell: Cell) -> Result<bool, ClearanceError> {
        if !self.grid.in_bounds(cell) {
            return Err(ClearanceError::OutOfBounds(cell));
        }
        let idx = self.grid.index(cell);
        match self.states[idx] {
            -1 => return Ok(false),
            1 => return Ok(true),
            _ => {}
        }
        let verdict = self.scan_disc(cell);
        self.states[idx] = if verdict { 1 } else { -1 };
        self.resolved += 1;
        Ok(verdict)
    }

    /// Disc scan around `cell`; out-of-bounds points count as obstacles.
    fn scan_disc(&self, cell: Cell) -> bool {
        for &(dx, dy) in &self.disc {
            let p = Cell::new(cell.x + dx, cell.y + dy);
            if !self.grid.in_bounds(p) || self.grid.is_obstacle(p) {
                return false;
            }
        }
        true
    }

    /// Resolves every cell up front by scanning the full obstacle list per
    /// cell, the way the eager baseline loads its map. Agrees with
    /// [`ClearanceMatrix::query`] on every cell.
    pub fn precompute_all(grid: &'g OccupancyGrid, radius: f64) -> Self {
        assert!(radius >= 0.0, "radius must be non-negative");
        let obstacles = grid.obstacle_cells();
        let r2 = radius * radius;
        let w = grid.width();
        let h = grid.height();
        let mut states = vec![0i8; grid.cell_count()];
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                let idx = y as usize * w + x as usize;
                // Boundary rule: some in-disc point falls off the map iff the
                // nearest outside point (always axis-aligned) is within radius.
                let edge = (x + 1).min(y + 1).min(w as i32 - x).min(h as i32 - y);
                let mut blocked = f64::from(edge) <= radius;
                if !blocked {
                    for o in &obstacles {
                        let dx = f64::from(o.x - x);
                        let dy = f64::from(o.y - y);
                        if dx * dx + dy * dy <= r2 {
                            blocked = true;
                            break;
                        }
                    }
                }
                states[idx] = if blocked { -1 } else { 1 };
            }
        }
        let resolved = states.len();
        let mut cm = ClearanceMatrix::new(grid, radius);
        cm.states = states;
        cm.resolved = resolved;
        cm
    }
}

/// The traversability predicate shared by the planner and the test oracles,
/// so both search exactly the same move graph.
pub fn traversable(
    grid: &OccupancyGrid,
    cm: &mut ClearanceMatrix<'_>,
    mode: ClearanceMode,
    cell: Cell,
) -> bool {
    if !grid.in_bounds(cell) {
        return false;
    }
    match mode {
        ClearanceMode::Off => !grid.is_obstacle(cell),
        ClearanceMode::Lazy | ClearanceMode::Eager => cm.query(cell).unwrap_or(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

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

    #[test]
    fn empty_grid_center_is_traversable() {
        let g = empty(20, 20);
        let mut cm = ClearanceMatrix::new(&g, 2.0);
        assert!(cm.query(Cell::new(10, 10)).unwrap());
        assert_eq!(cm.resolved_count(), 1);
    }

    #[test]
    fn neighbor_of_obstacle_is_impassable() {
        let g = with_obstacles(20, 20, &[(10, 10)]);
        let mut cm = ClearanceMatrix::new(&g, 2.0);
        assert!(!cm.query(Cell::new(10, 11)).unwrap());
    }

    #[test]
    fn out_of_bounds_query_errors() {
        let g = empty(5, 5);
        let mut cm = ClearanceMatrix::new(&g, 1.0);
        assert!(matches!(
            cm.query(Cell::new(5, 0)),
            Err(ClearanceError::OutOfBounds(_))
        ));
        assert!(matches!(
            cm.query(Cell::new(0, -1)),
            Err(ClearanceError::OutOfBounds(_))
        ));
    }

    #[test]
    fn lazy_matches_brute_force_single_obstacle() {
        let g = with_obstacles(20, 20, &[(10, 10)]);
        let r = 2.0;
        let mut cm = ClearanceMatrix::new(&g, r);
        for y in 0..20 {
            for x in 0..20 {
                let c = Cell::new(x, y);
                let free = cm.query(c).unwrap();
                // Brute force: distance to the one obstacle plus boundary margin.
                let d2 = f64::from((x - 10) * (x - 10) + (y - 10) * (y - 10));
                let edge = (x + 1).min(y + 1).min(20 - x).min(20 - y);
                let expect_blocked = d2 <= r * r || f64::from(edge) <= r;
                assert_eq!(free, !expect_blocked, "cell {c}");
            }
        }
        assert_eq!(cm.resolved_count(), 400);
    }

    #[test]
    fn eager_all_free_and_all_blocked() {
        let g = empty(8, 8);
        let cm = ClearanceMatrix::precompute_all(&g, 0.0);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(cm.state(Cell::new(x, y)).unwrap(), CellState::Traversable);
            }
        }
        let g = OccupancyGrid::new(8, 8, vec![true; 64]).unwrap();
        let cm = ClearanceMatrix::precompute_all(&g, 0.0);
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(cm.state(Cell::new(x, y)).unwrap(), CellState::Impassable);
            }
        }
    }

    #[test]
    fn radius_zero_is_raw_raster() {
        let g = with_obstacles(6, 6, &[(0, 0), (3, 2), (5, 5)]);
        let mut cm = ClearanceMatrix::new(&g, 0.0);
        for y in 0..6 {
            for x in 0..6 {
                let c = Cell::new(x, y);
                assert_eq!(cm.query(c).unwrap(), !g.is_obstacle(c), "cell {c}");
            }
        }
    }

    #[test]
    fn monotone_resolution_never_flips() {
        let g = with_obstacles(10, 10, &[(4, 4)]);
        let mut cm = ClearanceMatrix::new(&g, 1.5);
        let c = Cell::new(4, 5);
        let first = cm.query(c).unwrap();
        let resolved = cm.resolved_count();
        for _ in 0..5 {
            assert_eq!(cm.query(c).unwrap(), first);
        }
        assert_eq!(cm.resolved_count(), resolved);
    }

    proptest::proptest! {
        /// Lazy per-cell queries agree with the eager obstacle-list scan on
        /// random grids, for every cell and several radii.
        #[test]
        fn lazy_eager_equivalence(
            w in 10usize..50,
            h in 10usize..50,
            seed in 0u64..500,
            radius in 0usize..5,
        ) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(7);
            let mut cells = Vec::with_capacity(w * h);
            for _ in 0..w * h {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                cells.push((state >> 61) == 0); // ~1/8 obstacle density
            }
            let g = OccupancyGrid::new(w, h, cells).unwrap();
            let r = radius as f64;
            let eager = ClearanceMatrix::precompute_all(&g, r);
            let mut lazy = ClearanceMatrix::new(&g, r);
            for y in 0..h as i32 {
                for x in 0..w as i32 {
                    let c = Cell::new(x, y);
                    let want = eager.state(c).unwrap() == CellState::Traversable;
                    proptest::prop_assert_eq!(lazy.query(c).unwrap(), want, "cell {}", c);
                }
            }
        }

        /// A cell impassable at radius r stays impassable at any larger radius.
        #[test]
        fn impassable_is_monotone_in_radius(seed in 0u64..300) {
            let w = 15usize;
            let h = 15usize;
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(13);
            let mut cells = vec![false; w * h];
            for c in cells.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                *c = (state >> 61) == 0;
            }
            let g = OccupancyGrid::new(w, h, cells).unwrap();
            let radii = [0.0, 1.0, 2.0, 3.0];
            let mats: Vec<_> = radii.iter().map(|&r| ClearanceMatrix::precompute_all(&g, r)).collect();
            for y in 0..h as i32 {
                for x in 0..w as i32 {
                    let c = Cell::new(x, y);
                    let mut blocked_before = false;
                    for m in &mats {
                        let blocked = m.state(c).unwrap() == CellState::Impassable;
                        proptest::prop_assert!(blocked || !blocked_before, "cell {} flipped back", c);
                        blocked_before = blocked;
                    }
                }
            }
        }
    }
}
