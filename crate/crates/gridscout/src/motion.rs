//! A* global planning and teleport-style path execution.
//!
//! Paths are shortest 4-connected routes over the planning map; execution
//! advances whole cells per time budget, so simulated time is always an
//! exact multiple of `resolution / v_max`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, CellState, OccupancyGrid};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlanConfig<S> {
    /// Maximum translational velocity in m/s.
    pub v_max: S,
    /// Treat Unknown cells as traversable (default: Free only).
    pub allow_unknown: bool,
    /// Inflate obstacles by one cell (8-neighborhood) before planning.
    pub inflate: bool,
}

impl<S: Scalar> Default for PlanConfig<S> {
    fn default() -> Self {
        PlanConfig {
            v_max: S::one(),
            allow_unknown: false,
            inflate: false,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no path from ({}, {}) to ({}, {})", start.row, start.col, goal.row, goal.col)]
    NoPath { start: Cell, goal: Cell },
    #[error("start cell ({}, {}) is not traversable", .0.row, .0.col)]
    InvalidStart(Cell),
}

/// Shortest path between two cells, start and goal inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedPath<S> {
    pub cells: Vec<Cell>,
    /// Metric length in meters: `(cells - 1) * resolution`.
    pub length: S,
    /// Traversal time in seconds at `v_max`.
    pub est_time: S,
}

impl<S: Scalar> PlannedPath<S> {
    pub fn goal(&self) -> Cell {
        *self.cells.last().expect("paths are non-empty")
    }
}

fn traversable<S: Scalar>(map: &OccupancyGrid<S>, cell: Cell, cfg: &PlanConfig<S>) -> bool {
    let open = |state: CellState| match state {
        CellState::Free => true,
        CellState::Unknown => cfg.allow_unknown,
        CellState::Occupied => false,
    };
    if !open(map.get(cell)) {
        return false;
    }
    if cfg.inflate {
        for n in map.neighbors8(cell) {
            if map.get(n) == CellState::Occupied {
                return false;
            }
        }
    }
    true
}

fn manhattan(a: Cell, b: Cell) -> u32 {
    (a.row.abs_diff(b.row) + a.col.abs_diff(b.col)) as u32
}

/// A* over the 4-connected grid with a Manhattan heuristic. Unit edge costs
/// make the result a true shortest path; ties break on (f, h, row, col) so
/// the returned path is deterministic.
pub fn plan<S: Scalar>(
    map: &OccupancyGrid<S>,
    start: Cell,
    goal: Cell,
    cfg: &PlanConfig<S>,
) -> Result<PlannedPath<S>, PlanError> {
    if !map.in_bounds(start) || !traversable(map, start, cfg) {
        return Err(PlanError::InvalidStart(start));
    }
    if !map.in_bounds(goal) || !traversable(map, goal, cfg) {
        return Err(PlanError::NoPath { start, goal });
    }

    const UNSEEN: u32 = u32::MAX;
    let n = map.len();
    let mut g = vec![UNSEEN; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap: BinaryHeap<Reverse<(u32, u32, usize, usize)>> = BinaryHeap::new();

    let start_i = map.index(start);
    let goal_i = map.index(goal);
    g[start_i] = 0;
    let h0 = manhattan(start, goal);
    heap.push(Reverse((h0, h0, start.row, start.col)));

    while let Some(Reverse((f, h, row, col))) = heap.pop() {
        let cell = Cell::new(row, col);
        let i = map.index(cell);
        if f - h != g[i] {
            continue; // stale entry
        }
        if i == goal_i {
            let mut cells = Vec::new();
            let mut at = goal_i;
            while at != usize::MAX {
                cells.push(map.cell_at(at));
                at = if at == start_i { usize::MAX } else { parent[at] };
            }
            cells.reverse();
            let length = S::from_count(cells.len() - 1) * map.resolution();
            return Ok(PlannedPath {
                cells,
                length,
                est_time: length / cfg.v_max,
            });
        }
        let ng = g[i] + 1;
        for nb in map.neighbors4(cell) {
            if !traversable(map, nb, cfg) {
                continue;
            }
            let ni = map.index(nb);
            if ng < g[ni] {
                g[ni] = ng;
                parent[ni] = i;
                let nh = manhattan(nb, goal);
                heap.push(Reverse((ng + nh, nh, nb.row, nb.col)));
            }
        }
    }
    Err(PlanError::NoPath { start, goal })
}

/// Result of advancing along a path for one time budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome<S> {
    /// Index into `path.cells` after the move.
    pub index: usize,
    /// Cell occupied after the move.
    pub cell: Cell,
    /// Simulated clock after the move.
    pub clock: S,
    /// Number of cells actually traversed.
    pub cells_moved: usize,
    /// True when the final path cell has been reached.
    pub done: bool,
}

/// Whole cells traversable within `budget` seconds at `v_max`.
///
/// The small epsilon compensates for binary representation of decimal
/// resolutions (e.g. `1.0 * 1.0 / 0.1` evaluating just below 10).
pub fn cells_for_budget<S: Scalar>(budget: S, v_max: S, resolution: S) -> usize {
    let exact = budget * v_max / resolution + S::lit(1e-9);
    exact.floor().to_usize().unwrap_or(0)
}

/// Teleports the robot up to `floor(budget * v_max / resolution)` cells
/// further along the path, advancing the clock by the time those cells take.
pub fn step_along<S: Scalar>(
    path: &PlannedPath<S>,
    from_index: usize,
    clock: S,
    budget: S,
    resolution: S,
    cfg: &PlanConfig<S>,
) -> StepOutcome<S> {
    assert!(budget > S::zero(), "budget must be positive");
    let last = path.cells.len() - 1;
    let from = from_index.min(last);
    let allowed = cells_for_budget(budget, cfg.v_max, resolution);
    let moved = allowed.min(last - from);
    let index = from + moved;
    StepOutcome {
        index,
        cell: path.cells[index],
        clock: clock + S::from_count(moved) * resolution / cfg.v_max,
        cells_moved: moved,
        done: index == last,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Pose;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    fn open_grid(w: usize, h: usize) -> OccupancyGrid<f64> {
        OccupancyGrid::new(w, h, 0.1, Pose::default(), CellState::Free)
    }

    /// Independent BFS oracle: shortest unit-cost distance or None.
    fn bfs_len(map: &OccupancyGrid<f64>, start: Cell, goal: Cell) -> Option<usize> {
        if map.get(start) != CellState::Free || map.get(goal) != CellState::Free {
            return None;
        }
        let mut dist = vec![usize::MAX; map.len()];
        let mut q = VecDeque::new();
        dist[map.index(start)] = 0;
        q.push_back(start);
        while let Some(c) = q.pop_front() {
            if c == goal {
                return Some(dist[map.index(c)]);
            }
            let d = dist[map.index(c)];
            for n in map.neighbors4(c) {
                if map.get(n) == CellState::Free && dist[map.index(n)] == usize::MAX {
                    dist[map.index(n)] = d + 1;
                    q.push_back(n);
                }
            }
        }
        None
    }

    #[test]
    fn straight_row_length() {
        let g = open_grid(10, 1);
        let p = plan(&g, Cell::new(0, 0), Cell::new(0, 9), &PlanConfig::default()).unwrap();
        assert_eq!(p.cells.len(), 10);
        assert!((p.length - 0.9).abs() < 1e-12);
        assert!((p.est_time - 0.9).abs() < 1e-12);
    }

    #[test]
    fn complete_wall_gives_no_path() {
        let mut g = open_grid(5, 5);
        g.fill_rect(0, 2, 4, 2, CellState::Occupied);
        let err = plan(&g, Cell::new(2, 0), Cell::new(2, 4), &PlanConfig::default()).unwrap_err();
        assert!(matches!(err, PlanError::NoPath { .. }));
    }

    #[test]
    fn occupied_start_is_invalid() {
        let mut g = open_grid(5, 5);
        g.set(Cell::new(1, 1), CellState::Occupied);
        let err = plan(&g, Cell::new(1, 1), Cell::new(4, 4), &PlanConfig::default()).unwrap_err();
        assert_eq!(err, PlanError::InvalidStart(Cell::new(1, 1)));
    }

    #[test]
    fn unknown_blocked_by_default_traversable_when_allowed() {
        let mut g = open_grid(3, 1);
        g.set(Cell::new(0, 1), CellState::Unknown);
        let cfg = PlanConfig::default();
        assert!(plan(&g, Cell::new(0, 0), Cell::new(0, 2), &cfg).is_err());
        let open = PlanConfig {
            allow_unknown: true,
            ..cfg
        };
        assert!(plan(&g, Cell::new(0, 0), Cell::new(0, 2), &open).is_ok());
    }

    #[test]
    fn inflation_keeps_clearance_from_walls() {
        // 5-wide corridor with a wall along row 0: inflated plans stay off row 1
        let mut g = open_grid(12, 5);
        g.fill_rect(0, 0, 0, 11, CellState::Occupied);
        let cfg = PlanConfig {
            inflate: true,
            ..PlanConfig::default()
        };
        let p = plan(&g, Cell::new(2, 0), Cell::new(2, 11), &cfg).unwrap();
        assert!(p.cells.iter().all(|c| c.row >= 2));
    }

    #[test]
    fn matches_bfs_oracle_on_random_mazes() {
        let cfg = PlanConfig::default();
        let mut solvable = 0;
        let mut blocked = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = open_grid(32, 32);
            for i in 0..g.len() {
                if rng.random_bool(0.3) {
                    let cell = g.cell_at(i);
                    g.set(cell, CellState::Occupied);
                }
            }
            let free: Vec<Cell> = (0..g.len())
                .map(|i| g.cell_at(i))
                .filter(|&c| g.get(c) == CellState::Free)
                .collect();
            let start = free[rng.random_range(0..free.len())];
            let goal = free[rng.random_range(0..free.len())];
            match (plan(&g, start, goal, &cfg), bfs_len(&g, start, goal)) {
                (Ok(p), Some(d)) => {
                    assert_eq!(p.cells.len() - 1, d, "seed {seed}");
                    solvable += 1;
                }
                (Err(PlanError::NoPath { .. }), None) => blocked += 1,
                (got, want) => panic!("seed {seed}: A* {got:?} vs BFS {want:?}"),
            }
        }
        assert!(solvable > 0 && blocked > 0, "want both outcomes exercised");
    }

    #[test]
    fn path_cells_adjacent_and_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut g = open_grid(24, 24);
        for i in 0..g.len() {
            if rng.random_bool(0.25) {
                let cell = g.cell_at(i);
                g.set(cell, CellState::Occupied);
            }
        }
        g.set(Cell::new(0, 0), CellState::Free);
        g.set(Cell::new(23, 23), CellState::Free);
        if let Ok(p) = plan(&g, Cell::new(0, 0), Cell::new(23, 23), &PlanConfig::default()) {
            for w in p.cells.windows(2) {
                assert_eq!(manhattan(w[0], w[1]), 1);
            }
            assert!(p.cells.iter().all(|&c| g.get(c) == CellState::Free));
        }
    }

    #[test]
    fn unit_budget_advances_one_cell() {
        let g = open_grid(10, 1);
        let p = plan(&g, Cell::new(0, 0), Cell::new(0, 9), &PlanConfig::default()).unwrap();
        let out = step_along(&p, 0, 0.0, 0.1, 0.1, &PlanConfig::default());
        assert_eq!(out.cells_moved, 1);
        assert_eq!(out.cell, Cell::new(0, 1));
        assert!(!out.done);
    }

    #[test]
    fn one_second_budget_covers_ten_cells() {
        // guards the floating-point floor: 1.0 * 1.0 / 0.1 must count as 10
        assert_eq!(cells_for_budget(1.0f64, 1.0, 0.1), 10);
        assert_eq!(cells_for_budget(1.0f32, 1.0, 0.1), 10);
        assert_eq!(cells_for_budget(0.05f64, 1.0, 0.1), 0);
    }

    #[test]
    fn budget_covering_remaining_path_finishes_at_goal() {
        let g = open_grid(5, 1);
        let p = plan(&g, Cell::new(0, 0), Cell::new(0, 4), &PlanConfig::default()).unwrap();
        let out = step_along(&p, 2, 1.0, 5.0, 0.1, &PlanConfig::default());
        assert!(out.done);
        assert_eq!(out.cell, Cell::new(0, 4));
        assert_eq!(out.cells_moved, 2);
        assert!((out.clock - 1.2).abs() < 1e-12);
    }

    #[test]
    fn ten_meter_path_takes_ten_simulated_seconds() {
        let g = open_grid(101, 1);
        let p = plan(&g, Cell::new(0, 0), Cell::new(0, 100), &PlanConfig::default()).unwrap();
        assert!((p.length - 10.0).abs() < 1e-9);
        let mut clock = 0.0f64;
        let mut idx = 0usize;
        let cfg = PlanConfig::default();
        while idx < 100 {
            let out = step_along(&p, idx, clock, 1.0, 0.1, &cfg);
            idx = out.index;
            clock = out.clock;
        }
        assert!((clock - 10.0).abs() < 1e-9, "clock was {clock}");
    }
}
