//! Shared fixtures and independent oracles for the integration tests.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridscout::{Cell, CellState, OccupancyGrid, Pose};

/// Serializes the acceptance criteria so their runtime budgets are measured
/// without interference.
pub static GATE: Mutex<()> = Mutex::new(());

/// Runs one acceptance criterion, printing a single pass/fail line and
/// enforcing its runtime budget.
pub fn criterion(n: usize, name: &str, budget_s: Option<f64>, body: impl FnOnce()) {
    let _guard = GATE.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body));
    let dt = start.elapsed().as_secs_f64();
    let budget = budget_s
        .map(|b| format!(" (budget {b:.0} s)"))
        .unwrap_or_default();
    let overran = budget_s.is_some_and(|b| dt > b);
    match (&result, overran) {
        (Ok(()), false) => println!("criterion {n} [{name}]: PASS in {dt:.2} s{budget}"),
        (Ok(()), true) => println!("criterion {n} [{name}]: FAIL — overran {dt:.2} s{budget}"),
        (Err(_), _) => println!("criterion {n} [{name}]: FAIL after {dt:.2} s{budget}"),
    }
    if let Err(payload) = result {
        std::panic::resume_unwind(payload);
    }
    if let Some(b) = budget_s {
        assert!(dt <= b, "criterion {n} overran its runtime budget: {dt:.2} s > {b} s");
    }
}

pub fn open_grid(w: usize, h: usize) -> OccupancyGrid<f64> {
    OccupancyGrid::new(w, h, 0.1, Pose::default(), CellState::Free)
}

/// Random indoor-style map: open field with solid rectangular obstacles,
/// patched so no two walls meet only at a corner (such pinch points make
/// Bresenham and continuous visibility legitimately diverge).
pub fn random_rectilinear_map(seed: u64, side: usize, rects: std::ops::Range<usize>) -> OccupancyGrid<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = open_grid(side, side);
    let last = side - 1;
    for _ in 0..rng.random_range(rects) {
        let r0 = rng.random_range(2..side - 8);
        let c0 = rng.random_range(2..side - 8);
        let h = rng.random_range(2..7);
        let w = rng.random_range(2..7);
        g.fill_rect(r0, c0, (r0 + h).min(side - 3), (c0 + w).min(side - 3), CellState::Occupied);
    }
    loop {
        let mut patches = Vec::new();
        for r in 0..last {
            for c in 0..last {
                let occ = |rr: usize, cc: usize| g.get(Cell::new(rr, cc)) == CellState::Occupied;
                if occ(r, c) && occ(r + 1, c + 1) && !occ(r, c + 1) && !occ(r + 1, c) {
                    patches.push(Cell::new(r, c + 1));
                }
                if occ(r, c + 1) && occ(r + 1, c) && !occ(r, c) && !occ(r + 1, c + 1) {
                    patches.push(Cell::new(r, c));
                }
            }
        }
        if patches.is_empty() {
            break;
        }
        for cell in patches {
            g.set(cell, CellState::Occupied);
        }
    }
    g
}

/// Dense visibility oracle: 3600 rays, each traversed with an exact
/// grid-intersection walk, so no cell the continuous ray crosses is skipped.
pub fn dense_oracle(truth: &OccupancyGrid<f64>, c0: Cell, range: f64) -> Vec<usize> {
    let range_cells = range / truth.resolution();
    let range_sq = range_cells * range_cells + 1e-9;
    let mut hit = vec![false; truth.len()];
    for k in 0..3600 {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / 3600.0;
        let (dx, dy) = (theta.cos(), theta.sin());
        let (mut r, mut c) = (c0.row as isize, c0.col as isize);
        let step_c: isize = if dx > 0.0 { 1 } else { -1 };
        let step_r: isize = if dy > 0.0 { 1 } else { -1 };
        let mut t_max_c = if dx != 0.0 { 0.5 / dx.abs() } else { f64::INFINITY };
        let mut t_max_r = if dy != 0.0 { 0.5 / dy.abs() } else { f64::INFINITY };
        let t_delta_c = if dx != 0.0 { 1.0 / dx.abs() } else { f64::INFINITY };
        let t_delta_r = if dy != 0.0 { 1.0 / dy.abs() } else { f64::INFINITY };
        loop {
            if r < 0 || c < 0 || r as usize >= truth.height() || c as usize >= truth.width() {
                break;
            }
            let dr = r - c0.row as isize;
            let dc = c - c0.col as isize;
            if ((dr * dr + dc * dc) as f64) > range_sq {
                break;
            }
            let cell = Cell::new(r as usize, c as usize);
            hit[truth.index(cell)] = true;
            if truth.get(cell) != CellState::Free {
                break;
            }
            // on an exact corner tie take the column first (never cuts corners)
            if t_max_c <= t_max_r {
                t_max_c += t_delta_c;
                c += step_c;
            } else {
                t_max_r += t_delta_r;
                r += step_r;
            }
        }
    }
    hit.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect()
}

/// Shortest 4-connected unit-cost distance, or None when unreachable.
pub fn bfs_len(map: &OccupancyGrid<f64>, start: Cell, goal: Cell) -> Option<usize> {
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

/// Random 32x32 partial map (Free/Occupied/Unknown) for frontier checks.
pub fn random_partial_map(seed: u64) -> OccupancyGrid<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = OccupancyGrid::new(32, 32, 0.1, Pose::default(), CellState::Unknown);
    for _ in 0..rng.random_range(3..7) {
        let r0 = rng.random_range(0..28);
        let c0 = rng.random_range(0..28);
        let state = if rng.random_bool(0.7) {
            CellState::Free
        } else {
            CellState::Occupied
        };
        g.fill_rect(r0, c0, r0 + rng.random_range(2..8), c0 + rng.random_range(2..8), state);
    }
    g
}

/// Random 32x32 obstacle field plus a start/goal pair of free cells.
pub fn random_maze(seed: u64) -> (OccupancyGrid<f64>, Cell, Cell) {
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
    (g, start, goal)
}
