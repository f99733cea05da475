//! LIDAR simulation against ground truth, local-map updates, and map merging.
//!
//! A scan sweeps `rays` equally spaced bearings, walking each Bresenham line
//! outward from the pose cell until the first wall or range exhaustion. A
//! final pass keeps only cells whose *direct* line back to the pose is clear,
//! so every observed cell satisfies strict line-of-sight regardless of which
//! ray reached it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, CellState, OccupancyGrid, Pose};
use crate::scalar::Scalar;

/// 360° range sensor parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SensorSpec<S> {
    /// Maximum range in meters.
    pub range: S,
    /// Rays per full sweep.
    pub rays: usize,
}

impl<S: Scalar> Default for SensorSpec<S> {
    fn default() -> Self {
        SensorSpec {
            range: S::lit(7.0),
            rays: 720,
        }
    }
}

impl<S: Scalar> SensorSpec<S> {
    pub fn validate(&self) -> Result<(), SenseError> {
        if self.range <= S::zero() {
            return Err(SenseError::InvalidSpec("range must be positive".into()));
        }
        if self.rays < 8 {
            return Err(SenseError::InvalidSpec("need at least 8 rays".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SenseError {
    #[error("scan pose ({x}, {y}) is occupied or out of bounds")]
    InvalidPose { x: f64, y: f64 },
    #[error("invalid sensor spec: {0}")]
    InvalidSpec(String),
    #[error("map dimensions differ")]
    DimensionMismatch,
    #[error("maps disagree on known cell index {0}")]
    ConsistencyError(usize),
}

/// Cells observed by one scan, as sorted row-major indices into the truth
/// grid. The two sets are disjoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanResult {
    pub width: usize,
    pub height: usize,
    pub observed_free: Vec<usize>,
    pub observed_occupied: Vec<usize>,
}

/// Integer Bresenham line from `a` to `b` inclusive; may step diagonally.
pub struct BresenhamIter {
    x: isize,
    y: isize,
    x1: isize,
    y1: isize,
    dx: isize,
    dy: isize,
    sx: isize,
    sy: isize,
    err: isize,
    finished: bool,
}

/// Points are `(row, col)` pairs.
pub fn bresenham(a: (isize, isize), b: (isize, isize)) -> BresenhamIter {
    let dx = (b.1 - a.1).abs();
    let dy = -(b.0 - a.0).abs();
    BresenhamIter {
        x: a.1,
        y: a.0,
        x1: b.1,
        y1: b.0,
        dx,
        dy,
        sx: if a.1 < b.1 { 1 } else { -1 },
        sy: if a.0 < b.0 { 1 } else { -1 },
        err: dx + dy,
        finished: false,
    }
}

impl Iterator for BresenhamIter {
    type Item = (isize, isize);

    fn next(&mut self) -> Option<(isize, isize)> {
        if self.finished {
            return None;
        }
        let out = (self.y, self.x);
        if self.x == self.x1 && self.y == self.y1 {
            self.finished = true;
        } else {
            let e2 = 2 * self.err;
            if e2 >= self.dy {
                self.err += self.dy;
                self.x += self.sx;
            }
            if e2 <= self.dx {
                self.err += self.dx;
                self.y += self.sy;
            }
        }
        Some(out)
    }
}

/// True when every cell strictly between `from` and `to` on the direct
/// Bresenham line is Free.
pub fn line_of_sight<S: Scalar>(truth: &OccupancyGrid<S>, from: Cell, to: Cell) -> bool {
    let a = (from.row as isize, from.col as isize);
    let b = (to.row as isize, to.col as isize);
    for (r, c) in bresenham(a, b) {
        if (r, c) == a || (r, c) == b {
            continue;
        }
        let cell = Cell::new(r as usize, c as usize);
        if truth.get(cell) != CellState::Free {
            return false;
        }
    }
    true
}

/// Simulates one 360° scan from `pose` against the ground-truth map.
pub fn simulate_scan<S: Scalar>(
    pose: &Pose<S>,
    spec: &SensorSpec<S>,
    truth: &OccupancyGrid<S>,
) -> Result<ScanResult, SenseError> {
    spec.validate()?;
    let invalid = || SenseError::InvalidPose {
        x: pose.x.as_f64(),
        y: pose.y.as_f64(),
    };
    let c0 = truth.world_to_cell(pose).map_err(|_| invalid())?;
    if truth.get(c0) != CellState::Free {
        return Err(invalid());
    }

    let range_cells = spec.range / truth.resolution();
    let range_sq = range_cells * range_cells + S::lit(1e-9);
    let (row0, col0) = (c0.row as isize, c0.col as isize);
    let mut candidate = vec![false; truth.len()];

    let two_pi = S::lit(std::f64::consts::TAU);
    let rays_s = S::from_count(spec.rays);
    for k in 0..spec.rays {
        let theta = two_pi * S::from_count(k) / rays_s;
        // endpoint in continuous cell coordinates, one cell past the range
        // so the last in-range cell is never cut short by flooring
        let reach = range_cells + S::one();
        let ec = S::from_count(c0.col) + S::lit(0.5) + reach * theta.cos();
        let er = S::from_count(c0.row) + S::lit(0.5) + reach * theta.sin();
        let end = (
            er.floor().to_isize().unwrap_or(row0),
            ec.floor().to_isize().unwrap_or(col0),
        );
        for (r, c) in bresenham((row0, col0), end) {
            if r < 0 || c < 0 || r as usize >= truth.height() || c as usize >= truth.width() {
                break;
            }
            let dr = r - row0;
            let dc = c - col0;
            let dist_sq = S::from_f64((dr * dr + dc * dc) as f64).expect("cell distance");
            if dist_sq > range_sq {
                break;
            }
            let cell = Cell::new(r as usize, c as usize);
            match truth.get(cell) {
                CellState::Free => candidate[truth.index(cell)] = true,
                CellState::Occupied => {
                    candidate[truth.index(cell)] = true;
                    break;
                }
                CellState::Unknown => break, // opaque; truth maps should not contain these
            }
        }
    }

    let mut observed_free = Vec::new();
    let mut observed_occupied = Vec::new();
    for (i, &hit) in candidate.iter().enumerate() {
        if !hit {
            continue;
        }
        let cell = truth.cell_at(i);
        if cell != c0 && !line_of_sight(truth, c0, cell) {
            continue;
        }
        match truth.get(cell) {
            CellState::Free => observed_free.push(i),
            CellState::Occupied => observed_occupied.push(i),
            CellState::Unknown => {}
        }
    }
    Ok(ScanResult {
        width: truth.width(),
        height: truth.height(),
        observed_free,
        observed_occupied,
    })
}

/// Writes a scan into a robot's local map. Returns the sorted indices of
/// cells that were Unknown before this update.
pub fn update_local_map<S: Scalar>(
    local: &mut OccupancyGrid<S>,
    scan: &ScanResult,
) -> Result<Vec<usize>, SenseError> {
    if local.width() != scan.width || local.height() != scan.height {
        return Err(SenseError::DimensionMismatch);
    }
    let mut newly_known = Vec::new();
    for (&idx, state) in scan
        .observed_free
        .iter()
        .zip(std::iter::repeat(CellState::Free))
        .chain(
            scan.observed_occupied
                .iter()
                .zip(std::iter::repeat(CellState::Occupied)),
        )
    {
        let cell = local.cell_at(idx);
        if local.get(cell) == CellState::Unknown {
            newly_known.push(idx);
        }
        local.set(cell, state);
    }
    newly_known.sort_unstable();
    Ok(newly_known)
}

/// Cell-wise join of consistent partial maps sharing one world frame.
pub fn merge_maps<S: Scalar>(locals: &[&OccupancyGrid<S>]) -> Result<OccupancyGrid<S>, SenseError> {
    let first = locals.first().ok_or(SenseError::DimensionMismatch)?;
    let mut merged = OccupancyGrid::new(
        first.width(),
        first.height(),
        first.resolution(),
        first.origin(),
        CellState::Unknown,
    );
    for local in locals {
        merge_into(&mut merged, local, (0, 0))?;
    }
    Ok(merged)
}

/// Joins `other` into `base`, translating by whole cells:
/// `base[(r + dr, c + dc)] ⊔= other[(r, c)]`. Cells falling outside `base`
/// are skipped (partial overlap between frames).
pub fn merge_into<S: Scalar>(
    base: &mut OccupancyGrid<S>,
    other: &OccupancyGrid<S>,
    offset: (isize, isize),
) -> Result<(), SenseError> {
    if offset == (0, 0)
        && (base.width() != other.width() || base.height() != other.height())
    {
        return Err(SenseError::DimensionMismatch);
    }
    for i in 0..other.len() {
        let cell = other.cell_at(i);
        let state = other.get(cell);
        if state == CellState::Unknown {
            continue;
        }
        let r = cell.row as isize + offset.0;
        let c = cell.col as isize + offset.1;
        if r < 0 || c < 0 || r as usize >= base.height() || c as usize >= base.width() {
            continue;
        }
        let target = Cell::new(r as usize, c as usize);
        match base.get(target) {
            CellState::Unknown => base.set(target, state),
            existing if existing == state => {}
            _ => return Err(SenseError::ConsistencyError(base.index(target))),
        }
    }
    Ok(())
}
