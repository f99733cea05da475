//! Procedural scenario generation and the six built-in evaluation maps.
//!
//! Scenarios are ternary ground-truth grids (Free/Occupied only) with spawn
//! poses and a generation record. Every emitted scenario satisfies: fully
//! occupied boundary ring, all spawns Free, and a single 4-connected free
//! component.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, CellState, OccupancyGrid, Pose};
use crate::map_io::{self, MapIoError};
use crate::scalar::Scalar;

/// Cells per meter everywhere in the built-ins.
pub const DEFAULT_RESOLUTION: f64 = 0.1;
/// Boundary wall thickness, cells.
const BORDER: usize = 2;

pub const BUILTIN_NAMES: [&str; 6] = ["loop", "corridor", "corner", "room", "comb1", "comb2"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown builtin scenario name {0:?}")]
    UnknownName(String),
    #[error("infeasible spec: {0}")]
    Infeasible(String),
    #[error("infeasible spec at batch index {index}: {reason}")]
    InfeasibleAt { index: usize, reason: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] MapIoError),
}

/// Robot spawn placement regime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum SpawnMode<S> {
    /// Mutually distant free cells (BFS eccentricity).
    Far,
    /// All robots within 1 m of an open anchor cell.
    Close,
    /// Caller-supplied poses, validated against the grid.
    Explicit { poses: Vec<Pose<S>> },
}

/// Kind-specific generation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GenParams<S> {
    /// Free ring of `ring_width` meters around a central block.
    Loop { ring_width: S },
    /// Two open spaces joined by a single passage of `width` meters through
    /// a `length`-meter-thick dividing wall.
    Corridor { width: S, length: S },
    /// `count` wall partitions of up to `max_size` meters, seeding small
    /// corners along the walls.
    Corner { count: usize, max_size: S },
    /// `count` square rooms of `size` meters with one 1 m door each.
    Rooms { count: usize, size: S },
    /// Elements placed on a 2x2 quadrant lattice, seams carved open.
    Combination { elements: Vec<GenParams<S>> },
}

impl<S> GenParams<S> {
    pub fn kind_name(&self) -> &'static str {
        match self {
            GenParams::Loop { .. } => "loop",
            GenParams::Corridor { .. } => "corridor",
            GenParams::Corner { .. } => "corner",
            GenParams::Rooms { .. } => "rooms",
            GenParams::Combination { .. } => "combination",
        }
    }
}

/// Full generation request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec<S> {
    /// Map extent in meters (width, height).
    pub extent: (S, S),
    pub resolution: S,
    pub seed: u64,
    pub params: GenParams<S>,
    pub robots: usize,
    pub spawn_mode: SpawnMode<S>,
}

impl<S: Scalar> GenSpec<S> {
    pub fn new(params: GenParams<S>, extent_m: (f64, f64), seed: u64) -> Self {
        GenSpec {
            extent: (S::lit(extent_m.0), S::lit(extent_m.1)),
            resolution: S::lit(DEFAULT_RESOLUTION),
            seed,
            params,
            robots: 2,
            spawn_mode: SpawnMode::Far,
        }
    }
}

/// Record of how a scenario came to be, for the JSON sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenRecord<S> {
    pub kind: String,
    pub seed: u64,
    pub extent: (S, S),
    pub resolution: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<S> {
    pub name: String,
    pub ground_truth: OccupancyGrid<S>,
    pub spawns: Vec<Pose<S>>,
    pub gen_params: GenRecord<S>,
}

fn cells<S: Scalar>(meters: S, resolution: S) -> usize {
    (meters / resolution + S::lit(0.5))
        .floor()
        .to_usize()
        .unwrap_or(0)
}

/// Bordered all-free canvas.
fn base_grid<S: Scalar>(width: usize, height: usize, resolution: S) -> OccupancyGrid<S> {
    let mut g = OccupancyGrid::new(width, height, resolution, Pose::default(), CellState::Free);
    g.fill_rect(0, 0, BORDER - 1, width - 1, CellState::Occupied);
    g.fill_rect(height - BORDER, 0, height - 1, width - 1, CellState::Occupied);
    g.fill_rect(0, 0, height - 1, BORDER - 1, CellState::Occupied);
    g.fill_rect(0, width - BORDER, height - 1, width - 1, CellState::Occupied);
    g
}

fn free_cells<S: Scalar>(g: &OccupancyGrid<S>) -> Vec<Cell> {
    (0..g.len())
        .map(|i| g.cell_at(i))
        .filter(|&c| g.get(c) == CellState::Free)
        .collect()
}

/// Flood-fill check: every Free cell reachable from `start` by 4-adjacency.
pub fn free_space_connected<S: Scalar>(g: &OccupancyGrid<S>, start: Cell) -> bool {
    if g.get(start) != CellState::Free {
        return false;
    }
    let total = g.count(CellState::Free);
    let mut seen = vec![false; g.len()];
    let mut reached = 0usize;
    let mut queue = VecDeque::from([start]);
    seen[g.index(start)] = true;
    while let Some(cell) = queue.pop_front() {
        reached += 1;
        for nb in g.neighbors4(cell) {
            let i = g.index(nb);
            if g.get(nb) == CellState::Free && !seen[i] {
                seen[i] = true;
                queue.push_back(nb);
            }
        }
    }
    reached == total
}

/// Checks all scenario invariants: occupied boundary ring, Free spawns,
/// single connected free component containing spawn 0.
pub fn validate_scenario<S: Scalar>(sc: &Scenario<S>) -> Result<(), ScenarioError> {
    let g = &sc.ground_truth;
    let (w, h) = (g.width(), g.height());
    for c in 0..w {
        for r in [0, h - 1] {
            if g.get(Cell::new(r, c)) != CellState::Occupied {
                return Err(ScenarioError::Invalid(format!(
                    "boundary cell ({r}, {c}) is not occupied"
                )));
            }
        }
    }
    for r in 0..h {
        for c in [0, w - 1] {
            if g.get(Cell::new(r, c)) != CellState::Occupied {
                return Err(ScenarioError::Invalid(format!(
                    "boundary cell ({r}, {c}) is not occupied"
                )));
            }
        }
    }
    if sc.spawns.is_empty() {
        return Err(ScenarioError::Invalid("no spawns".into()));
    }
    let mut cells = Vec::new();
    for (i, p) in sc.spawns.iter().enumerate() {
        let cell = g
            .world_to_cell(p)
            .map_err(|e| ScenarioError::Invalid(format!("spawn {i}: {e}")))?;
        if g.get(cell) != CellState::Free {
            return Err(ScenarioError::Invalid(format!("spawn {i} is not on a Free cell")));
        }
        cells.push(cell);
    }
    if !free_space_connected(g, cells[0]) {
        return Err(ScenarioError::Invalid(
            "free space is not a single connected component".into(),
        ));
    }
    Ok(())
}

/// BFS distances in cells from `start` over Free cells (map-agnostic copy
/// kept local to avoid a dependency cycle with exploration).
fn bfs_field<S: Scalar>(g: &OccupancyGrid<S>, start: Cell) -> Vec<u32> {
    let mut dist = vec![u32::MAX; g.len()];
    if g.get(start) != CellState::Free {
        return dist;
    }
    let mut queue = VecDeque::from([start]);
    dist[g.index(start)] = 0;
    while let Some(cell) = queue.pop_front() {
        let d = dist[g.index(cell)];
        for nb in g.neighbors4(cell) {
            let i = g.index(nb);
            if g.get(nb) == CellState::Free && dist[i] == u32::MAX {
                dist[i] = d + 1;
                queue.push_back(nb);
            }
        }
    }
    dist
}

fn farthest<S: Scalar>(g: &OccupancyGrid<S>, from: Cell) -> Cell {
    let dist = bfs_field(g, from);
    let mut best = from;
    let mut best_d = 0u32;
    for (i, &d) in dist.iter().enumerate() {
        if d != u32::MAX && d > best_d {
            best_d = d;
            best = g.cell_at(i);
        }
    }
    best
}

/// Places `robots` spawn poses according to `mode`.
pub fn place_spawns<S: Scalar>(
    g: &OccupancyGrid<S>,
    mode: &SpawnMode<S>,
    robots: usize,
) -> Result<Vec<Pose<S>>, ScenarioError> {
    if robots == 0 {
        return Err(ScenarioError::Infeasible("need at least one robot".into()));
    }
    let free = free_cells(g);
    if free.is_empty() {
        return Err(ScenarioError::Infeasible("no free cells to spawn on".into()));
    }
    let cells = match mode {
        SpawnMode::Explicit { poses } => {
            if poses.len() != robots {
                return Err(ScenarioError::Infeasible(format!(
                    "{} explicit poses for {robots} robots",
                    poses.len()
                )));
            }
            return Ok(poses.clone());
        }
        SpawnMode::Far => {
            // double-sweep diameter approximation, then greedy max-min
            let a = farthest(g, free[0]);
            let b = farthest(g, a);
            let mut chosen = vec![a];
            if robots > 1 {
                chosen.push(b);
            }
            let mut fields: Vec<Vec<u32>> =
                chosen.iter().map(|&c| bfs_field(g, c)).collect();
            while chosen.len() < robots {
                let mut best: Option<(u32, usize)> = None;
                for i in 0..g.len() {
                    if g.get(g.cell_at(i)) != CellState::Free {
                        continue;
                    }
                    let d = fields.iter().map(|f| f[i]).min().unwrap_or(u32::MAX);
                    if d == u32::MAX {
                        continue;
                    }
                    if best.is_none_or(|(bd, bi)| (d, std::cmp::Reverse(i)) > (bd, std::cmp::Reverse(bi))) {
                        best = Some((d, i));
                    }
                }
                let (_, i) = best.ok_or_else(|| {
                    ScenarioError::Infeasible("not enough reachable free cells".into())
                })?;
                let cell = g.cell_at(i);
                fields.push(bfs_field(g, cell));
                chosen.push(cell);
            }
            chosen
        }
        SpawnMode::Close => {
            // anchor at the free cell nearest the map center, neighbors after
            let center = Cell::new(g.height() / 2, g.width() / 2);
            let anchor = *free
                .iter()
                .min_by_key(|c| {
                    let dr = c.row as isize - center.row as isize;
                    let dc = c.col as isize - center.col as isize;
                    (dr * dr + dc * dc, c.row, c.col)
                })
                .expect("free non-empty");
            let dist = bfs_field(g, anchor);
            let mut ring: Vec<(u32, usize)> = (0..g.len())
                .filter(|&i| dist[i] >= 1 && dist[i] <= 10)
                .map(|i| (dist[i], i))
                .collect();
            ring.sort_unstable();
            let mut chosen = vec![anchor];
            for &(_, i) in &ring {
                if chosen.len() == robots {
                    break;
                }
                chosen.push(g.cell_at(i));
            }
            if chosen.len() < robots {
                return Err(ScenarioError::Infeasible(
                    "not enough free cells within 1 m for close spawns".into(),
                ));
            }
            chosen
        }
    };
    Ok(cells.into_iter().map(|c| g.cell_to_world(c)).collect())
}

fn build_loop<S: Scalar>(
    g: &mut OccupancyGrid<S>,
    ring_width: S,
) -> Result<(), ScenarioError> {
    let w = cells(ring_width, g.resolution());
    if w < 3 {
        return Err(ScenarioError::Infeasible("loop ring narrower than 0.3 m".into()));
    }
    let (width, height) = (g.width(), g.height());
    let r0 = BORDER + w;
    let c0 = BORDER + w;
    let r1 = height.checked_sub(BORDER + w + 1);
    let c1 = width.checked_sub(BORDER + w + 1);
    match (r1, c1) {
        (Some(r1), Some(c1)) if r0 + 3 <= r1 && c0 + 3 <= c1 => {
            g.fill_rect(r0, c0, r1, c1, CellState::Occupied);
            Ok(())
        }
        _ => Err(ScenarioError::Infeasible(
            "extent too small for a loop of this ring width".into(),
        )),
    }
}

fn build_corridor<S: Scalar>(
    g: &mut OccupancyGrid<S>,
    width_m: S,
    length_m: S,
    passage_row: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<(), ScenarioError> {
    let res = g.resolution();
    let pw = cells(width_m, res);
    let pl = cells(length_m, res);
    if pw < 3 {
        return Err(ScenarioError::Infeasible(
            "corridor narrower than robot footprint + 2 cells".into(),
        ));
    }
    let (width, height) = (g.width(), g.height());
    if pl + 2 * (BORDER + pw) >= width || height <= 2 * BORDER + pw {
        return Err(ScenarioError::Infeasible("extent too small for corridor".into()));
    }
    let c0 = (width - pl) / 2;
    let c1 = c0 + pl - 1;
    g.fill_rect(0, c0, height - 1, c1, CellState::Occupied);
    let max_row = height - BORDER - pw;
    let r0 = passage_row.unwrap_or_else(|| rng.random_range(BORDER..max_row));
    g.fill_rect(r0, c0, r0 + pw - 1, c1, CellState::Free);
    Ok(())
}

fn build_corners<S: Scalar>(
    g: &mut OccupancyGrid<S>,
    count: usize,
    max_size: S,
    rng: &mut ChaCha8Rng,
) -> Result<(), ScenarioError> {
    let res = g.resolution();
    let max_depth = cells(max_size, res).max(10);
    let (width, height) = (g.width(), g.height());
    // keep partitions clear of the opposite wall so two facing ones cannot seal
    let cap_v = (height / 2).saturating_sub(BORDER + 5);
    let cap_h = (width / 2).saturating_sub(BORDER + 5);
    if cap_v < 10 || cap_h < 10 {
        return Err(ScenarioError::Infeasible("extent too small for corner clutter".into()));
    }
    for _ in 0..count {
        let depth = rng.random_range(10..=max_depth);
        let thick = rng.random_range(2..=6);
        match rng.random_range(0..4u8) {
            0 => {
                // from the top wall, downward
                let d = depth.min(cap_v);
                let c = rng.random_range(BORDER..width - BORDER - thick);
                g.fill_rect(BORDER, c, BORDER + d - 1, c + thick - 1, CellState::Occupied);
            }
            1 => {
                let d = depth.min(cap_v);
                let c = rng.random_range(BORDER..width - BORDER - thick);
                g.fill_rect(height - BORDER - d, c, height - BORDER - 1, c + thick - 1, CellState::Occupied);
            }
            2 => {
                let d = depth.min(cap_h);
                let r = rng.random_range(BORDER..height - BORDER - thick);
                g.fill_rect(r, BORDER, r + thick - 1, BORDER + d - 1, CellState::Occupied);
            }
            _ => {
                let d = depth.min(cap_h);
                let r = rng.random_range(BORDER..height - BORDER - thick);
                g.fill_rect(r, width - BORDER - d, r + thick - 1, width - BORDER - 1, CellState::Occupied);
            }
        }
    }
    Ok(())
}

/// One walled room with a door gap. Interior spans `size` cells; walls sit
/// just outside the interior unless flush with the map border.
fn carve_room<S: Scalar>(
    g: &mut OccupancyGrid<S>,
    r0: usize,
    c0: usize,
    size: usize,
    door_side: u8,
    door_off: usize,
) {
    let r1 = r0 + size - 1;
    let c1 = c0 + size - 1;
    // wall ring around the interior
    let wr0 = r0.saturating_sub(1);
    let wc0 = c0.saturating_sub(1);
    let wr1 = r1 + 1;
    let wc1 = c1 + 1;
    g.fill_rect(wr0, wc0, wr0, wc1, CellState::Occupied);
    g.fill_rect(wr1, wc0, wr1, wc1, CellState::Occupied);
    g.fill_rect(wr0, wc0, wr1, wc0, CellState::Occupied);
    g.fill_rect(wr0, wc1, wr1, wc1, CellState::Occupied);
    g.fill_rect(r0, c0, r1, c1, CellState::Free);
    let door = 10; // 1 m
    match door_side {
        0 => g.fill_rect(wr0, c0 + door_off, wr0, c0 + door_off + door - 1, CellState::Free),
        1 => g.fill_rect(wr1, c0 + door_off, wr1, c0 + door_off + door - 1, CellState::Free),
        2 => g.fill_rect(r0 + door_off, wc0, r0 + door_off + door - 1, wc0, CellState::Free),
        _ => g.fill_rect(r0 + door_off, wc1, r0 + door_off + door - 1, wc1, CellState::Free),
    }
}

fn build_rooms<S: Scalar>(
    g: &mut OccupancyGrid<S>,
    count: usize,
    size_m: S,
    rng: &mut ChaCha8Rng,
) -> Result<(), ScenarioError> {
    let res = g.resolution();
    let size = cells(size_m, res);
    if size < 12 {
        return Err(ScenarioError::Infeasible("rooms smaller than 1.2 m".into()));
    }
    let (width, height) = (g.width(), g.height());
    let margin = 6; // hallway clearance between room walls
    if height < 2 * BORDER + size + 2 + 2 * margin || width < 2 * BORDER + size + 2 + 2 * margin {
        return Err(ScenarioError::Infeasible("extent too small for rooms of this size".into()));
    }
    let mut placed: Vec<(usize, usize)> = Vec::new();
    for _ in 0..count {
        let mut ok = false;
        for _try in 0..200 {
            let r0 = rng.random_range(BORDER + 1..height - BORDER - size - 1);
            let c0 = rng.random_range(BORDER + 1..width - BORDER - size - 1);
            let clash = placed.iter().any(|&(pr, pc)| {
                (r0 as isize - pr as isize).abs() < (size + 2 + margin) as isize
                    && (c0 as isize - pc as isize).abs() < (size + 2 + margin) as isize
            });
            if clash {
                continue;
            }
            let door_side = rng.random_range(0..4u8);
            let door_off = rng.random_range(1..size - 10);
            carve_room(g, r0, c0, size, door_side, door_off);
            placed.push((r0, c0));
            ok = true;
            break;
        }
        if !ok {
            return Err(ScenarioError::Infeasible(format!(
                "could not place {count} rooms of {size} cells"
            )));
        }
    }
    Ok(())
}

fn generate_grid<S: Scalar>(
    params: &GenParams<S>,
    width: usize,
    height: usize,
    resolution: S,
    rng: &mut ChaCha8Rng,
) -> Result<OccupancyGrid<S>, ScenarioError> {
    let mut g = base_grid(width, height, resolution);
    match params {
        GenParams::Loop { ring_width } => build_loop(&mut g, *ring_width)?,
        GenParams::Corridor { width, length } => {
            build_corridor(&mut g, *width, *length, None, rng)?
        }
        GenParams::Corner { count, max_size } => build_corners(&mut g, *count, *max_size, rng)?,
        GenParams::Rooms { count, size } => build_rooms(&mut g, *count, *size, rng)?,
        GenParams::Combination { elements } => {
            if elements.is_empty() || elements.len() > 4 {
                return Err(ScenarioError::Infeasible(
                    "combination supports 1-4 elements".into(),
                ));
            }
            // 2x2 lattice of sub-scenarios, seams carved open afterwards
            let qw = width / 2;
            let qh = height / 2;
            for (i, el) in elements.iter().enumerate() {
                if matches!(el, GenParams::Combination { .. }) {
                    return Err(ScenarioError::Infeasible("nested combinations".into()));
                }
                let sub = generate_grid(el, qw, qh, resolution, rng)?;
                let (r_off, c_off) = [(0, 0), (0, qw), (qh, 0), (qh, qw)][i];
                for idx in 0..sub.len() {
                    let cell = sub.cell_at(idx);
                    g.set(
                        Cell::new(cell.row + r_off, cell.col + c_off),
                        sub.get(cell),
                    );
                }
            }
            // remaining quadrants stay open halls; re-wall the outer ring
            let last_r = height - 1;
            let last_c = width - 1;
            g.fill_rect(0, 0, BORDER - 1, last_c, CellState::Occupied);
            g.fill_rect(height - BORDER, 0, last_r, last_c, CellState::Occupied);
            g.fill_rect(0, 0, last_r, BORDER - 1, CellState::Occupied);
            g.fill_rect(0, width - BORDER, last_r, last_c, CellState::Occupied);
            carve_seams(&mut g, qw, qh)?;
        }
    }
    Ok(g)
}

/// Opens 2 m passages across the two lattice seams. Tries offsets around
/// each seam midpoint until the carve joins free space on both sides.
fn carve_seams<S: Scalar>(
    g: &mut OccupancyGrid<S>,
    qw: usize,
    qh: usize,
) -> Result<(), ScenarioError> {
    let gap = 20; // 2 m
    let reach = 40; // how far to look for free space either side, cells
    let (width, height) = (g.width(), g.height());
    // vertical seam at col qw: carve horizontal strip for each half
    for (r_lo, r_hi) in [(BORDER, qh), (qh, height - BORDER)] {
        let mid = (r_lo + r_hi) / 2;
        let offsets = offset_sequence(mid, r_lo, r_hi.saturating_sub(gap));
        let mut done = false;
        for r0 in offsets {
            if carve_across(g, true, qw, r0, gap, reach) {
                done = true;
                break;
            }
        }
        if !done {
            return Err(ScenarioError::Infeasible("cannot open vertical seam".into()));
        }
    }
    for (c_lo, c_hi) in [(BORDER, qw), (qw, width - BORDER)] {
        let mid = (c_lo + c_hi) / 2;
        let offsets = offset_sequence(mid, c_lo, c_hi.saturating_sub(gap));
        let mut done = false;
        for c0 in offsets {
            if carve_across(g, false, qh, c0, gap, reach) {
                done = true;
                break;
            }
        }
        if !done {
            return Err(ScenarioError::Infeasible("cannot open horizontal seam".into()));
        }
    }
    Ok(())
}

fn offset_sequence(mid: usize, lo: usize, hi: usize) -> Vec<usize> {
    let mut v = Vec::new();
    for d in 0..((hi.saturating_sub(lo)) / 5 + 1) {
        for cand in [mid.saturating_sub(5 * d), mid + 5 * d] {
            if cand >= lo && cand <= hi && !v.contains(&cand) {
                v.push(cand);
            }
        }
    }
    v
}

/// Carves a `gap`-wide strip crossing the seam line until free cells are
/// reached on both sides; false when no free space lies within reach.
fn carve_across<S: Scalar>(
    g: &mut OccupancyGrid<S>,
    vertical_seam: bool,
    seam: usize,
    strip0: usize,
    gap: usize,
    reach: usize,
) -> bool {
    let probe = |g: &OccupancyGrid<S>, towards_neg: bool| -> Option<usize> {
        for d in 0..reach {
            let line = if towards_neg {
                seam.checked_sub(d + 1)?
            } else {
                seam + d
            };
            for k in strip0..strip0 + gap {
                let cell = if vertical_seam {
                    Cell::new(k, line)
                } else {
                    Cell::new(line, k)
                };
                if !g.in_bounds(cell) {
                    return None;
                }
                if g.get(cell) == CellState::Free {
                    return Some(line);
                }
            }
        }
        None
    };
    let (Some(a), Some(b)) = (probe(g, true), probe(g, false)) else {
        return false;
    };
    let (lo, hi) = (a.min(b), a.max(b));
    for line in lo..=hi {
        for k in strip0..strip0 + gap {
            let cell = if vertical_seam {
                Cell::new(k, line)
            } else {
                Cell::new(line, k)
            };
            g.set(cell, CellState::Free);
        }
    }
    true
}

/// Generates a scenario from a spec. Deterministic for a fixed spec.
pub fn generate<S: Scalar>(spec: &GenSpec<S>) -> Result<Scenario<S>, ScenarioError> {
    let five = S::lit(5.0);
    if spec.extent.0 < five || spec.extent.1 < five {
        return Err(ScenarioError::Infeasible("extent must be at least 5x5 m".into()));
    }
    if spec.resolution <= S::zero() {
        return Err(ScenarioError::Infeasible("resolution must be positive".into()));
    }
    let width = cells(spec.extent.0, spec.resolution);
    let height = cells(spec.extent.1, spec.resolution);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // retry clutter layouts that happen to seal off space
    let mut last_err = None;
    for _attempt in 0..25 {
        let grid = generate_grid(&spec.params, width, height, spec.resolution, &mut rng)?;
        let spawns = match place_spawns(&grid, &spec.spawn_mode, spec.robots) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let scenario = Scenario {
            name: format!("{}:{}", spec.params.kind_name(), spec.seed),
            ground_truth: grid,
            spawns,
            gen_params: GenRecord {
                kind: spec.params.kind_name().into(),
                seed: spec.seed,
                extent: spec.extent,
                resolution: spec.resolution,
            },
        };
        match validate_scenario(&scenario) {
            Ok(()) => return Ok(scenario),
            Err(e) => last_err = Some(e),
        }
    }
    Err(ScenarioError::Infeasible(format!(
        "no valid layout after 25 attempts: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Generates `n` scenarios from a template, seeds `base_seed..base_seed+n`.
pub fn batch_generate<S: Scalar>(
    template: &GenSpec<S>,
    n: usize,
    base_seed: u64,
) -> Result<Vec<Scenario<S>>, ScenarioError> {
    (0..n)
        .map(|i| {
            let mut spec = template.clone();
            spec.seed = base_seed + i as u64;
            generate(&spec).map_err(|e| ScenarioError::InfeasibleAt {
                index: i,
                reason: e.to_string(),
            })
        })
        .collect()
}

/// The fixed geometry behind `builtin`: cell-space construction at 0.1 m.
fn builtin_grid<S: Scalar>(name: &str) -> Result<OccupancyGrid<S>, ScenarioError> {
    let res = S::lit(DEFAULT_RESOLUTION);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    match name {
        // 20x20 m^2 square loop: free ring 4 m wide around a central block
        "loop" => {
            let mut g = base_grid(200, 200, res);
            build_loop(&mut g, S::lit(4.0))?;
            Ok(g)
        }
        // two 7x20 m^2 spaces joined by a 6 m long, 2 m wide corridor
        "corridor" => {
            let mut g = base_grid(200, 200, res);
            build_corridor(&mut g, S::lit(2.0), S::lit(6.0), Some(90), &mut rng)?;
            Ok(g)
        }
        // 20x20 m^2 hall cluttered with wall partitions forming corners
        "corner" => {
            let mut g = base_grid(200, 200, res);
            build_corners(&mut g, 14, S::lit(3.0), &mut rng)?;
            Ok(g)
        }
        // five 6x6 m^2 rooms: four in the corners, one central
        "room" => {
            let mut g = base_grid(200, 200, res);
            carve_room(&mut g, 3, 3, 60, 3, 20);
            carve_room(&mut g, 3, 137, 60, 2, 20);
            carve_room(&mut g, 137, 3, 60, 3, 20);
            carve_room(&mut g, 137, 137, 60, 2, 20);
            carve_room(&mut g, 70, 70, 60, 0, 25);
            Ok(g)
        }
        // square loop with four 1.8 m corridors leading to a center chamber
        "comb1" => {
            let mut g = base_grid(200, 200, res);
            build_loop(&mut g, S::lit(4.0))?;
            g.fill_rect(80, 80, 119, 119, CellState::Free); // chamber
            g.fill_rect(42, 91, 79, 108, CellState::Free); // north corridor
            g.fill_rect(120, 91, 157, 108, CellState::Free); // south
            g.fill_rect(91, 42, 108, 79, CellState::Free); // west
            g.fill_rect(91, 120, 108, 157, CellState::Free); // east
            Ok(g)
        }
        // four rooms plus fixed wall partitions studding the halls with corners
        "comb2" => {
            let mut g = base_grid(200, 200, res);
            carve_room(&mut g, 3, 3, 60, 3, 20);
            carve_room(&mut g, 3, 137, 60, 2, 20);
            carve_room(&mut g, 137, 3, 60, 3, 20);
            carve_room(&mut g, 137, 137, 60, 2, 20);
            for (r0, c0, r1, c1) in [
                (2usize, 95usize, 30usize, 98usize), // stub from the top wall
                (170, 101, 197, 104),                // from the bottom wall
                (95, 2, 98, 30),                     // from the left wall
                (101, 170, 104, 197),                // from the right wall
                (80, 80, 83, 110),                   // free-standing angles mid-hall
                (80, 84, 100, 87),
                (116, 89, 119, 119),
                (99, 112, 119, 115),
            ] {
                g.fill_rect(r0, c0, r1, c1, CellState::Occupied);
            }
            Ok(g)
        }
        other => Err(ScenarioError::UnknownName(other.into())),
    }
}

/// One of the six built-in evaluation scenarios:
/// `loop | corridor | corner | room | comb1 | comb2`.
pub fn builtin<S: Scalar>(name: &str) -> Result<Scenario<S>, ScenarioError> {
    let grid = builtin_grid(name)?;
    let spawns = place_spawns(&grid, &SpawnMode::Far, 2)?;
    let scenario = Scenario {
        name: name.to_string(),
        ground_truth: grid,
        spawns,
        gen_params: GenRecord {
            kind: format!("builtin:{name}"),
            seed: 0,
            extent: (S::lit(20.0), S::lit(20.0)),
            resolution: S::lit(DEFAULT_RESOLUTION),
        },
    };
    validate_scenario(&scenario).expect("builtin scenarios are valid by construction");
    Ok(scenario)
}

/// Sidecar record stored next to the map files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioMeta<S> {
    pub name: String,
    pub spawns: Vec<Pose<S>>,
    pub gen_params: GenRecord<S>,
}

/// Writes `stem.pgm`, `stem.yaml`, and `stem.json`; returns the JSON path.
pub fn save_scenario<S: Scalar>(
    sc: &Scenario<S>,
    stem: &Path,
) -> Result<PathBuf, ScenarioError> {
    map_io::save_map(&sc.ground_truth, stem)?;
    let meta = ScenarioMeta {
        name: sc.name.clone(),
        spawns: sc.spawns.clone(),
        gen_params: sc.gen_params.clone(),
    };
    let json_path = stem.with_extension("json");
    let text = serde_json::to_string_pretty(&meta)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    std::fs::write(&json_path, text).map_err(MapIoError::Io)?;
    Ok(json_path)
}

/// Loads a scenario saved by `save_scenario`, given any of its three paths.
pub fn load_scenario<S: Scalar>(path: &Path) -> Result<Scenario<S>, ScenarioError> {
    let stem = path.with_extension("");
    let grid = map_io::load_map(&stem.with_extension("yaml"))?;
    let text = std::fs::read_to_string(stem.with_extension("json")).map_err(MapIoError::Io)?;
    let meta: ScenarioMeta<S> =
        serde_json::from_str(&text).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let scenario = Scenario {
        name: meta.name,
        ground_truth: grid,
        spawns: meta.spawns,
        gen_params: meta.gen_params,
    };
    validate_scenario(&scenario)?;
    Ok(scenario)
}
