//! Frontier detection and the four goal-selection strategies.
//!
//! All strategies share one shape: (merged map, robot poses, self id) in,
//! goal pose out. The `*_goal` variants take a precomputed frontier list so
//! the engine can detect once per round and fan out to every robot; the
//! spec-level entry points (`cost_strategy`, ...) detect internally.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Cell, CellState, OccupancyGrid, Pose};
use crate::scalar::Scalar;
use crate::sensing::bresenham;

/// Attraction decay length for the potential-field strategy, meters.
pub const LAMBDA_D: f64 = 3.0;
/// Repulsion decay length for the potential-field strategy, meters.
pub const LAMBDA_R: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("no reachable frontier remains")]
    NoFrontier,
}

/// Frontier detection parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FrontierConfig<S> {
    /// Sensor range used for the information-gain disk, meters.
    pub sensor_range: S,
    /// Clusters smaller than this are discarded (raycast speckle).
    pub min_cluster: usize,
}

impl<S: Scalar> Default for FrontierConfig<S> {
    fn default() -> Self {
        FrontierConfig {
            sensor_range: S::lit(7.0),
            min_cluster: 3,
        }
    }
}

/// One frontier cluster: Free cells bordering Unknown space, connected
/// under 8-adjacency.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frontier {
    /// Sorted row-major indices of the member cells.
    pub cells: Vec<usize>,
    /// The member cell closest to the cluster's arithmetic mean.
    pub centroid: Cell,
    /// Unknown cells within sensor range of the centroid.
    pub gain: usize,
}

/// Everything a strategy may look at.
#[derive(Clone, Copy, Debug)]
pub struct StrategyInput<'a, S> {
    pub merged_map: &'a OccupancyGrid<S>,
    pub poses: &'a [Pose<S>],
    /// Index of the deciding robot in `poses`.
    pub robot: usize,
}

impl<'a, S: Scalar> StrategyInput<'a, S> {
    fn self_cell(&self) -> Result<Cell, StrategyError> {
        self.merged_map
            .world_to_cell(&self.poses[self.robot])
            .map_err(|_| StrategyError::NoFrontier)
    }
}

/// Selection strategy, by external name.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Cost,
    Sample,
    Field,
    Goal,
}

impl std::str::FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cost" => Ok(StrategyKind::Cost),
            "sample" => Ok(StrategyKind::Sample),
            "field" => Ok(StrategyKind::Field),
            "goal" => Ok(StrategyKind::Goal),
            other => Err(format!("unknown strategy {other:?} (expected cost|sample|field|goal)")),
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(match self {
            StrategyKind::Cost => "cost",
            StrategyKind::Sample => "sample",
            StrategyKind::Field => "field",
            StrategyKind::Goal => "goal",
        })
    }
}

pub const ALL_STRATEGIES: [StrategyKind; 4] = [
    StrategyKind::Cost,
    StrategyKind::Sample,
    StrategyKind::Field,
    StrategyKind::Goal,
];

/// Finds all frontier clusters in a partial map.
///
/// A frontier cell is Free and 4-adjacent to at least one Unknown cell;
/// clusters are 8-connected components, returned sorted by centroid index.
pub fn detect_frontiers<S: Scalar>(
    map: &OccupancyGrid<S>,
    cfg: &FrontierConfig<S>,
) -> Vec<Frontier> {
    let n = map.len();
    let mut is_frontier = vec![false; n];
    for (i, flag) in is_frontier.iter_mut().enumerate() {
        let cell = map.cell_at(i);
        if map.get(cell) != CellState::Free {
            continue;
        }
        if map
            .neighbors4(cell)
            .any(|nb| map.get(nb) == CellState::Unknown)
        {
            *flag = true;
        }
    }

    // row-wise prefix sums of the Unknown indicator, for O(rows) disk gains
    let w = map.width();
    let mut prefix = vec![0u32; (w + 1) * map.height()];
    for r in 0..map.height() {
        let base = r * (w + 1);
        for c in 0..w {
            let unknown = (map.get(Cell::new(r, c)) == CellState::Unknown) as u32;
            prefix[base + c + 1] = prefix[base + c] + unknown;
        }
    }
    let range_cells = (cfg.sensor_range / map.resolution()).as_f64();
    let range_sq = range_cells * range_cells + 1e-9;
    let gain_at = |center: Cell| -> usize {
        let mut total = 0u32;
        let reach = range_cells.floor() as isize;
        for dr in -reach..=reach {
            let r = center.row as isize + dr;
            if r < 0 || r as usize >= map.height() {
                continue;
            }
            let half = (range_sq - (dr * dr) as f64).sqrt().floor() as isize;
            let lo = (center.col as isize - half).max(0) as usize;
            let hi = (center.col as isize + half).min(w as isize - 1) as usize;
            let base = r as usize * (w + 1);
            total += prefix[base + hi + 1] - prefix[base + lo];
        }
        total as usize
    };

    let mut visited = vec![false; n];
    let mut frontiers = Vec::new();
    for i in 0..n {
        if !is_frontier[i] || visited[i] {
            continue;
        }
        let mut cells = Vec::new();
        let mut queue = VecDeque::from([i]);
        visited[i] = true;
        while let Some(j) = queue.pop_front() {
            cells.push(j);
            for nb in map.neighbors8(map.cell_at(j)) {
                let k = map.index(nb);
                if is_frontier[k] && !visited[k] {
                    visited[k] = true;
                    queue.push_back(k);
                }
            }
        }
        if cells.len() < cfg.min_cluster {
            continue;
        }
        cells.sort_unstable();
        let mean_row = cells.iter().map(|&j| map.cell_at(j).row).sum::<usize>() as f64
            / cells.len() as f64;
        let mean_col = cells.iter().map(|&j| map.cell_at(j).col).sum::<usize>() as f64
            / cells.len() as f64;
        let centroid = cells
            .iter()
            .map(|&j| map.cell_at(j))
            .min_by(|a, b| {
                let da = (a.row as f64 - mean_row).powi(2) + (a.col as f64 - mean_col).powi(2);
                let db = (b.row as f64 - mean_row).powi(2) + (b.col as f64 - mean_col).powi(2);
                da.partial_cmp(&db)
                    .unwrap()
                    .then_with(|| (a.row, a.col).cmp(&(b.row, b.col)))
            })
            .expect("non-empty cluster");
        frontiers.push(Frontier {
            cells,
            centroid,
            gain: gain_at(centroid),
        });
    }
    frontiers.sort_by_key(|f| map.index(f.centroid));
    frontiers
}

/// BFS distance field (in cells) over Free space from `start`;
/// `u32::MAX` marks unreachable cells.
pub fn bfs_distances<S: Scalar>(map: &OccupancyGrid<S>, start: Cell) -> Vec<u32> {
    let mut dist = vec![u32::MAX; map.len()];
    if map.get(start) != CellState::Free {
        return dist;
    }
    let mut queue = VecDeque::from([start]);
    dist[map.index(start)] = 0;
    while let Some(cell) = queue.pop_front() {
        let d = dist[map.index(cell)];
        for nb in map.neighbors4(cell) {
            let i = map.index(nb);
            if map.get(nb) == CellState::Free && dist[i] == u32::MAX {
                dist[i] = d + 1;
                queue.push_back(nb);
            }
        }
    }
    dist
}

/// Nearest-frontier selection: minimizes path distance over the merged map,
/// ties broken by centroid index.
pub fn cost_goal<S: Scalar>(
    input: &StrategyInput<S>,
    frontiers: &[Frontier],
) -> Result<Pose<S>, StrategyError> {
    let map = input.merged_map;
    let dist = bfs_distances(map, input.self_cell()?);
    let mut best: Option<(u32, usize)> = None;
    for f in frontiers {
        let idx = map.index(f.centroid);
        let d = dist[idx];
        if d == u32::MAX {
            continue;
        }
        if best.is_none_or(|(bd, bi)| (d, idx) < (bd, bi)) {
            best = Some((d, idx));
        }
    }
    let (_, idx) = best.ok_or(StrategyError::NoFrontier)?;
    Ok(map.cell_to_world(map.cell_at(idx)))
}

pub fn cost_strategy<S: Scalar>(input: &StrategyInput<S>) -> Result<Pose<S>, StrategyError> {
    let frontiers = detect_frontiers(input.merged_map, &FrontierConfig::default());
    cost_goal(input, &frontiers)
}

/// Potential-field scoring parameters. `w_r = None` uses the median
/// frontier gain.
#[derive(Clone, Copy, Debug)]
pub struct FieldParams<S> {
    pub lambda_d: S,
    pub lambda_r: S,
    pub w_r: Option<S>,
}

impl<S: Scalar> Default for FieldParams<S> {
    fn default() -> Self {
        FieldParams {
            lambda_d: S::lit(LAMBDA_D),
            lambda_r: S::lit(LAMBDA_R),
            w_r: None,
        }
    }
}

fn median_gain<S: Scalar>(frontiers: &[Frontier]) -> S {
    let mut gains: Vec<usize> = frontiers.iter().map(|f| f.gain).collect();
    gains.sort_unstable();
    if gains.is_empty() {
        return S::zero();
    }
    let n = gains.len();
    if n % 2 == 1 {
        S::from_count(gains[n / 2])
    } else {
        (S::from_count(gains[n / 2 - 1]) + S::from_count(gains[n / 2])) / S::lit(2.0)
    }
}

/// Per-frontier potential scores for the deciding robot:
/// `U(f) = gain(f)·exp(−d_self/λ_d) − Σ_{j≠self} w_r·exp(−d_j/λ_r)`.
/// Frontiers unreachable from the deciding robot are skipped; an
/// unreachable peer contributes no repulsion.
pub fn field_scores<S: Scalar>(
    input: &StrategyInput<S>,
    frontiers: &[Frontier],
    params: &FieldParams<S>,
) -> Result<Vec<(usize, S)>, StrategyError> {
    let map = input.merged_map;
    let res = map.resolution();
    let w_r = params.w_r.unwrap_or_else(|| median_gain::<S>(frontiers));
    let fields: Vec<Vec<u32>> = input
        .poses
        .iter()
        .map(|p| match map.world_to_cell(p) {
            Ok(cell) => bfs_distances(map, cell),
            Err(_) => vec![u32::MAX; map.len()],
        })
        .collect();
    let mut scores = Vec::new();
    for f in frontiers {
        let idx = map.index(f.centroid);
        let d_self = fields[input.robot][idx];
        if d_self == u32::MAX {
            continue;
        }
        let d_self_m = S::from_count(d_self as usize) * res;
        let mut u = S::from_count(f.gain) * (-d_self_m / params.lambda_d).exp();
        for (j, field) in fields.iter().enumerate() {
            if j == input.robot || field[idx] == u32::MAX {
                continue;
            }
            let d_j_m = S::from_count(field[idx] as usize) * res;
            u -= w_r * (-d_j_m / params.lambda_r).exp();
        }
        scores.push((idx, u));
    }
    if scores.is_empty() {
        Err(StrategyError::NoFrontier)
    } else {
        Ok(scores)
    }
}

/// Potential-field selection: maximizes `U(f)`, ties broken by centroid
/// index (the score list is already in index order).
pub fn field_goal<S: Scalar>(
    input: &StrategyInput<S>,
    frontiers: &[Frontier],
) -> Result<Pose<S>, StrategyError> {
    let scores = field_scores(input, frontiers, &FieldParams::default())?;
    let mut best = scores[0];
    for &(idx, u) in &scores[1..] {
        if u > best.1 {
            best = (idx, u);
        }
    }
    let map = input.merged_map;
    Ok(map.cell_to_world(map.cell_at(best.0)))
}

pub fn field_strategy<S: Scalar>(input: &StrategyInput<S>) -> Result<Pose<S>, StrategyError> {
    let frontiers = detect_frontiers(input.merged_map, &FrontierConfig::default());
    field_goal(input, &frontiers)
}

/// Goal-conditioned selection: the frontier centroid nearest (Euclidean)
/// to an externally supplied global goal. The hook through which a learned
/// policy can drive exploration.
pub fn goal_conditioned_goal<S: Scalar>(
    input: &StrategyInput<S>,
    frontiers: &[Frontier],
    global_goal: &Pose<S>,
) -> Result<Pose<S>, StrategyError> {
    let map = input.merged_map;
    let dist = bfs_distances(map, input.self_cell()?);
    let mut best: Option<(S, usize)> = None;
    for f in frontiers {
        let idx = map.index(f.centroid);
        if dist[idx] == u32::MAX {
            continue;
        }
        let center = map.cell_to_world(f.centroid);
        let dx = center.x - global_goal.x;
        let dy = center.y - global_goal.y;
        let d = dx * dx + dy * dy;
        let better = match best {
            None => true,
            Some((bd, bi)) => d < bd || (d == bd && idx < bi),
        };
        if better {
            best = Some((d, idx));
        }
    }
    let (_, idx) = best.ok_or(StrategyError::NoFrontier)?;
    Ok(map.cell_to_world(map.cell_at(idx)))
}

pub fn goal_conditioned_strategy<S: Scalar>(
    input: &StrategyInput<S>,
    global_goal: &Pose<S>,
) -> Result<Pose<S>, StrategyError> {
    let frontiers = detect_frontiers(input.merged_map, &FrontierConfig::default());
    goal_conditioned_goal(input, &frontiers, global_goal)
}

/// A tree node in world coordinates.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RrtNode<S> {
    pub x: S,
    pub y: S,
    pub parent: usize,
}

/// Persistent state for the RRT-based strategy: a global tree that lives
/// for the whole run, a local tree re-rooted at the robot every call (and
/// reset on each detection), plus frontier candidates found so far.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RrtState<S> {
    /// Steering step, meters.
    pub step: S,
    /// Samples drawn per strategy call.
    pub iterations_per_call: usize,
    pub global: Vec<RrtNode<S>>,
    pub local: Vec<RrtNode<S>>,
    /// Boundary cells discovered by tree growth, kept while still frontiers.
    pub candidates: Vec<usize>,
}

impl<S: Scalar> RrtState<S> {
    pub fn new(start: &Pose<S>) -> Self {
        let root = RrtNode {
            x: start.x,
            y: start.y,
            parent: usize::MAX,
        };
        RrtState {
            step: S::one(),
            iterations_per_call: 300,
            global: vec![root],
            local: vec![root],
            candidates: Vec::new(),
        }
    }
}

fn nearest_node<S: Scalar>(nodes: &[RrtNode<S>], x: S, y: S) -> usize {
    let mut best = 0;
    let mut best_d = S::infinity();
    for (i, n) in nodes.iter().enumerate() {
        let d = (n.x - x) * (n.x - x) + (n.y - y) * (n.y - y);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

enum Extension {
    Added,
    Boundary(usize),
    Blocked,
}

/// Walks the segment from node `q` toward `(x, y)`; returns the Free cell
/// at the Free→Unknown boundary if the segment leaves known space.
fn extend<S: Scalar>(
    map: &OccupancyGrid<S>,
    from: (S, S),
    to: (S, S),
) -> Extension {
    let a = match map.world_to_cell(&Pose::xy(from.0, from.1)) {
        Ok(c) => c,
        Err(_) => return Extension::Blocked,
    };
    let b = match map.world_to_cell(&Pose::xy(to.0, to.1)) {
        Ok(c) => c,
        Err(_) => return Extension::Blocked,
    };
    let mut prev_free = a;
    for (r, c) in bresenham((a.row as isize, a.col as isize), (b.row as isize, b.col as isize)) {
        let cell = Cell::new(r as usize, c as usize);
        match map.get(cell) {
            CellState::Free => prev_free = cell,
            CellState::Unknown => return Extension::Boundary(map.index(prev_free)),
            CellState::Occupied => return Extension::Blocked,
        }
    }
    Extension::Added
}

/// RRT frontier detection plus revenue-maximizing selection
/// (`revenue = gain − path cells`). Candidates persist across calls until
/// the map knows better; when sampling yields nothing but detected
/// frontiers remain, selection falls back to the detected list so
/// exploration cannot stall.
pub fn sample_goal<S: Scalar, R: Rng>(
    input: &StrategyInput<S>,
    frontiers: &[Frontier],
    state: &mut RrtState<S>,
    rng: &mut R,
) -> Result<Pose<S>, StrategyError> {
    let map = input.merged_map;
    let pose = &input.poses[input.robot];
    let root = RrtNode {
        x: pose.x,
        y: pose.y,
        parent: usize::MAX,
    };
    state.local = vec![root];
    if state.global.is_empty() {
        state.global.push(root);
    }

    let mut is_frontier = vec![false; map.len()];
    for f in frontiers {
        for &i in &f.cells {
            is_frontier[i] = true;
        }
    }
    state.candidates.retain(|&i| is_frontier[i]);

    let origin = map.origin();
    let (ext_w, ext_h) = map.extent();
    let mut found: Vec<usize> = Vec::new();
    for _ in 0..state.iterations_per_call {
        let sx = origin.x + S::lit(rng.random::<f64>()) * ext_w;
        let sy = origin.y + S::lit(rng.random::<f64>()) * ext_h;
        for is_local in [true, false] {
            let tree = if is_local { &mut state.local } else { &mut state.global };
            let q = tree[nearest_node(tree, sx, sy)];
            let dx = sx - q.x;
            let dy = sy - q.y;
            let norm = (dx * dx + dy * dy).sqrt();
            if norm == S::zero() {
                continue;
            }
            let scale = state.step.min(norm) / norm;
            let nx = q.x + dx * scale;
            let ny = q.y + dy * scale;
            match extend(map, (q.x, q.y), (nx, ny)) {
                Extension::Added => {
                    let parent = nearest_node(tree, nx, ny);
                    tree.push(RrtNode { x: nx, y: ny, parent });
                }
                Extension::Boundary(cell_idx) => {
                    found.push(cell_idx);
                    if is_local {
                        state.local = vec![root];
                    }
                }
                Extension::Blocked => {}
            }
        }
    }

    // snap each discovery to the nearest frontier cell
    let all_cells: Vec<usize> = {
        let mut v: Vec<usize> = frontiers.iter().flat_map(|f| f.cells.iter().copied()).collect();
        v.sort_unstable();
        v
    };
    for raw in found {
        let cell = map.cell_at(raw);
        let snapped = all_cells
            .iter()
            .copied()
            .min_by_key(|&i| {
                let c = map.cell_at(i);
                let dr = c.row as isize - cell.row as isize;
                let dc = c.col as isize - cell.col as isize;
                (dr * dr + dc * dc, i as isize)
            });
        if let Some(i) = snapped {
            if !state.candidates.contains(&i) {
                state.candidates.push(i);
            }
        }
    }
    state.candidates.sort_unstable();

    // gain lookup per frontier cell
    let mut cell_gain = vec![0usize; map.len()];
    for f in frontiers {
        for &i in &f.cells {
            cell_gain[i] = f.gain;
        }
    }
    let dist = bfs_distances(map, input.self_cell()?);
    let revenue_pick = |cells: &[usize]| -> Option<usize> {
        let mut best: Option<(i64, usize)> = None;
        for &i in cells {
            if dist[i] == u32::MAX {
                continue;
            }
            let rev = cell_gain[i] as i64 - dist[i] as i64;
            // maximize revenue; ties to the lowest cell index
            if best.is_none_or(|(br, bi)| rev > br || (rev == br && i < bi)) {
                best = Some((rev, i));
            }
        }
        best.map(|(_, i)| i)
    };

    if let Some(i) = revenue_pick(&state.candidates) {
        return Ok(map.cell_to_world(map.cell_at(i)));
    }
    // sampling found nothing reachable; fall back to the detected list
    let centroids: Vec<usize> = frontiers.iter().map(|f| map.index(f.centroid)).collect();
    if let Some(i) = revenue_pick(&centroids) {
        return Ok(map.cell_to_world(map.cell_at(i)));
    }
    Err(StrategyError::NoFrontier)
}

pub fn sample_strategy<S: Scalar, R: Rng>(
    input: &StrategyInput<S>,
    state: &mut RrtState<S>,
    rng: &mut R,
) -> Result<Pose<S>, StrategyError> {
    let frontiers = detect_frontiers(input.merged_map, &FrontierConfig::default());
    sample_goal(input, &frontiers, state, rng)
}
