//! Coverage curves, efficiency metrics (T_topo / T_total) and collaboration
//! metrics (sigma, r_o) computed from run output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellState, OccupancyGrid};
use crate::scalar::Scalar;

pub const TOPO_RATIO: f64 = 0.90;
pub const TARGET_RATIO: f64 = 0.99;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("ratio must lie in (0, 1], got {0}")]
    InvalidRatio(f64),
    #[error("need at least one area")]
    EmptyInput,
    #[error("overlap ratio needs at least two robots, got {0}")]
    InvalidInput(usize),
    #[error("malformed event log: {0}")]
    MalformedLog(String),
}

/// Exploration-ratio-over-time curve. Times strictly increase, ratios never
/// decrease; both are enforced by [`CoverageCurve::record`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageCurve<S> {
    pub samples: Vec<(S, S)>,
}

impl<S: Scalar> CoverageCurve<S> {
    pub fn new() -> Self {
        CoverageCurve { samples: Vec::new() }
    }

    /// Appends a sample; a repeat of the last timestamp replaces it with the
    /// larger ratio so curves sampled per-second and per-event stay strict.
    pub fn record(&mut self, time: S, ratio: S) {
        if let Some(&mut (last_t, ref mut last_r)) = self.samples.last_mut() {
            assert!(time >= last_t, "coverage samples must not go back in time");
            if time == last_t {
                if ratio > *last_r {
                    *last_r = ratio;
                }
                return;
            }
            let floor = *last_r;
            self.samples.push((time, if ratio > floor { ratio } else { floor }));
            return;
        }
        self.samples.push((time, ratio));
    }

    pub fn final_ratio(&self) -> Option<S> {
        self.samples.last().map(|&(_, r)| r)
    }
}

/// Earliest sample time at which the curve reaches `r`; `None` if it never
/// does. `r` must lie in (0, 1].
pub fn time_at_ratio<S: Scalar>(
    curve: &CoverageCurve<S>,
    r: f64,
) -> Result<Option<S>, MetricsError> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(MetricsError::InvalidRatio(r));
    }
    let target = S::lit(r);
    // ratios are non-decreasing, so the first crossing is a partition point
    let i = curve.samples.partition_point(|&(_, ratio)| ratio < target);
    Ok(curve.samples.get(i).map(|&(t, _)| t))
}

/// Population standard deviation of per-robot exploration areas.
pub fn sigma<S: Scalar>(areas: &[S]) -> Result<S, MetricsError> {
    if areas.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = S::from_count(areas.len());
    let mean = areas.iter().fold(S::zero(), |acc, &a| acc + a) / n;
    let var = areas
        .iter()
        .fold(S::zero(), |acc, &a| acc + (a - mean) * (a - mean))
        / n;
    Ok(var.sqrt())
}

/// Overlap ratio r_o: cells observed by more than one robot, counted once
/// per extra observer, over the observable terrain size.
///
/// S_o = sum(|K_i|) - |union(K_i)|, which equals the closed-form
/// (sum(S_i) - S_total) / S_total exactly when the union covers the terrain
/// and stays non-negative mid-run.
pub fn overlap_ratio<S: Scalar>(
    per_robot_known: &[Vec<usize>],
    s_total_cells: usize,
) -> Result<S, MetricsError> {
    if per_robot_known.len() < 2 {
        return Err(MetricsError::InvalidInput(per_robot_known.len()));
    }
    assert!(s_total_cells > 0, "terrain size must be positive");
    let mut union: Vec<usize> = per_robot_known.concat();
    union.sort_unstable();
    union.dedup();
    let total: usize = per_robot_known.iter().map(Vec::len).sum();
    let overlap = total - union.len();
    Ok(S::from_count(overlap) / S::from_count(s_total_cells))
}

/// One sensing event as the metrics layer sees it: which robot observed
/// which cell indices at what simulated time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsRecord<S> {
    pub time: S,
    pub robot: usize,
    pub cells: Vec<usize>,
}

/// Replays observation events into per-robot known-cell sets K_i and areas
/// S_i = |K_i| * resolution^2.
pub fn attribute_coverage<S: Scalar>(
    events: &[ObsRecord<S>],
    n_robots: usize,
    resolution: S,
) -> Result<(Vec<Vec<usize>>, Vec<S>), MetricsError> {
    let mut known: Vec<Vec<bool>> = vec![Vec::new(); n_robots];
    let mut last_time = None;
    for ev in events {
        if ev.robot >= n_robots {
            return Err(MetricsError::MalformedLog(format!(
                "robot id {} out of range (N={n_robots})",
                ev.robot
            )));
        }
        if let Some(prev) = last_time {
            if ev.time < prev {
                return Err(MetricsError::MalformedLog(
                    "event times decrease".into(),
                ));
            }
        }
        last_time = Some(ev.time);
        let set = &mut known[ev.robot];
        for &c in &ev.cells {
            if c >= set.len() {
                set.resize(c + 1, false);
            }
            set[c] = true;
        }
    }
    let cell_area = resolution * resolution;
    let sets: Vec<Vec<usize>> = known
        .iter()
        .map(|flags| {
            flags
                .iter()
                .enumerate()
                .filter_map(|(i, &k)| k.then_some(i))
                .collect()
        })
        .collect();
    let areas = sets
        .iter()
        .map(|s| S::from_count(s.len()) * cell_area)
        .collect();
    Ok((sets, areas))
}

/// Number of ground-truth cells a sensor could ever observe: the free
/// component plus the wall cells 4-adjacent to them. Sealed interior cells
/// are excluded from the exploration-ratio denominator.
pub fn observable_cells<S: Scalar>(g: &OccupancyGrid<S>) -> usize {
    let mut n = 0;
    for i in 0..g.len() {
        let cell = g.cell_at(i);
        match g.get(cell) {
            CellState::Free => n += 1,
            CellState::Occupied => {
                if g.neighbors4(cell).any(|nb| g.get(nb) == CellState::Free) {
                    n += 1;
                }
            }
            CellState::Unknown => {}
        }
    }
    n
}

/// Indices of the observable cells (same rule as [`observable_cells`]).
pub fn observable_set<S: Scalar>(g: &OccupancyGrid<S>) -> Vec<usize> {
    (0..g.len())
        .filter(|&i| {
            let cell = g.cell_at(i);
            match g.get(cell) {
                CellState::Free => true,
                CellState::Occupied => {
                    g.neighbors4(cell).any(|nb| g.get(nb) == CellState::Free)
                }
                CellState::Unknown => false,
            }
        })
        .collect()
}

/// Everything reported for one exploration run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics<S> {
    /// Time to 90% exploration ratio; None when the run timed out first.
    pub t_topo: Option<S>,
    /// Time to 99% exploration ratio; None when the run timed out first.
    pub t_total: Option<S>,
    /// Per-robot covered area, m^2.
    pub s_i: Vec<S>,
    /// Population standard deviation of `s_i`, m^2.
    pub sigma: S,
    /// Overlap ratio; 0 for single-robot runs.
    pub r_o: S,
    /// Observable terrain area, m^2.
    pub s_total: S,
    pub seed: u64,
    pub config_hash: String,
}

pub const CSV_HEADER: &str = "t_topo,t_total,sigma,r_o";

impl<S: Scalar> RunMetrics<S> {
    /// Table-style CSV row matching [`CSV_HEADER`]; absent times are empty.
    pub fn to_csv_row(&self) -> String {
        let field = |v: Option<S>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{}",
            field(self.t_topo),
            field(self.t_total),
            self.sigma,
            self.r_o
        )
    }
}
