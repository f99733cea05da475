//! The simulation loop: sensing, map merging, strategy dispatch, and motion
//! on a shared simulated clock. Exposes a run-to-completion API, an episodic
//! step API for external policies, and a parallel batch runner.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exploration::{
    cost_goal, detect_frontiers, field_goal, goal_conditioned_goal, sample_goal, Frontier,
    FrontierConfig, RrtState, StrategyError, StrategyInput, StrategyKind,
};
use crate::grid::{Cell, CellState, OccupancyGrid, Pose};
use crate::metrics::{
    attribute_coverage, observable_cells, overlap_ratio, sigma, time_at_ratio, CoverageCurve,
    ObsRecord, RunMetrics, TARGET_RATIO, TOPO_RATIO,
};
use crate::motion::{plan, step_along, PlanConfig, PlanError};
use crate::scalar::Scalar;
use crate::scenario::{place_spawns, Scenario, ScenarioError, SpawnMode};
use crate::sensing::{simulate_scan, update_local_map, SenseError, SensorSpec};

/// Simulated-seconds cap per run.
pub const DEFAULT_TIMEOUT: f64 = 3000.0;
/// Seconds between decision rounds.
pub const DEFAULT_DECISION_PERIOD: f64 = 1.0;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid run config: {0}")]
    InvalidConfig(String),
    #[error("environment used before reset")]
    NotReset,
    #[error("robot {robot}: {source}")]
    Strategy { robot: usize, source: StrategyError },
    #[error(transparent)]
    Sense(#[from] SenseError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Full description of one exploration run.
#[derive(Clone, Debug)]
pub struct RunConfig<S> {
    pub scenario: Scenario<S>,
    pub n_robots: usize,
    pub strategy: StrategyKind,
    pub sensor: SensorSpec<S>,
    pub v_max: S,
    pub decision_period: S,
    pub target_ratio: f64,
    pub topo_ratio: f64,
    pub timeout: S,
    pub seed: u64,
    /// None uses the scenario's baked spawns (first `n_robots` of them).
    pub spawn_mode: Option<SpawnMode<S>>,
}

impl<S: Scalar> RunConfig<S> {
    pub fn new(scenario: Scenario<S>, strategy: StrategyKind) -> Self {
        RunConfig {
            scenario,
            n_robots: 1,
            strategy,
            sensor: SensorSpec::default(),
            v_max: S::one(),
            decision_period: S::lit(DEFAULT_DECISION_PERIOD),
            target_ratio: TARGET_RATIO,
            topo_ratio: TOPO_RATIO,
            timeout: S::lit(DEFAULT_TIMEOUT),
            seed: 0,
            spawn_mode: None,
        }
    }

    fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.into()));
        if self.n_robots == 0 {
            return bad("need at least one robot");
        }
        if self.spawn_mode.is_none() && self.n_robots > self.scenario.spawns.len() {
            return bad("n_robots exceeds scenario spawn capacity");
        }
        if !(self.topo_ratio > 0.0
            && self.topo_ratio < self.target_ratio
            && self.target_ratio <= 1.0)
        {
            return bad("need 0 < topo_ratio < target_ratio <= 1");
        }
        if self.v_max <= S::zero() || self.decision_period <= S::zero() {
            return bad("v_max and decision_period must be positive");
        }
        if self.timeout <= S::zero() {
            return bad("timeout must be positive");
        }
        Ok(())
    }

    /// Stable digest over everything that determines the run's output.
    pub fn config_hash(&self) -> String {
        let mut h = Sha256::new();
        let g = &self.scenario.ground_truth;
        h.update(self.scenario.name.as_bytes());
        h.update(self.scenario.gen_params.kind.as_bytes());
        h.update(self.scenario.gen_params.seed.to_le_bytes());
        h.update((g.width() as u64).to_le_bytes());
        h.update((g.height() as u64).to_le_bytes());
        h.update(g.resolution().as_f64().to_bits().to_le_bytes());
        for row in g.rows_as_strings() {
            h.update(row.as_bytes());
        }
        for p in &self.scenario.spawns {
            h.update(p.x.as_f64().to_bits().to_le_bytes());
            h.update(p.y.as_f64().to_bits().to_le_bytes());
        }
        h.update((self.n_robots as u64).to_le_bytes());
        h.update(self.strategy.to_string().as_bytes());
        h.update(self.sensor.range.as_f64().to_bits().to_le_bytes());
        h.update((self.sensor.rays as u64).to_le_bytes());
        h.update(self.v_max.as_f64().to_bits().to_le_bytes());
        h.update(self.decision_period.as_f64().to_bits().to_le_bytes());
        h.update(self.target_ratio.to_bits().to_le_bytes());
        h.update(self.topo_ratio.to_bits().to_le_bytes());
        h.update(self.timeout.as_f64().to_bits().to_le_bytes());
        h.update(self.seed.to_le_bytes());
        h.update(format!("{:?}", self.spawn_mode).as_bytes());
        let digest = h.finalize();
        digest[..16].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    TargetReached,
    NoFrontier,
    Timeout,
}

/// One timestamped simulation event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event<S> {
    /// Cells robot `robot` observed with its own sensor for the first time.
    Observation { t: S, robot: usize, cells: Vec<usize> },
    Goal { t: S, robot: usize, x: S, y: S },
    Move { t: S, robot: usize, row: usize, col: usize, cells_moved: usize },
    Termination { t: S, reason: TerminationReason },
}

impl<S: Scalar> Event<S> {
    pub fn time(&self) -> S {
        match *self {
            Event::Observation { t, .. }
            | Event::Goal { t, .. }
            | Event::Move { t, .. }
            | Event::Termination { t, .. } => t,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog<S> {
    pub events: Vec<Event<S>>,
}

impl<S: Scalar> EventLog<S> {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            out.push_str(&serde_json::to_string(ev).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(EventLog { events })
    }

    /// Observation events in metrics form.
    pub fn observations(&self) -> Vec<ObsRecord<S>> {
        self.events
            .iter()
            .filter_map(|ev| match ev {
                Event::Observation { t, robot, cells } => Some(ObsRecord {
                    time: *t,
                    robot: *robot,
                    cells: cells.clone(),
                }),
                _ => None,
            })
            .collect()
    }

    /// Rebuilds the final merged map from observations over a ground truth.
    pub fn replay_map(&self, truth: &OccupancyGrid<S>) -> OccupancyGrid<S> {
        let mut map = OccupancyGrid::new(
            truth.width(),
            truth.height(),
            truth.resolution(),
            truth.origin(),
            CellState::Unknown,
        );
        for ev in &self.events {
            if let Event::Observation { cells, .. } = ev {
                for &i in cells {
                    let cell = truth.cell_at(i);
                    map.set(cell, truth.get(cell));
                }
            }
        }
        map
    }
}

/// Frontier detection as the engine applies it: the configured cluster
/// threshold first, and a single-cell threshold as the endgame fallback so
/// the last slivers of unknown space still attract robots.
pub fn detect_with_fallback<S: Scalar>(
    map: &OccupancyGrid<S>,
    cfg: &FrontierConfig<S>,
) -> Vec<Frontier> {
    let found = detect_frontiers(map, cfg);
    if !found.is_empty() || cfg.min_cluster <= 1 {
        return found;
    }
    let relaxed = FrontierConfig {
        min_cluster: 1,
        ..*cfg
    };
    detect_frontiers(map, &relaxed)
}

/// All mutable state of one running simulation.
pub struct Engine<S> {
    cfg: RunConfig<S>,
    truth: OccupancyGrid<S>,
    poses: Vec<Pose<S>>,
    cells: Vec<Cell>,
    locals: Vec<OccupancyGrid<S>>,
    merged: OccupancyGrid<S>,
    seen: Vec<Vec<bool>>,
    observable: Vec<bool>,
    observable_count: usize,
    known_observable: usize,
    rngs: Vec<ChaCha8Rng>,
    rrt: Vec<RrtState<S>>,
    curve: CoverageCurve<S>,
    log: EventLog<S>,
    t: S,
    done: Option<TerminationReason>,
    config_hash: String,
}

impl<S: Scalar> Engine<S> {
    pub fn new(cfg: RunConfig<S>) -> Result<Self, EngineError> {
        cfg.validate()?;
        cfg.sensor.validate().map_err(EngineError::Sense)?;
        let truth = cfg.scenario.ground_truth.clone();
        let spawns = match &cfg.spawn_mode {
            Some(mode) => place_spawns(&truth, mode, cfg.n_robots)?,
            None => cfg.scenario.spawns[..cfg.n_robots].to_vec(),
        };
        let mut cells = Vec::with_capacity(cfg.n_robots);
        for (i, p) in spawns.iter().enumerate() {
            let cell = truth
                .world_to_cell(p)
                .map_err(|e| EngineError::InvalidConfig(format!("spawn {i}: {e}")))?;
            if truth.get(cell) != CellState::Free {
                return Err(EngineError::InvalidConfig(format!(
                    "spawn {i} is not on a Free cell"
                )));
            }
            if cells.contains(&cell) {
                return Err(EngineError::InvalidConfig(format!(
                    "spawn {i} duplicates another robot's cell"
                )));
            }
            cells.push(cell);
        }
        let poses: Vec<Pose<S>> = cells.iter().map(|&c| truth.cell_to_world(c)).collect();
        let blank = OccupancyGrid::new(
            truth.width(),
            truth.height(),
            truth.resolution(),
            truth.origin(),
            CellState::Unknown,
        );
        let observable: Vec<bool> = {
            let set = crate::metrics::observable_set(&truth);
            let mut flags = vec![false; truth.len()];
            for i in set {
                flags[i] = true;
            }
            flags
        };
        let observable_count = observable_cells(&truth);
        let rngs = (0..cfg.n_robots)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(i as u64 + 1);
                rng
            })
            .collect();
        let rrt = poses.iter().map(RrtState::new).collect();
        let config_hash = cfg.config_hash();
        Ok(Engine {
            cfg,
            locals: vec![blank.clone(); cells.len()],
            merged: blank,
            seen: vec![vec![false; truth.len()]; cells.len()],
            observable,
            observable_count,
            known_observable: 0,
            rngs,
            rrt,
            curve: CoverageCurve::new(),
            log: EventLog::default(),
            t: S::zero(),
            done: None,
            config_hash,
            truth,
            poses,
            cells,
        })
    }

    pub fn time(&self) -> S {
        self.t
    }

    pub fn done(&self) -> Option<TerminationReason> {
        self.done
    }

    pub fn merged_map(&self) -> &OccupancyGrid<S> {
        &self.merged
    }

    pub fn poses(&self) -> &[Pose<S>] {
        &self.poses
    }

    pub fn coverage_ratio(&self) -> S {
        S::from_count(self.known_observable) / S::from_count(self.observable_count)
    }

    fn frontier_cfg(&self) -> FrontierConfig<S> {
        FrontierConfig {
            sensor_range: self.cfg.sensor.range,
            ..FrontierConfig::default()
        }
    }

    /// Scan + merge + coverage bookkeeping + termination check.
    fn phase_a(&mut self) -> Result<(), EngineError> {
        for i in 0..self.cells.len() {
            let scan = simulate_scan(&self.poses[i], &self.cfg.sensor, &self.truth)?;
            let mut newly: Vec<usize> = scan
                .observed_free
                .iter()
                .chain(&scan.observed_occupied)
                .copied()
                .filter(|&idx| !self.seen[i][idx])
                .collect();
            newly.sort_unstable();
            for &idx in &newly {
                self.seen[i][idx] = true;
            }
            self.log.events.push(Event::Observation {
                t: self.t,
                robot: i,
                cells: newly,
            });
            update_local_map(&mut self.locals[i], &scan)?;
            let merged_new = update_local_map(&mut self.merged, &scan)?;
            for idx in merged_new {
                if self.observable[idx] {
                    self.known_observable += 1;
                }
            }
        }
        let ratio = self.coverage_ratio();
        self.curve.record(self.t, ratio);
        if ratio.as_f64() >= self.cfg.target_ratio {
            self.terminate(TerminationReason::TargetReached);
        } else if self.t >= self.cfg.timeout {
            self.terminate(TerminationReason::Timeout);
        }
        Ok(())
    }

    fn terminate(&mut self, reason: TerminationReason) {
        self.done = Some(reason);
        self.log.events.push(Event::Termination { t: self.t, reason });
    }

    /// Per-robot goal selection from the shared merged map and the
    /// round-start poses. `None` marks robots whose strategy found nothing.
    /// Sets `done` when no robot has a goal.
    fn decide_goals(&mut self) -> Vec<Option<Cell>> {
        let frontiers = detect_with_fallback(&self.merged, &self.frontier_cfg());
        if frontiers.is_empty() {
            self.terminate(TerminationReason::NoFrontier);
            return vec![None; self.cells.len()];
        }
        // fixed global goal for standalone goal-conditioned runs: map center
        let (ex, ey) = self.truth.extent();
        let half = S::lit(0.5);
        let center = Pose::xy(ex * half, ey * half);
        let mut goals = Vec::with_capacity(self.cells.len());
        for i in 0..self.cells.len() {
            let input = StrategyInput {
                merged_map: &self.merged,
                poses: &self.poses,
                robot: i,
            };
            let picked = match self.cfg.strategy {
                StrategyKind::Cost => cost_goal(&input, &frontiers),
                StrategyKind::Field => field_goal(&input, &frontiers),
                StrategyKind::Sample => {
                    sample_goal(&input, &frontiers, &mut self.rrt[i], &mut self.rngs[i])
                }
                StrategyKind::Goal => goal_conditioned_goal(&input, &frontiers, &center),
            };
            match picked {
                Ok(pose) => {
                    let cell = self
                        .merged
                        .world_to_cell(&pose)
                        .expect("strategies return in-bounds goals");
                    goals.push(Some(cell));
                }
                Err(StrategyError::NoFrontier) => goals.push(None),
            }
        }
        if goals.iter().all(Option::is_none) {
            self.terminate(TerminationReason::NoFrontier);
        }
        goals
    }

    /// Plan and execute one decision period of motion for every robot, in
    /// robot order. Peers' current cells are treated as obstacles, so two
    /// robots never share a cell at a decision boundary.
    fn phase_b(&mut self, goals: &[Option<Cell>]) {
        let round_t = self.t;
        let plan_cfg = PlanConfig {
            v_max: self.cfg.v_max,
            ..PlanConfig::default()
        };
        for (i, goal) in goals.iter().enumerate() {
            let Some(goal) = goal else { continue };
            let gp = self.merged.cell_to_world(*goal);
            self.log.events.push(Event::Goal {
                t: round_t,
                robot: i,
                x: gp.x,
                y: gp.y,
            });
        }
        // moves land mid-period; buffer them so log times stay monotone
        let mut moves = Vec::new();
        for (i, goal) in goals.iter().enumerate() {
            let Some(goal) = *goal else { continue };
            // overlay peers as temporary obstacles
            let mut saved = Vec::new();
            for (j, &c) in self.cells.iter().enumerate() {
                if j != i {
                    saved.push((c, self.merged.get(c)));
                    self.merged.set(c, CellState::Occupied);
                }
            }
            let planned = plan(&self.merged, self.cells[i], goal, &plan_cfg);
            for (c, state) in saved {
                self.merged.set(c, state);
            }
            let path = match planned {
                Ok(p) => p,
                Err(PlanError::NoPath { .. } | PlanError::InvalidStart(_)) => continue,
            };
            let out = step_along(
                &path,
                0,
                round_t,
                self.cfg.decision_period,
                self.merged.resolution(),
                &plan_cfg,
            );
            if out.cells_moved > 0 {
                self.cells[i] = out.cell;
                self.poses[i] = self.merged.cell_to_world(out.cell);
                moves.push(Event::Move {
                    t: out.clock,
                    robot: i,
                    row: out.cell.row,
                    col: out.cell.col,
                    cells_moved: out.cells_moved,
                });
            }
        }
        moves.sort_by(|a, b| {
            let key = |e: &Event<S>| match *e {
                Event::Move { t, robot, .. } => (t, robot),
                _ => unreachable!("only moves are buffered"),
            };
            let (ta, ra) = key(a);
            let (tb, rb) = key(b);
            ta.partial_cmp(&tb)
                .expect("move times are finite")
                .then(ra.cmp(&rb))
        });
        self.log.events.extend(moves);
        self.t = round_t + self.cfg.decision_period;
    }

    fn finish(self) -> (RunMetrics<S>, EventLog<S>) {
        let res = self.truth.resolution();
        let (sets, s_i) = attribute_coverage(
            &self.log.observations(),
            self.cells.len(),
            res,
        )
        .expect("engine logs are well-formed");
        let sig = sigma(&s_i).expect("at least one robot");
        let r_o = if sets.len() >= 2 {
            overlap_ratio(&sets, self.observable_count).expect("N >= 2")
        } else {
            S::zero()
        };
        let metrics = RunMetrics {
            t_topo: time_at_ratio(&self.curve, self.cfg.topo_ratio).expect("valid ratio"),
            t_total: time_at_ratio(&self.curve, self.cfg.target_ratio).expect("valid ratio"),
            s_i,
            sigma: sig,
            r_o,
            s_total: S::from_count(self.observable_count) * res * res,
            seed: self.cfg.seed,
            config_hash: self.config_hash,
        };
        (metrics, self.log)
    }

    pub fn coverage_curve(&self) -> &CoverageCurve<S> {
        &self.curve
    }
}

/// Runs one exploration to termination.
pub fn run<S: Scalar>(cfg: RunConfig<S>) -> Result<(RunMetrics<S>, EventLog<S>), EngineError> {
    let mut e = Engine::new(cfg)?;
    loop {
        e.phase_a()?;
        if e.done.is_some() {
            break;
        }
        let goals = e.decide_goals();
        if e.done.is_some() {
            break;
        }
        e.phase_b(&goals);
    }
    Ok(e.finish())
}

/// Runs a batch on `workers` threads; results keep config order and per-run
/// failures stay isolated.
pub fn run_batch<S: Scalar>(
    configs: Vec<RunConfig<S>>,
    workers: usize,
) -> Vec<Result<RunMetrics<S>, EngineError>> {
    assert!(workers >= 1, "need at least one worker");
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| {
        configs
            .into_par_iter()
            .map(|cfg| run(cfg).map(|(m, _)| m))
            .collect()
    })
}

/// Worker-count override from the environment, when set and parseable.
pub fn workers_from_env() -> Option<usize> {
    std::env::var("EXPLORE_BENCH_WORKERS")
        .ok()?
        .parse()
        .ok()
        .filter(|&n| n >= 1)
}

/// Rebuilds the coverage curve of a run by replaying its event log against
/// the ground truth. Equals the curve the engine recorded live.
pub fn coverage_curve_from_log<S: Scalar>(
    log: &EventLog<S>,
    truth: &OccupancyGrid<S>,
) -> CoverageCurve<S> {
    let mut observable = vec![false; truth.len()];
    for idx in crate::metrics::observable_set(truth) {
        observable[idx] = true;
    }
    let total = observable_cells(truth);
    let mut known = vec![false; truth.len()];
    let mut count = 0usize;
    let mut curve = CoverageCurve::new();
    for ev in &log.events {
        if let Event::Observation { t, cells, .. } = ev {
            for &idx in cells {
                if !known[idx] {
                    known[idx] = true;
                    if observable[idx] {
                        count += 1;
                    }
                }
            }
            curve.record(*t, S::from_count(count) / S::from_count(total));
        }
    }
    curve
}

/// What an external policy sees after reset or step.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvObservation<S> {
    pub t: S,
    pub ratio: S,
    pub merged: OccupancyGrid<S>,
    pub poses: Vec<Pose<S>>,
    pub done: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepInfo {
    /// Goals that lay outside the map and were clamped in.
    pub clamped: Vec<bool>,
    /// Robots whose routed goal found no reachable frontier this step.
    pub no_goal: Vec<bool>,
}

/// Episodic wrapper over [`Engine`]: one global goal per robot per step,
/// routed through the goal-conditioned strategy.
pub struct EpisodicEnv<S> {
    cfg: RunConfig<S>,
    engine: Option<Engine<S>>,
}

impl<S: Scalar> EpisodicEnv<S> {
    pub fn new(cfg: RunConfig<S>) -> Self {
        EpisodicEnv { cfg, engine: None }
    }

    fn observation(e: &Engine<S>) -> EnvObservation<S> {
        EnvObservation {
            t: e.t,
            ratio: e.coverage_ratio(),
            merged: e.merged.clone(),
            poses: e.poses.clone(),
            done: e.done.is_some(),
        }
    }

    pub fn reset(&mut self) -> Result<EnvObservation<S>, EngineError> {
        let mut e = Engine::new(self.cfg.clone())?;
        e.phase_a()?;
        let obs = Self::observation(&e);
        self.engine = Some(e);
        Ok(obs)
    }

    /// Advances one decision period using one global goal per robot.
    pub fn step(
        &mut self,
        goals: &[Pose<S>],
    ) -> Result<(EnvObservation<S>, bool, StepInfo), EngineError> {
        let e = self.engine.as_mut().ok_or(EngineError::NotReset)?;
        let n = e.cells.len();
        if e.done.is_some() {
            return Ok((Self::observation(e), true, StepInfo::default()));
        }
        if goals.len() != n {
            return Err(EngineError::InvalidConfig(format!(
                "expected {n} goals, got {}",
                goals.len()
            )));
        }
        let mut info = StepInfo {
            clamped: vec![false; n],
            no_goal: vec![false; n],
        };
        // clamp out-of-bounds goals onto the map
        let (ex, ey) = e.truth.extent();
        let half_res = e.truth.resolution() * S::lit(0.5);
        let clamp = |v: S, hi: S| {
            if v < S::zero() {
                S::zero()
            } else if v >= hi {
                hi - half_res
            } else {
                v
            }
        };
        let routed: Vec<Pose<S>> = goals
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let q = Pose::xy(clamp(p.x, ex), clamp(p.y, ey));
                if q.x != p.x || q.y != p.y {
                    info.clamped[i] = true;
                }
                q
            })
            .collect();
        let frontiers = detect_with_fallback(&e.merged, &e.frontier_cfg());
        if frontiers.is_empty() {
            e.terminate(TerminationReason::NoFrontier);
            return Ok((Self::observation(e), true, info));
        }
        let mut goal_cells = Vec::with_capacity(n);
        for (i, target) in routed.iter().enumerate() {
            let input = StrategyInput {
                merged_map: &e.merged,
                poses: &e.poses,
                robot: i,
            };
            match goal_conditioned_goal(&input, &frontiers, target) {
                Ok(pose) => {
                    let cell = e.merged.world_to_cell(&pose).expect("in-bounds goal");
                    goal_cells.push(Some(cell));
                }
                Err(StrategyError::NoFrontier) => {
                    info.no_goal[i] = true;
                    goal_cells.push(None);
                }
            }
        }
        if goal_cells.iter().all(Option::is_none) {
            e.terminate(TerminationReason::NoFrontier);
            return Ok((Self::observation(e), true, info));
        }
        e.phase_b(&goal_cells);
        e.phase_a()?;
        Ok((Self::observation(e), e.done.is_some(), info))
    }

    /// Final metrics and log; `None` before the first reset.
    pub fn finish(self) -> Option<(RunMetrics<S>, EventLog<S>)> {
        self.engine.map(Engine::finish)
    }

    pub fn engine(&self) -> Option<&Engine<S>> {
        self.engine.as_ref()
    }
}
