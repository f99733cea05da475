//! Deterministic grid-world simulator for benchmarking multi-robot
//! exploration strategies.
//!
//! The crate is generic over the floating-point scalar (`f32` or `f64`)
//! via [`Scalar`]; the `*64` / `*32` aliases at the root pick one.

pub mod engine;
pub mod exploration;
pub mod grid;
pub mod map_io;
pub mod metrics;
pub mod motion;
pub mod scalar;
pub mod scenario;
pub mod sensing;

pub use engine::{
    coverage_curve_from_log, detect_with_fallback, run, run_batch, workers_from_env, Engine,
    EngineError, EnvObservation,
    EpisodicEnv, Event, EventLog, RunConfig, StepInfo, TerminationReason,
};
pub use exploration::{
    bfs_distances, cost_goal, cost_strategy, detect_frontiers, field_goal, field_strategy,
    goal_conditioned_goal, goal_conditioned_strategy, sample_goal, sample_strategy, Frontier,
    FrontierConfig, RrtState, StrategyError, StrategyInput, StrategyKind,
};
pub use grid::{Cell, CellState, GridError, OccupancyGrid, Pose};
pub use map_io::{load_map, save_map, MapIoError, MapYaml};
pub use metrics::{
    attribute_coverage, observable_cells, overlap_ratio, sigma, time_at_ratio, CoverageCurve,
    MetricsError, ObsRecord, RunMetrics, TARGET_RATIO, TOPO_RATIO,
};
pub use motion::{plan, step_along, PlanConfig, PlanError, PlannedPath};
pub use scalar::Scalar;
pub use scenario::{
    batch_generate, builtin, generate, load_scenario, place_spawns, save_scenario,
    validate_scenario, GenParams, GenRecord, GenSpec, Scenario, ScenarioError, SpawnMode,
    BUILTIN_NAMES,
};
pub use sensing::{
    bresenham, line_of_sight, merge_maps, simulate_scan, update_local_map, ScanResult, SenseError,
    SensorSpec,
};

pub type Grid64 = OccupancyGrid<f64>;
pub type Grid32 = OccupancyGrid<f32>;
pub type Pose64 = Pose<f64>;
pub type Pose32 = Pose<f32>;
