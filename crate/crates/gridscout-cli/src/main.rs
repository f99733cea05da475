//! `gridscout` command-line harness: single runs with on-disk artifacts,
//! benchmark sweeps, scenario generation, speed reports, map export, and a
//! newline-delimited-JSON environment server for external training code.

mod protocol;
mod report;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridscout::{
    builtin, coverage_curve_from_log, generate, load_scenario, place_spawns, run, run_batch,
    save_map, save_scenario, validate_scenario, workers_from_env, Cell, Event, EventLog,
    GenParams, GenSpec, OccupancyGrid, Pose, RunConfig, RunMetrics, Scenario, SpawnMode,
    StrategyKind, BUILTIN_NAMES,
};

#[derive(Parser)]
#[command(name = "gridscout", version, about = "Grid-world multi-robot exploration benchmark")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one exploration and write its artifacts.
    Run(RunArgs),
    /// Run an experiment sweep from a JSON spec and emit result tables.
    Bench(BenchArgs),
    /// Generate a scenario and write its PGM/YAML/JSON triplet.
    Gen(GenArgs),
    /// Report simulated-vs-wall-clock speed-up and batch throughput.
    Speed(SpeedArgs),
    /// Write a scenario's map files without running anything.
    ExportMap(ExportMapArgs),
    /// Serve episodic environments over newline-delimited JSON on stdio.
    Env,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, names, or config values; exit code 2.
    Usage(String),
    /// Failure while doing the work; exit code 1.
    Runtime(String),
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Speed(a) => cmd_speed(a),
        Cmd::ExportMap(a) => cmd_export_map(a),
        Cmd::Env => cmd_env(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

// ---------------------------------------------------------------- shared

/// Builtin name, or a path to a generated scenario triplet.
pub fn resolve_scenario(name: &str) -> Result<Scenario<f64>, CliError> {
    if BUILTIN_NAMES.contains(&name) {
        return builtin(name).map_err(runtime);
    }
    let looks_like_path = name.contains('/')
        || name.contains(std::path::MAIN_SEPARATOR)
        || name.ends_with(".json")
        || name.ends_with(".yaml");
    if looks_like_path {
        load_scenario(Path::new(name))
            .map_err(|e| CliError::Runtime(format!("loading scenario {name}: {e}")))
    } else {
        Err(CliError::Usage(format!(
            "unknown scenario {name:?}; builtins are {} (or pass a path to a generated .json)",
            BUILTIN_NAMES.join(", ")
        )))
    }
}

fn parse_strategy_arg(s: &str) -> Result<StrategyKind, String> {
    s.parse()
}

pub fn parse_strategy_name(s: &str) -> Result<StrategyKind, CliError> {
    s.parse().map_err(CliError::Usage)
}

pub fn parse_spawn_name(s: &str) -> Result<SpawnMode<f64>, CliError> {
    match s {
        "far" => Ok(SpawnMode::Far),
        "close" => Ok(SpawnMode::Close),
        other => Err(CliError::Usage(format!(
            "unknown spawn mode {other:?} (expected far|close)"
        ))),
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SpawnArg {
    Far,
    Close,
}

impl SpawnArg {
    fn to_mode(self) -> SpawnMode<f64> {
        match self {
            SpawnArg::Far => SpawnMode::Far,
            SpawnArg::Close => SpawnMode::Close,
        }
    }
}

/// Worker count from flag or core count, capped by EXPLORE_BENCH_WORKERS.
pub fn effective_workers(flag: Option<usize>) -> usize {
    let chosen = flag.unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    let capped = match workers_from_env() {
        Some(cap) => chosen.min(cap),
        None => chosen,
    };
    capped.max(1)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

fn ensure_parent_dir(stem: &Path) -> Result<(), CliError> {
    match stem.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("creating {}: {e}", dir.display()))),
        _ => Ok(()),
    }
}

// ---------------------------------------------------------------- run

#[derive(Args)]
struct RunArgs {
    /// Builtin scenario name or path to a generated scenario (.json).
    #[arg(long)]
    scenario: Option<String>,
    /// cost | sample | field | goal
    #[arg(long, value_parser = parse_strategy_arg)]
    strategy: Option<StrategyKind>,
    #[arg(long)]
    robots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// far | close; omit to use the scenario's baked spawn poses.
    #[arg(long, value_enum)]
    spawn: Option<SpawnArg>,
    /// Sensor range in meters.
    #[arg(long)]
    sensor_range: Option<f64>,
    /// Rays per 360-degree sweep.
    #[arg(long)]
    rays: Option<usize>,
    /// Robot speed in m/s.
    #[arg(long)]
    v_max: Option<f64>,
    /// Replanning period in simulated seconds.
    #[arg(long)]
    decision_period: Option<f64>,
    /// Coverage ratio that ends the run.
    #[arg(long)]
    target_ratio: Option<f64>,
    /// Coverage ratio defining T_topo.
    #[arg(long)]
    topo_ratio: Option<f64>,
    /// Simulated-seconds budget before the run is cut off.
    #[arg(long)]
    timeout: Option<f64>,
    /// JSON config file with the same keys; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// File form of the run flags. Everything optional; flags win.
#[derive(serde::Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct RunFile {
    scenario: Option<String>,
    strategy: Option<String>,
    robots: Option<usize>,
    seed: Option<u64>,
    spawn: Option<String>,
    sensor_range: Option<f64>,
    rays: Option<usize>,
    v_max: Option<f64>,
    decision_period: Option<f64>,
    target_ratio: Option<f64>,
    topo_ratio: Option<f64>,
    timeout: Option<f64>,
}

fn build_run_config(a: &RunArgs) -> Result<RunConfig<f64>, CliError> {
    let file: RunFile = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Runtime(format!("reading {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config file {}: {e}", p.display())))?
        }
        None => RunFile::default(),
    };
    let name = a
        .scenario
        .clone()
        .or(file.scenario)
        .ok_or_else(|| CliError::Usage("missing --scenario".into()))?;
    let strategy = match a.strategy {
        Some(s) => s,
        None => match &file.strategy {
            Some(s) => parse_strategy_name(s)?,
            None => return Err(CliError::Usage("missing --strategy".into())),
        },
    };
    let mut cfg = RunConfig::new(resolve_scenario(&name)?, strategy);
    if let Some(v) = a.robots.or(file.robots) {
        cfg.n_robots = v;
    }
    if let Some(v) = a.seed.or(file.seed) {
        cfg.seed = v;
    }
    cfg.spawn_mode = match (a.spawn, &file.spawn) {
        (Some(s), _) => Some(s.to_mode()),
        (None, Some(s)) => Some(parse_spawn_name(s)?),
        (None, None) => None,
    };
    if let Some(v) = a.sensor_range.or(file.sensor_range) {
        cfg.sensor.range = v;
    }
    if let Some(v) = a.rays.or(file.rays) {
        cfg.sensor.rays = v;
    }
    if let Some(v) = a.v_max.or(file.v_max) {
        cfg.v_max = v;
    }
    if let Some(v) = a.decision_period.or(file.decision_period) {
        cfg.decision_period = v;
    }
    if let Some(v) = a.target_ratio.or(file.target_ratio) {
        cfg.target_ratio = v;
    }
    if let Some(v) = a.topo_ratio.or(file.topo_ratio) {
        cfg.topo_ratio = v;
    }
    if let Some(v) = a.timeout.or(file.timeout) {
        cfg.timeout = v;
    }
    Ok(cfg)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "—".into())
}

fn cmd_run(a: RunArgs) -> Result<(), CliError> {
    let cfg = build_run_config(&a)?;
    let truth = cfg.scenario.ground_truth.clone();
    let spawn_mode = cfg.spawn_mode.clone();
    let baked = cfg.scenario.spawns.clone();
    let n = cfg.n_robots;
    let (metrics, log) = run(cfg).map_err(runtime)?;
    let spawns = match &spawn_mode {
        Some(mode) => place_spawns(&truth, mode, n).map_err(runtime)?,
        None => baked[..n].to_vec(),
    };
    write_run_artifacts(&a.out, &metrics, &log, &truth, &spawns)?;
    println!(
        "t_topo={} t_total={} sigma={:.3} r_o={:.3} (artifacts in {})",
        fmt_opt(metrics.t_topo),
        fmt_opt(metrics.t_total),
        metrics.sigma,
        metrics.r_o,
        a.out.display()
    );
    Ok(())
}

/// Everything a run leaves on disk. All files except meta.json are
/// byte-reproducible for a given config; wall-clock facts stay in meta.json.
fn write_run_artifacts(
    out: &Path,
    metrics: &RunMetrics<f64>,
    log: &EventLog<f64>,
    truth: &OccupancyGrid<f64>,
    spawns: &[Pose<f64>],
) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Runtime(format!("creating {}: {e}", out.display())))?;

    let mut metrics_json = serde_json::to_string_pretty(metrics).map_err(runtime)?;
    metrics_json.push('\n');
    write_file(&out.join("metrics.json"), &metrics_json)?;

    let curve = coverage_curve_from_log(log, truth);
    let mut coverage = String::from("t,ratio\n");
    for &(t, r) in &curve.samples {
        coverage.push_str(&format!("{t},{r}\n"));
    }
    write_file(&out.join("coverage.csv"), &coverage)?;

    let mut trajectory = String::from("t,robot,x,y\n");
    for (i, p) in spawns.iter().enumerate() {
        trajectory.push_str(&format!("0,{i},{},{}\n", p.x, p.y));
    }
    for ev in &log.events {
        if let Event::Move { t, robot, row, col, .. } = *ev {
            let p = truth.cell_to_world(Cell::new(row, col));
            trajectory.push_str(&format!("{t},{robot},{},{}\n", p.x, p.y));
        }
    }
    write_file(&out.join("trajectory.csv"), &trajectory)?;

    save_map(&log.replay_map(truth), &out.join("map")).map_err(runtime)?;

    let mut events = log.to_jsonl();
    if !events.is_empty() && !events.ends_with('\n') {
        events.push('\n');
    }
    write_file(&out.join("events.jsonl"), &events)?;

    let meta = serde_json::json!({
        "created_unix": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_hash": metrics.config_hash,
        "command": std::env::args().collect::<Vec<_>>(),
    });
    let mut meta_json = serde_json::to_string_pretty(&meta).map_err(runtime)?;
    meta_json.push('\n');
    write_file(&out.join("meta.json"), &meta_json)
}

// ---------------------------------------------------------------- bench

#[derive(Args)]
struct BenchArgs {
    /// JSON experiment spec (entries of scenario/strategy/robots/spawn/seeds).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; overrides the spec's out_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | md | both; overrides the spec's format.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&a.spec)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", a.spec.display())))?;
    let spec: report::BenchSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad bench spec {}: {e}", a.spec.display())))?;
    if spec.entries.is_empty() {
        return Err(CliError::Usage("bench spec has no entries".into()));
    }

    // Resolve every name up front so a typo fails fast as a usage error.
    struct Job {
        scenario: String,
        spawn: String,
        robots: usize,
        strategy: String,
        seed: u64,
        cfg: RunConfig<f64>,
    }
    let mut jobs: Vec<Job> = Vec::new();
    for e in &spec.entries {
        let strategy = parse_strategy_name(&e.strategy)?;
        let scenario = resolve_scenario(&e.scenario)?;
        let spawn_mode = match &e.spawn {
            Some(s) => Some(parse_spawn_name(s)?),
            None => None,
        };
        let seeds = e
            .seeds
            .clone()
            .or_else(|| spec.seeds.clone())
            .unwrap_or_else(|| vec![0]);
        for &seed in &seeds {
            let mut cfg = RunConfig::new(scenario.clone(), strategy);
            cfg.n_robots = e.robots;
            cfg.seed = seed;
            cfg.spawn_mode = spawn_mode.clone();
            jobs.push(Job {
                scenario: e.scenario.clone(),
                spawn: e.spawn.clone().unwrap_or_else(|| "baked".into()),
                robots: e.robots,
                strategy: e.strategy.clone(),
                seed,
                cfg,
            });
        }
    }

    let workers = effective_workers(a.workers);
    let configs: Vec<_> = jobs.iter().map(|j| j.cfg.clone()).collect();
    let results = run_batch(configs, workers);

    let raw: Vec<report::RawResult> = jobs
        .iter()
        .zip(results)
        .map(|(j, r)| report::RawResult {
            scenario: j.scenario.clone(),
            spawn: j.spawn.clone(),
            robots: j.robots,
            strategy: j.strategy.clone(),
            seed: j.seed,
            ok: r.is_ok(),
            metrics: r.as_ref().ok().cloned(),
            error: r.err().map(|e| e.to_string()),
        })
        .collect();

    let format = a
        .format
        .or_else(|| spec.format.clone())
        .unwrap_or_else(|| "both".into());
    if !matches!(format.as_str(), "csv" | "md" | "both") {
        return Err(CliError::Usage(format!(
            "unknown format {format:?} (expected csv|md|both)"
        )));
    }
    let out_dir = a
        .out
        .or_else(|| spec.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bench_out"));
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", out_dir.display())))?;

    let mut raw_json = serde_json::to_string_pretty(&raw).map_err(runtime)?;
    raw_json.push('\n');
    write_file(&out_dir.join("bench_raw.json"), &raw_json)?;

    let table = report::build_table(&raw);
    if format == "csv" || format == "both" {
        write_file(&out_dir.join("report.csv"), &report::to_csv(&table))?;
    }
    let markdown = report::to_markdown(&table);
    if format == "md" || format == "both" {
        write_file(&out_dir.join("report.md"), &markdown)?;
    }
    print!("{markdown}");
    let failures = raw.iter().filter(|r| !r.ok).count();
    if failures > 0 {
        eprintln!("{failures} of {} runs failed; see bench_raw.json", raw.len());
    }
    Ok(())
}

// ---------------------------------------------------------------- gen

#[derive(Args)]
struct GenArgs {
    /// loop | corridor | corner | rooms | combination
    #[arg(long)]
    kind: String,
    /// Map extent in meters, e.g. 20x20.
    #[arg(long, default_value = "20x20")]
    extent: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stem; writes stem.pgm, stem.yaml, stem.json. Default kind_seed.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Baked spawn count.
    #[arg(long, default_value_t = 2)]
    robots: usize,
    /// Spawn placement for the baked poses.
    #[arg(long, value_enum, default_value_t = SpawnArg::Far)]
    spawn: SpawnArg,
    /// Cell size in meters.
    #[arg(long)]
    resolution: Option<f64>,
    /// loop: free ring width in meters.
    #[arg(long)]
    ring_width: Option<f64>,
    /// corridor: passage width in meters.
    #[arg(long)]
    width: Option<f64>,
    /// corridor: dividing-wall thickness in meters.
    #[arg(long)]
    length: Option<f64>,
    /// corner/rooms: feature count.
    #[arg(long)]
    count: Option<usize>,
    /// rooms: room size in meters.
    #[arg(long)]
    size: Option<f64>,
    /// corner: maximum partition size in meters.
    #[arg(long)]
    max_size: Option<f64>,
    /// combination: comma-separated element kinds, e.g. loop,corridor,corridor.
    #[arg(long)]
    elements: Option<String>,
}

fn gen_params_for(kind: &str, a: &GenArgs) -> Result<GenParams<f64>, CliError> {
    match kind {
        "loop" => Ok(GenParams::Loop {
            ring_width: a.ring_width.unwrap_or(4.0),
        }),
        "corridor" => Ok(GenParams::Corridor {
            width: a.width.unwrap_or(2.0),
            length: a.length.unwrap_or(6.0),
        }),
        "corner" => Ok(GenParams::Corner {
            count: a.count.unwrap_or(14),
            max_size: a.max_size.unwrap_or(3.0),
        }),
        "rooms" => Ok(GenParams::Rooms {
            count: a.count.unwrap_or(5),
            size: a.size.unwrap_or(4.0),
        }),
        "combination" => {
            let list = a.elements.as_deref().ok_or_else(|| {
                CliError::Usage(
                    "--kind combination needs --elements, e.g. --elements loop,corridor,corridor"
                        .into(),
                )
            })?;
            let mut elements = Vec::new();
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                if name == "combination" {
                    return Err(CliError::Usage("combination elements cannot nest".into()));
                }
                elements.push(gen_params_for(name, a)?);
            }
            if elements.is_empty() {
                return Err(CliError::Usage("--elements list is empty".into()));
            }
            Ok(GenParams::Combination { elements })
        }
        other => Err(CliError::Usage(format!(
            "unknown kind {other:?} (expected loop|corridor|corner|rooms|combination)"
        ))),
    }
}

fn parse_extent(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || CliError::Usage(format!("bad --extent {s:?} (expected WIDTHxHEIGHT in meters)"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: f64 = w.trim().parse().map_err(|_| bad())?;
    let h: f64 = h.trim().parse().map_err(|_| bad())?;
    if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
        return Err(bad());
    }
    Ok((w, h))
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    let extent = parse_extent(&a.extent)?;
    let params = gen_params_for(&a.kind, &a)?;
    let mut spec = GenSpec::new(params, extent, a.seed);
    if let Some(r) = a.resolution {
        spec.resolution = r;
    }
    spec.robots = a.robots;
    spec.spawn_mode = a.spawn.to_mode();
    let scenario = generate(&spec).map_err(|e| CliError::Runtime(format!("generation failed: {e}")))?;
    validate_scenario(&scenario).map_err(runtime)?;
    let stem = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}_{}", a.kind, a.seed)));
    ensure_parent_dir(&stem)?;
    save_scenario(&scenario, &stem).map_err(runtime)?;
    println!(
        "wrote {}.pgm {}.yaml {}.json",
        stem.display(),
        stem.display(),
        stem.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- speed

#[derive(Args)]
struct SpeedArgs {
    /// Runs in the throughput batch.
    #[arg(long, default_value_t = 8)]
    runs: usize,
    #[arg(long)]
    workers: Option<usize>,
}

fn cmd_speed(a: SpeedArgs) -> Result<(), CliError> {
    let scenario = resolve_scenario("corridor")?;

    let cfg = RunConfig::new(scenario.clone(), StrategyKind::Cost);
    let t0 = Instant::now();
    let (_, log) = run(cfg).map_err(runtime)?;
    let wall = t0.elapsed().as_secs_f64().max(1e-9);
    let sim = log.events.last().map(|e| e.time()).unwrap_or(0.0);
    println!(
        "corridor task: {sim} simulated s in {wall:.3} wall s = {:.0}x speed-up",
        sim / wall
    );

    let mut configs = Vec::with_capacity(a.runs);
    for seed in 0..a.runs as u64 {
        let mut cfg = RunConfig::new(scenario.clone(), StrategyKind::Cost);
        cfg.n_robots = 2;
        cfg.seed = seed;
        configs.push(cfg);
    }
    let t1 = Instant::now();
    let serial = run_batch(configs.clone(), 1);
    let wall_1 = t1.elapsed().as_secs_f64().max(1e-9);
    let workers = effective_workers(a.workers);
    let tw = Instant::now();
    let parallel = run_batch(configs, workers);
    let wall_w = tw.elapsed().as_secs_f64().max(1e-9);
    for r in serial.iter().chain(parallel.iter()) {
        if let Err(e) = r {
            return Err(CliError::Runtime(format!("batch run failed: {e}")));
        }
    }
    println!(
        "batch of {} two-robot corridor runs: {:.2} runs/s on 1 worker, {:.2} runs/s on {workers} workers ({:.2}x)",
        a.runs,
        a.runs as f64 / wall_1,
        a.runs as f64 / wall_w,
        wall_1 / wall_w
    );
    Ok(())
}

// ---------------------------------------------------------------- export-map

#[derive(Args)]
struct ExportMapArgs {
    /// Builtin scenario name or path to a generated scenario (.json).
    #[arg(long)]
    scenario: String,
    /// Output stem; defaults to the scenario name.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_export_map(a: ExportMapArgs) -> Result<(), CliError> {
    let scenario = resolve_scenario(&a.scenario)?;
    validate_scenario(&scenario).map_err(runtime)?;
    let stem = a.out.unwrap_or_else(|| PathBuf::from(&scenario.name));
    ensure_parent_dir(&stem)?;
    save_scenario(&scenario, &stem).map_err(runtime)?;
    println!(
        "wrote {}.pgm {}.yaml {}.json",
        stem.display(),
        stem.display(),
        stem.display()
    );
    Ok(())
}

// ---------------------------------------------------------------- env

fn cmd_env() -> Result<(), CliError> {
    let stdin = io::stdin();
    let stdout = io::stdout();
    let mut input = stdin.lock();
    let mut output = stdout.lock();
    protocol::serve(&mut input, &mut output)
        .map_err(|e| CliError::Runtime(format!("env protocol io: {e}")))
}
