//! Newline-delimited JSON environment server.
//!
//! One request per line on stdin, one reply per line on stdout. `reset`
//! starts an episode and answers with an `obs`; `step` advances one decision
//! period with one world-frame goal per robot and answers with an `obs`.
//! When an episode finishes, a final `done` message with the run metrics
//! follows the terminal observation. Malformed requests get an `error` reply
//! and the session keeps serving; EOF shuts the server down cleanly.

use std::io::{self, BufRead, Write};

use gridscout::{
    EnvObservation, EpisodicEnv, Pose, RunConfig, RunMetrics, StepInfo, StrategyKind,
    TerminationReason,
};
use serde::{Deserialize, Serialize};

use crate::{parse_spawn_name, parse_strategy_name, resolve_scenario, CliError};

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum InMsg {
    Reset(ResetFields),
    Step { goals: Vec<[f64; 2]> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResetFields {
    scenario: String,
    /// Kept for config-hash parity with `run`; goal routing ignores it.
    #[serde(default)]
    strategy: Option<String>,
    #[serde(default)]
    robots: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    spawn: Option<String>,
    #[serde(default)]
    sensor_range: Option<f64>,
    #[serde(default)]
    rays: Option<usize>,
    #[serde(default)]
    v_max: Option<f64>,
    #[serde(default)]
    decision_period: Option<f64>,
    #[serde(default)]
    target_ratio: Option<f64>,
    #[serde(default)]
    topo_ratio: Option<f64>,
    #[serde(default)]
    timeout: Option<f64>,
}

#[derive(Serialize)]
struct MapMsg {
    width: usize,
    height: usize,
    resolution: f64,
    /// Row-major, row 0 first; 'F' free, 'O' occupied, 'U' unknown.
    rows: Vec<String>,
}

#[derive(Serialize)]
struct ObsMsg {
    r#type: &'static str,
    t: f64,
    ratio: f64,
    done: bool,
    poses: Vec<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clamped: Option<Vec<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    no_goal: Option<Vec<bool>>,
    map: MapMsg,
}

#[derive(Serialize)]
struct DoneMsg {
    r#type: &'static str,
    reason: TerminationReason,
    metrics: RunMetrics<f64>,
}

#[derive(Serialize)]
struct ErrorMsg<'a> {
    r#type: &'static str,
    message: &'a str,
}

fn run_config_from(f: &ResetFields) -> Result<RunConfig<f64>, CliError> {
    let scenario = resolve_scenario(&f.scenario)?;
    let strategy = match &f.strategy {
        Some(s) => parse_strategy_name(s)?,
        None => StrategyKind::Goal,
    };
    let mut cfg = RunConfig::new(scenario, strategy);
    if let Some(v) = f.robots {
        cfg.n_robots = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    cfg.spawn_mode = match &f.spawn {
        Some(s) => Some(parse_spawn_name(s)?),
        None => None,
    };
    if let Some(v) = f.sensor_range {
        cfg.sensor.range = v;
    }
    if let Some(v) = f.rays {
        cfg.sensor.rays = v;
    }
    if let Some(v) = f.v_max {
        cfg.v_max = v;
    }
    if let Some(v) = f.decision_period {
        cfg.decision_period = v;
    }
    if let Some(v) = f.target_ratio {
        cfg.target_ratio = v;
    }
    if let Some(v) = f.topo_ratio {
        cfg.topo_ratio = v;
    }
    if let Some(v) = f.timeout {
        cfg.timeout = v;
    }
    Ok(cfg)
}

fn send(out: &mut dyn Write, msg: &impl Serialize) -> io::Result<()> {
    let line = serde_json::to_string(msg)?;
    writeln!(out, "{line}")?;
    out.flush()
}

fn send_error(out: &mut dyn Write, message: &str) -> io::Result<()> {
    send(out, &ErrorMsg { r#type: "error", message })
}

fn send_obs(
    out: &mut dyn Write,
    obs: &EnvObservation<f64>,
    info: Option<&StepInfo>,
) -> io::Result<()> {
    let msg = ObsMsg {
        r#type: "obs",
        t: obs.t,
        ratio: obs.ratio,
        done: obs.done,
        poses: obs.poses.iter().map(|p| [p.x, p.y, p.theta]).collect(),
        clamped: info.map(|i| i.clamped.clone()),
        no_goal: info.map(|i| i.no_goal.clone()),
        map: MapMsg {
            width: obs.merged.width(),
            height: obs.merged.height(),
            resolution: obs.merged.resolution(),
            rows: obs.merged.rows_as_strings(),
        },
    };
    send(out, &msg)
}

/// Emits the final `done` line for a finished episode.
fn send_done(out: &mut dyn Write, env: EpisodicEnv<f64>) -> io::Result<()> {
    let reason = env.engine().and_then(|e| e.done());
    if let (Some(reason), Some((metrics, _log))) = (reason, env.finish()) {
        send(out, &DoneMsg { r#type: "done", reason, metrics })?;
    }
    Ok(())
}

fn message_of(e: &CliError) -> &str {
    match e {
        CliError::Usage(m) | CliError::Runtime(m) => m,
    }
}

pub fn serve(input: &mut dyn BufRead, output: &mut dyn Write) -> io::Result<()> {
    let mut session: Option<EpisodicEnv<f64>> = None;
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let msg: InMsg = match serde_json::from_str(trimmed) {
            Ok(m) => m,
            Err(e) => {
                send_error(output, &format!("bad message: {e}"))?;
                continue;
            }
        };
        match msg {
            InMsg::Reset(fields) => {
                session = None;
                let cfg = match run_config_from(&fields) {
                    Ok(cfg) => cfg,
                    Err(e) => {
                        send_error(output, message_of(&e))?;
                        continue;
                    }
                };
                let mut env = EpisodicEnv::new(cfg);
                match env.reset() {
                    Err(e) => send_error(output, &e.to_string())?,
                    Ok(obs) => {
                        let done = obs.done;
                        send_obs(output, &obs, None)?;
                        if done {
                            send_done(output, env)?;
                        } else {
                            session = Some(env);
                        }
                    }
                }
            }
            InMsg::Step { goals } => {
                let Some(env) = session.as_mut() else {
                    send_error(output, "step before reset")?;
                    continue;
                };
                let poses: Vec<Pose<f64>> =
                    goals.iter().map(|g| Pose::xy(g[0], g[1])).collect();
                match env.step(&poses) {
                    Err(e) => send_error(output, &e.to_string())?,
                    Ok((obs, done, info)) => {
                        send_obs(output, &obs, Some(&info))?;
                        if done {
                            let env = session.take().expect("session exists");
                            send_done(output, env)?;
                        }
                    }
                }
            }
        }
    }
}
