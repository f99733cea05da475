//! Acceptance gate: one test per criterion, run serially, each printing a
//! single pass/fail line (visible with `cargo test --test acceptance --
//! --nocapture`).

mod common;

use std::time::Instant;

use common::{
    bfs_len, criterion, dense_oracle, random_maze, random_partial_map, random_rectilinear_map,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridscout::exploration::ALL_STRATEGIES;
use gridscout::{
    builtin, cost_goal, detect_frontiers, detect_with_fallback, line_of_sight, overlap_ratio,
    plan, run, run_batch, sigma, simulate_scan, Cell, CellState, EpisodicEnv, Event, FrontierConfig,
    PlanConfig, PlanError, Pose, RunConfig, Scenario, SensorSpec, SpawnMode, StrategyInput,
    StrategyKind, TerminationReason,
};

#[test]
fn criterion_1_metric_formulas() {
    criterion(1, "metric formulas vs oracles", Some(1.0), || {
        assert_eq!(sigma(&[2.0, 4.0]).unwrap(), 1.0);
        let full: Vec<usize> = (0..500).collect();
        assert_eq!(overlap_ratio::<f64>(&[full.clone(), full], 500).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
        for _ in 0..1000 {
            let n = rng.random_range(1..10);
            let areas: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..500.0)).collect();
            let mean = areas.iter().sum::<f64>() / n as f64;
            let var = areas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
            let want = var.sqrt();
            let got = sigma(&areas).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "sigma {got} vs {want}"
            );
        }
        for _ in 0..1000 {
            let total = rng.random_range(50..200usize);
            let mut a = Vec::new();
            let mut b = Vec::new();
            for i in 0..total {
                if rng.random_bool(0.5) {
                    a.push(i);
                }
                if rng.random_bool(0.5) {
                    b.push(i);
                }
            }
            let inter = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
            let want = inter as f64 / total as f64;
            let got: f64 = overlap_ratio(&[a, b], total).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "r_o {got} vs {want}");
        }
    });
}

#[test]
fn criterion_2_frontier_oracle_equivalence() {
    criterion(2, "frontier detection vs definition scan", Some(5.0), || {
        let cfg = FrontierConfig {
            sensor_range: 7.0,
            min_cluster: 1,
        };
        for seed in 0..200u64 {
            let g = random_partial_map(seed);
            // brute-force definition: Free and 4-adjacent to an Unknown
            let mut want: Vec<usize> = (0..g.len())
                .filter(|&i| {
                    let cell = g.cell_at(i);
                    g.get(cell) == CellState::Free
                        && g.neighbors4(cell).any(|n| g.get(n) == CellState::Unknown)
                })
                .collect();
            want.sort_unstable();
            let mut got: Vec<usize> = detect_frontiers(&g, &cfg)
                .iter()
                .flat_map(|f| f.cells.iter().copied())
                .collect();
            got.sort_unstable();
            assert_eq!(got, want, "seed {seed}");
        }
    });
}

#[test]
fn criterion_3_planner_optimality() {
    criterion(3, "A* vs BFS on random mazes", Some(5.0), || {
        let cfg = PlanConfig::default();
        let mut solvable = 0;
        let mut blocked = 0;
        let mut seed = 0u64;
        while solvable < 200 {
            assert!(seed < 500, "not enough solvable mazes in 500 seeds");
            let (g, start, goal) = random_maze(seed);
            match (plan(&g, start, goal, &cfg), bfs_len(&g, start, goal)) {
                (Ok(p), Some(d)) => {
                    assert_eq!(p.cells.len() - 1, d, "seed {seed}: suboptimal path");
                    solvable += 1;
                }
                (Err(PlanError::NoPath { .. }), None) => blocked += 1,
                (got, want) => panic!("seed {seed}: A* {got:?} vs BFS {want:?}"),
            }
            seed += 1;
        }
        assert!(blocked > 0, "no unsolvable mazes exercised");
    });
}

#[test]
fn criterion_4_raycast_soundness() {
    criterion(4, "raycast LOS + dense-oracle agreement", Some(10.0), || {
        for seed in 0..50u64 {
            let g = random_rectilinear_map(seed, 120, 3..7);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0ffee);
            let free: Vec<Cell> = (0..g.len())
                .map(|i| g.cell_at(i))
                .filter(|&c| g.get(c) == CellState::Free)
                .collect();
            let c0 = free[rng.random_range(0..free.len())];
            let spec = SensorSpec { range: 3.0, rays: 720 };
            let scan = simulate_scan(&g.cell_to_world(c0), &spec, &g).unwrap();
            let got: Vec<usize> = {
                let mut v: Vec<usize> = scan
                    .observed_free
                    .iter()
                    .chain(&scan.observed_occupied)
                    .copied()
                    .collect();
                v.sort_unstable();
                v
            };
            for &i in &got {
                assert!(
                    line_of_sight(&g, c0, g.cell_at(i)),
                    "seed {seed}: observed cell {:?} lacks line of sight",
                    g.cell_at(i)
                );
            }
            let want = dense_oracle(&g, c0, 3.0);
            let diff = symmetric_difference_len(&got, &want);
            let inter = (got.len() + want.len() - diff) / 2;
            let union = got.len() + want.len() - inter;
            let ratio = diff as f64 / union as f64;
            assert!(
                ratio <= 0.02,
                "seed {seed}: {diff}/{union} cells disagree ({:.2}%)",
                100.0 * ratio
            );
        }
    });
}

fn symmetric_difference_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut diff) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                diff += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                diff += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    diff + (a.len() - i) + (b.len() - j)
}

fn room_config(strategy: StrategyKind, robots: usize, seed: u64, spawn: Option<SpawnMode<f64>>) -> RunConfig<f64> {
    let sc: Scenario<f64> = builtin("room").unwrap();
    let mut cfg = RunConfig::new(sc, strategy);
    cfg.n_robots = robots;
    cfg.seed = seed;
    cfg.spawn_mode = spawn;
    cfg
}

#[test]
fn criterion_5_strategy_ordering() {
    criterion(5, "field vs cost ordering on room", Some(120.0), || {
        let mean_t_total = |strategy: StrategyKind| -> f64 {
            let mut sum = 0.0;
            for seed in 0..5 {
                let (m, _) = run(room_config(strategy, 1, seed, None)).unwrap();
                sum += m.t_total.expect("room must complete");
            }
            sum / 5.0
        };
        let cost_t = mean_t_total(StrategyKind::Cost);
        let field_t = mean_t_total(StrategyKind::Field);
        assert!(
            field_t < cost_t,
            "mean T_total: field {field_t:.1} s !< cost {cost_t:.1} s"
        );

        let mean_r_o = |strategy: StrategyKind| -> f64 {
            let mut sum = 0.0;
            for seed in 0..5 {
                let (m, _) =
                    run(room_config(strategy, 2, seed, Some(SpawnMode::Close))).unwrap();
                sum += m.r_o;
            }
            sum / 5.0
        };
        let cost_r = mean_r_o(StrategyKind::Cost);
        let field_r = mean_r_o(StrategyKind::Field);
        assert!(
            field_r < cost_r,
            "close-spawn overlap: field {field_r:.3} !< cost {cost_r:.3}"
        );
    });
}

#[test]
fn criterion_6_speed() {
    criterion(6, "simulated/wall-clock speed", None, || {
        let sc: Scenario<f64> = builtin("corridor").unwrap();
        let cfg = RunConfig::new(sc.clone(), StrategyKind::Cost);
        let start = Instant::now();
        let (m, _) = run(cfg).unwrap();
        let wall = start.elapsed().as_secs_f64();
        let sim = m.t_total.expect("corridor completes");
        // the 10 m traverse component alone needs 10 simulated seconds
        assert!(sim >= 10.0, "simulated time {sim} s below traverse bound");
        assert!(
            sim / wall >= 5.0,
            "speed-up {:.1}x below 5x (sim {sim:.0} s, wall {wall:.2} s)",
            sim / wall
        );

        // parallel batch: 8 runs on 8 workers vs the same batch sequentially
        let configs: Vec<RunConfig<f64>> = (0..8)
            .map(|seed| {
                let mut c = RunConfig::new(sc.clone(), StrategyKind::Cost);
                c.n_robots = 2;
                c.seed = seed;
                c
            })
            .collect();
        let start = Instant::now();
        let seq = run_batch(configs.clone(), 1);
        let t1 = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let par = run_batch(configs, 8);
        let t8 = start.elapsed().as_secs_f64();
        for (a, b) in seq.iter().zip(&par) {
            assert_eq!(a.as_ref().unwrap(), b.as_ref().unwrap());
        }
        assert!(
            t8 < 2.0 * t1,
            "8-worker batch {t8:.2} s not within 2x of sequential {t1:.2} s"
        );
        println!(
            "  speed: {:.0}x sim/wall, batch 8w {t8:.2} s vs 1w {t1:.2} s",
            sim / wall
        );
    });
}

fn sweep_configs(spawn: Option<SpawnMode<f64>>) -> Vec<RunConfig<f64>> {
    let mut configs = Vec::new();
    for name in gridscout::BUILTIN_NAMES {
        let sc: Scenario<f64> = builtin(name).unwrap();
        for strategy in ALL_STRATEGIES {
            for robots in [1usize, 2] {
                let mut cfg = RunConfig::new(sc.clone(), strategy);
                cfg.n_robots = robots;
                cfg.seed = 7;
                cfg.spawn_mode = spawn.clone();
                configs.push(cfg);
            }
        }
    }
    configs
}

#[test]
fn criterion_7_end_to_end_determinism() {
    criterion(7, "byte-identical logs and worker independence", Some(300.0), || {
        let configs = sweep_configs(None);
        let mut first = Vec::new();
        for cfg in &configs {
            let (m, log) = run(cfg.clone()).unwrap();
            first.push((m, log.to_jsonl()));
        }
        for (i, cfg) in configs.iter().enumerate() {
            let (m, log) = run(cfg.clone()).unwrap();
            assert_eq!(log.to_jsonl(), first[i].1, "log differs on rerun: config {i}");
            assert_eq!(m, first[i].0, "metrics differ on rerun: config {i}");
        }
        let batched = run_batch(configs, 8);
        for (i, got) in batched.into_iter().enumerate() {
            assert_eq!(got.unwrap(), first[i].0, "metrics differ under 8 workers: config {i}");
        }
    });
}

#[test]
fn criterion_8_completion_sweep() {
    criterion(8, "96-combination completion", Some(600.0), || {
        let mut configs = sweep_configs(Some(SpawnMode::Far));
        configs.extend(sweep_configs(Some(SpawnMode::Close)));
        assert_eq!(configs.len(), 96);
        let results = run_batch(configs, 1);
        for (i, r) in results.into_iter().enumerate() {
            let m = r.unwrap_or_else(|e| panic!("combination {i} failed: {e}"));
            assert!(
                m.t_total.is_some(),
                "combination {i} did not reach 99% before timeout"
            );
        }
    });
}

#[test]
fn criterion_9_cross_api_equivalence() {
    criterion(9, "episodic API reproduces run(cost)", Some(120.0), || {
        let sc: Scenario<f64> = builtin("corridor").unwrap();
        let mut cfg = RunConfig::new(sc, StrategyKind::Cost);
        cfg.n_robots = 2;
        cfg.seed = 1;
        let (want, want_log) = run(cfg.clone()).unwrap();

        let mut env = EpisodicEnv::new(cfg);
        let mut obs = env.reset().unwrap();
        let fcfg = FrontierConfig::<f64>::default();
        while !obs.done {
            let frontiers = detect_with_fallback(&obs.merged, &fcfg);
            let goals: Vec<Pose<f64>> = (0..obs.poses.len())
                .map(|i| {
                    let input = StrategyInput {
                        merged_map: &obs.merged,
                        poses: &obs.poses,
                        robot: i,
                    };
                    cost_goal(&input, &frontiers).unwrap_or(obs.poses[i])
                })
                .collect();
            let (next, _, _) = env.step(&goals).unwrap();
            obs = next;
        }
        let (got, got_log) = env.finish().unwrap();
        assert_eq!(got, want, "metrics diverge between APIs");
        assert_eq!(got_log, want_log, "event logs diverge between APIs");
        assert!(matches!(
            got_log.events.last(),
            Some(Event::Termination { reason: TerminationReason::TargetReached, .. })
        ));
    });
}
