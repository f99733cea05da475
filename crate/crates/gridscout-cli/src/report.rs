//! Bench sweep spec and result-table rendering.
//!
//! Tables have one row per scenario/spawn/robots combination and one column
//! block per strategy. Cells are means over seeds; a cell where any seeded
//! run failed or timed out before its threshold renders as "—". Formatting
//! only reads the raw per-run metrics, it never recomputes them.

use std::path::PathBuf;

use gridscout::RunMetrics;
use serde::{Deserialize, Serialize};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    pub entries: Vec<BenchEntry>,
    /// Default seed list for entries that do not carry their own.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// csv | md | both.
    #[serde(default)]
    pub format: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchEntry {
    pub scenario: String,
    pub strategy: String,
    #[serde(default = "default_robots")]
    pub robots: usize,
    /// far | close; omitted means the scenario's baked spawns.
    #[serde(default)]
    pub spawn: Option<String>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

fn default_robots() -> usize {
    1
}

/// One run's outcome, as dumped to bench_raw.json.
#[derive(Serialize)]
pub struct RawResult {
    pub scenario: String,
    pub spawn: String,
    pub robots: usize,
    pub strategy: String,
    pub seed: u64,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<RunMetrics<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

const METRIC_NAMES: [&str; 4] = ["t_topo", "t_total", "sigma", "r_o"];
const METRIC_HEADINGS: [&str; 4] = ["T_topo", "T_total", "σ", "r_o"];

pub struct Table {
    pub strategies: Vec<String>,
    /// Whether σ and r_o columns are included (any multi-robot entry).
    pub multi: bool,
    pub rows: Vec<TableRow>,
}

pub struct TableRow {
    pub scenario: String,
    pub spawn: String,
    pub robots: usize,
    /// cells[strategy][metric], in `strategies` × metric-column order.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn metric_count(&self) -> usize {
        if self.multi {
            4
        } else {
            2
        }
    }
}

/// Mean when every value is present, otherwise None.
fn mean_of(values: &[Option<f64>]) -> Option<f64> {
    if values.is_empty() || values.iter().any(Option::is_none) {
        return None;
    }
    Some(values.iter().map(|v| v.unwrap()).sum::<f64>() / values.len() as f64)
}

pub fn build_table(raw: &[RawResult]) -> Table {
    let mut strategies: Vec<String> = Vec::new();
    for r in raw {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy.clone());
        }
    }
    let multi = raw.iter().any(|r| r.robots >= 2);
    let metric_count = if multi { 4 } else { 2 };

    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in raw {
        let key = (r.scenario.clone(), r.spawn.clone(), r.robots);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }

    let mut rows = Vec::with_capacity(keys.len());
    for (scenario, spawn, robots) in keys {
        let mut cells = Vec::with_capacity(strategies.len());
        for strategy in &strategies {
            let group: Vec<&RawResult> = raw
                .iter()
                .filter(|r| {
                    r.scenario == scenario
                        && r.spawn == spawn
                        && r.robots == robots
                        && &r.strategy == strategy
                })
                .collect();
            let mut metric_cells = Vec::with_capacity(metric_count);
            for metric in 0..metric_count {
                let per_seed: Vec<Option<f64>> = group
                    .iter()
                    .map(|r| {
                        r.metrics.as_ref().and_then(|m| match metric {
                            0 => m.t_topo,
                            1 => m.t_total,
                            2 => Some(m.sigma),
                            _ => Some(m.r_o),
                        })
                    })
                    .collect();
                metric_cells.push(mean_of(&per_seed));
            }
            cells.push(metric_cells);
        }
        rows.push(TableRow { scenario, spawn, robots, cells });
    }
    Table { strategies, multi, rows }
}

fn fmt_cell(metric: usize, value: Option<f64>) -> String {
    match value {
        None => "—".into(),
        Some(v) => match metric {
            0 | 1 => format!("{v:.1}"),
            2 => format!("{v:.2}"),
            _ => format!("{v:.3}"),
        },
    }
}

pub fn to_csv(table: &Table) -> String {
    let mut out = String::from("scenario,spawn,robots");
    for s in &table.strategies {
        for m in &METRIC_NAMES[..table.metric_count()] {
            out.push_str(&format!(",{s}_{m}"));
        }
    }
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!("{},{},{}", row.scenario, row.spawn, row.robots));
        for cells in &row.cells {
            for (m, &v) in cells.iter().enumerate() {
                out.push(',');
                out.push_str(&fmt_cell(m, v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn to_markdown(table: &Table) -> String {
    let mut header = String::from("| scenario | spawn | robots |");
    let mut rule = String::from("| --- | --- | --- |");
    for s in &table.strategies {
        for h in &METRIC_HEADINGS[..table.metric_count()] {
            header.push_str(&format!(" {s} {h} |"));
            rule.push_str(" ---: |");
        }
    }
    let mut out = format!("{header}\n{rule}\n");
    for row in &table.rows {
        out.push_str(&format!(
            "| {} | {} | {} |",
            row.scenario, row.spawn, row.robots
        ));
        for cells in &row.cells {
            for (m, &v) in cells.iter().enumerate() {
                out.push_str(&format!(" {} |", fmt_cell(m, v)));
            }
        }
        out.push('\n');
    }
    out
}
