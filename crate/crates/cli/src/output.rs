//! Deterministic CSV and JSON rendering of run results.

use std::io::Write;

use rsma_sgf::model::linear_to_db;
use rsma_sgf::montecarlo::SweepRow;
use rsma_sgf::zones::ZoneCell;
use rsma_sgf::CaseLabel;
use serde_json::{json, Map, Value};

use crate::experiment::Experiment;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub const SWEEP_COLUMNS: [&str; 24] = [
    "axis_value",
    "scheme",
    "mc_gfu_outage",
    "mc_std_err",
    "mc_gbu_outage",
    "analytic_exact",
    "analytic_highsnr",
    "analytic_asymptote",
    "trials",
    "seed",
    "case1_frac",
    "case2_frac",
    "case3_frac",
    "unresolved",
    "case1_outage",
    "case2_outage",
    "case3_outage",
    "num_gfus",
    "gbu_power_db",
    "gfu_power_db",
    "target_rate_gbu",
    "target_rate_gfu",
    "noma_pc_outage",
    "error",
];

pub const ZONE_COLUMNS: [&str; 3] = ["target_gbu", "target_gfu", "zone_label"];

#[derive(Debug, Clone, PartialEq)]
enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_string(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

fn opt(v: Option<f64>) -> Cell {
    v.map_or(Cell::Empty, Cell::Num)
}

fn sweep_cells(row: &SweepRow) -> Vec<Cell> {
    let est = row.estimate.as_ref();
    let an = row.analytic.as_ref();
    let cfg = row.config.as_ref();
    let case = |f: &dyn Fn(CaseLabel) -> f64| -> [Cell; 3] { CaseLabel::ALL.map(|c| opt(est.map(|_| f(c)))) };
    let [f1, f2, f3] = case(&|c| est.map_or(0.0, |e| e.case_fraction(c)));
    let [o1, o2, o3] = case(&|c| est.map_or(0.0, |e| e.case_outage_prob(c)));
    vec![
        Cell::Num(row.axis_value),
        Cell::Text(row.scheme.name().to_string()),
        opt(est.map(|e| e.gfu_outage_prob)),
        opt(est.map(|e| e.std_err_gfu)),
        opt(est.map(|e| e.gbu_outage_prob)),
        opt(an.map(|a| a.exact)),
        opt(an.map(|a| a.highsnr)),
        opt(an.map(|a| a.asymptote)),
        est.map_or(Cell::Empty, |e| Cell::Int(e.trials)),
        est.map_or(Cell::Empty, |e| Cell::Int(e.seed)),
        f1,
        f2,
        f3,
        est.map_or(Cell::Empty, |e| Cell::Bool(!e.gfu_resolved())),
        o1,
        o2,
        o3,
        cfg.map_or(Cell::Empty, |c| Cell::Int(c.num_gfus() as u64)),
        opt(cfg.map(|c| linear_to_db(c.power_gbu()))),
        opt(cfg.map(|c| linear_to_db(c.power_gfu()))),
        opt(cfg.map(|c| c.target_rate_gbu())),
        opt(cfg.map(|c| c.target_rate_gfu())),
        // The power-controlled NOMA variant is not implemented.
        Cell::Empty,
        row.error.as_ref().map_or(Cell::Empty, |e| Cell::Text(e.clone())),
    ]
}

fn zone_cells(cell: &ZoneCell) -> Vec<Cell> {
    vec![Cell::Num(cell.target_gbu), Cell::Num(cell.target_gfu), Cell::Text(cell.label.name().to_string())]
}

/// Results of executing an experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum RunResult {
    Sweep(Vec<SweepRow>),
    Zone(Vec<ZoneCell>),
}

impl RunResult {
    fn table(&self) -> (&'static [&'static str], Vec<Vec<Cell>>) {
        match self {
            RunResult::Sweep(rows) => (&SWEEP_COLUMNS, rows.iter().map(sweep_cells).collect()),
            RunResult::Zone(cells) => (&ZONE_COLUMNS, cells.iter().map(zone_cells).collect()),
        }
    }
}

/// Renders a result. The output depends only on its arguments; pass
/// `timestamp = None` for byte-reproducible files.
pub fn render(
    experiment: &Experiment,
    result: &RunResult,
    format: Format,
    timestamp: Option<u64>,
) -> Result<Vec<u8>, CliError> {
    let (columns, rows) = result.table();
    match format {
        Format::Csv => {
            let mut out = Vec::new();
            writeln!(out, "# experiment={}", experiment.name)?;
            for m in &experiment.metadata {
                writeln!(out, "# {}={} source={}", m.key, m.value, m.source)?;
            }
            if let Some(t) = timestamp {
                writeln!(out, "# generated_unix={t}")?;
            }
            let mut w = csv::Writer::from_writer(out);
            w.write_record(columns)?;
            for row in &rows {
                w.write_record(row.iter().map(Cell::csv))?;
            }
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))
        }
        Format::Json => {
            let metadata: Vec<Value> = experiment
                .metadata
                .iter()
                .map(|m| json!({"key": m.key, "value": m.value, "source": m.source.to_string()}))
                .collect();
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut obj = Map::new();
                    for (name, cell) in columns.iter().zip(r) {
                        obj.insert(name.to_string(), cell.json());
                    }
                    Value::Object(obj)
                })
                .collect();
            let mut doc = json!({
                "experiment": experiment.name,
                "metadata": metadata,
                "columns": columns,
                "rows": rows,
            });
            if let Some(t) = timestamp {
                doc["generated_unix"] = json!(t);
            }
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}
