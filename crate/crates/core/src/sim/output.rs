use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{RunFailure, SweepResult, TouchRecord};
use crate::error::Result;

pub const CSV_HEADER: [&str; 9] = [
    "run",
    "touch",
    "criterion",
    "action_id",
    "pos_err_m",
    "rot_err_geodesic_deg",
    "rot_err_euler_deg",
    "adi_m",
    "wall_s",
];

#[derive(Serialize)]
struct CsvRow<'a> {
    run: usize,
    touch: usize,
    criterion: &'a str,
    action_id: String,
    pos_err_m: f64,
    rot_err_geodesic_deg: f64,
    rot_err_euler_deg: f64,
    adi_m: f64,
    wall_s: f64,
}

pub fn write_csv_to<W: Write>(records: &[TouchRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in records {
        w.serialize(CsvRow {
            run: r.run,
            touch: r.touch,
            criterion: &r.criterion,
            action_id: r.action_id.map_or_else(|| "random-init".to_string(), |i| i.to_string()),
            pos_err_m: r.errors.position,
            rot_err_geodesic_deg: r.errors.rotation_geodesic_deg,
            rot_err_euler_deg: r.errors.rotation_euler_deg,
            adi_m: r.adi,
            wall_s: r.wall_s,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(records: &[TouchRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(records, std::io::BufWriter::new(file))
}

/// Mean and quartiles (linear interpolation between order statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Stats {
    /// Panics on an empty slice.
    pub fn of(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            q25: quantile(&sorted, 0.25),
            q50: quantile(&sorted, 0.5),
            q75: quantile(&sorted, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TouchSummary {
    pub touch: usize,
    pub runs: usize,
    pub adi_m: Stats,
    pub pos_err_m: Stats,
    pub rot_err_geodesic_deg: Stats,
    pub rot_err_euler_deg: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: String,
    pub touches: Vec<TouchSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub config: ExperimentConfig,
    pub criteria: Vec<CriterionSummary>,
    pub failures: Vec<RunFailure>,
}

impl Summary {
    pub fn criterion(&self, name: &str) -> Option<&CriterionSummary> {
        self.criteria.iter().find(|c| c.criterion == name)
    }
}

pub fn summarize(config: &ExperimentConfig, sweep: &SweepResult) -> Summary {
    let criteria = sweep
        .policies
        .iter()
        .map(|p| {
            let name = p.name();
            let touches = (1..=config.max_touches)
                .filter_map(|touch| {
                    let rows: Vec<&TouchRecord> = sweep
                        .records
                        .iter()
                        .filter(|r| r.criterion == name && r.touch == touch)
                        .collect();
                    if rows.is_empty() {
                        return None;
                    }
                    let stat = |f: fn(&TouchRecord) -> f64| Stats::of(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
                    Some(TouchSummary {
                        touch,
                        runs: rows.len(),
                        adi_m: stat(|r| r.adi),
                        pos_err_m: stat(|r| r.errors.position),
                        rot_err_geodesic_deg: stat(|r| r.errors.rotation_geodesic_deg),
                        rot_err_euler_deg: stat(|r| r.errors.rotation_euler_deg),
                    })
                })
                .collect();
            CriterionSummary {
                criterion: name.to_string(),
                touches,
            }
        })
        .collect();
    Summary {
        seed: config.seed,
        config: config.clone(),
        criteria,
        failures: sweep.failures.clone(),
    }
}

pub fn write_summary(summary: &Summary, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
