use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Reduce, SweepSpec};
use crate::error::{HarnessError, Result};
use crate::run::{execute, write_file, write_json, CODE_VERSION};

/// One reduced run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub series: Option<f64>,
    pub value: f64,
    /// One entry per requested column, in request order.
    pub stats: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepSummary {
    pub fn header(&self) -> Vec<String> {
        let mut h = Vec::new();
        if let Some(s) = &self.spec.series {
            h.push(s.axis.clone());
        }
        h.push(self.spec.axis.clone());
        let suffix = match self.spec.reduce {
            Reduce::Max => "max",
            Reduce::MeanLastFivePeriods => "mean_last5",
        };
        h.extend(self.spec.columns.iter().map(|c| format!("{}_{suffix}", c.name())));
        h.push("error".into());
        h
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for row in &self.rows {
            let mut record = Vec::new();
            if self.spec.series.is_some() {
                record.push(row.series.map(|v| v.to_string()).unwrap_or_default());
            }
            record.push(row.value.to_string());
            record.extend(row.stats.iter().map(|s| s.map(|v| v.to_string()).unwrap_or_default()));
            record.push(row.error.clone().unwrap_or_default());
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes `summary.csv` and `run.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(HarnessError::io(dir))?;
        let summary = write_file(dir, "summary.csv", |w| self.write_csv(w).map_err(std::io::Error::other))?;
        #[derive(Serialize)]
        struct Record<'a> {
            code_version: &'static str,
            scenario: &'a crate::config::ScenarioSpec,
            axis: &'a str,
            linked: &'a [String],
            values: &'a [f64],
            series: Option<&'a crate::config::SeriesAxis>,
            reduce: Reduce,
            columns: Vec<&'static str>,
            files: [&'static str; 1],
        }
        let record = Record {
            code_version: CODE_VERSION,
            scenario: &self.spec.base,
            axis: &self.spec.axis,
            linked: &self.spec.linked,
            values: &self.spec.values,
            series: self.spec.series.as_ref(),
            reduce: self.spec.reduce,
            columns: self.spec.columns.iter().map(|c| c.name()).collect(),
            files: ["summary.csv"],
        };
        let manifest = write_json(dir, "run.json", &record)?;
        Ok(vec![summary, manifest])
    }
}

/// Runs every point of the sweep on at most `workers` threads. Failed points
/// carry their error message; rows follow the manifest order.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepSummary> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Sweep { origin: spec.base.name.clone(), message: e.to_string() })?;
    let points = spec.points();
    let rows = pool.install(|| {
        points
            .par_iter()
            .map(|(series, value, point)| match execute(point) {
                Ok(out) => SweepRow {
                    series: *series,
                    value: *value,
                    stats: spec.columns.iter().map(|c| out.reduce(*c, spec.reduce)).collect(),
                    error: None,
                },
                Err(e) => SweepRow {
                    series: *series,
                    value: *value,
                    stats: vec![None; spec.columns.len()],
                    error: Some(e.to_string()),
                },
            })
            .collect()
    });
    Ok(SweepSummary { spec: spec.clone(), rows })
}
