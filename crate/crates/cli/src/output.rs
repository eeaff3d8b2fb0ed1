//! CSV and JSON artifacts consumed by the plotting scripts.

use std::fs::File;
use std::path::{Path, PathBuf};

use faf_core::ensemble::{fit_linear_quadratic, fit_loglog_slope, Aggregate, Axis, Experiment, QuadraticFit, RunRecord, SweepPlan};
use faf_core::fit::LineFit;
use faf_core::SOFTWARE_VERSION;
use serde::Serialize;

use crate::error::CliError;

/// Bumped whenever a column or JSON field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

pub const RECORDS_FILE: &str = "records.csv";
pub const DECOMPOSITION_FILE: &str = "decomposition.csv";
pub const AGGREGATE_FILE: &str = "aggregate.json";

const PARTIAL_SUFFIX: &str = ".partial";

const KEY_COLUMNS: [&str; 10] = [
    "schema_version",
    "experiment",
    "model",
    "L",
    "W",
    "delta",
    "boundary",
    "seed",
    "point",
    "realization",
];

const DECOMPOSITION_COLUMNS: [&str; 6] = [
    "norm_parallel",
    "norm_perp",
    "norm_total",
    "norm_mode_span",
    "pythagoras_defect",
    "error",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Row layout of the record table for one experiment.
#[derive(Debug, Clone, Copy)]
pub struct RecordTable {
    experiment: Experiment,
    kmax: u32,
}

impl RecordTable {
    pub fn for_plan(plan: &SweepPlan) -> Self {
        Self {
            experiment: plan.experiment,
            kmax: plan.kmax,
        }
    }

    pub fn file_name(&self) -> &'static str {
        match self.experiment {
            Experiment::Decompose => DECOMPOSITION_FILE,
            _ => RECORDS_FILE,
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut cols: Vec<String> = KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
        if self.experiment == Experiment::Decompose {
            cols.extend(DECOMPOSITION_COLUMNS.iter().map(|s| s.to_string()));
            return cols;
        }
        cols.extend(["eigenindex", "time", "energy"].map(String::from));
        cols.extend((1..=self.kmax).map(|k| format!("F{k}")));
        cols.extend(["czz_max", "czz_site", "R", "flags", "error"].map(String::from));
        cols
    }

    fn key(rec: &RunRecord) -> Vec<String> {
        vec![
            SCHEMA_VERSION.to_string(),
            rec.experiment.as_str().to_string(),
            rec.model.as_str().to_string(),
            rec.point.sites.to_string(),
            rec.point.disorder.to_string(),
            rec.point.delta.to_string(),
            rec.boundary.as_str().to_string(),
            rec.seed.to_string(),
            rec.point.index.to_string(),
            rec.realization.to_string(),
        ]
    }

    /// CSV rows of one record. A failed record yields a single row carrying
    /// the error message.
    pub fn rows(&self, rec: &RunRecord) -> Vec<Vec<String>> {
        let key = Self::key(rec);
        let width = self.header().len();
        let error_row = |msg: &str| {
            let mut row = key.clone();
            row.resize(width - 1, String::new());
            row.push(msg.to_string());
            row
        };
        if let Some(msg) = &rec.error {
            return vec![error_row(msg)];
        }
        if self.experiment == Experiment::Decompose {
            return match &rec.decomposition {
                Some(d) => {
                    let mut row = key;
                    row.extend(
                        [d.norm_parallel, d.norm_perp, d.norm_total, d.norm_mode_span, d.pythagoras_defect()]
                            .iter()
                            .map(f64::to_string),
                    );
                    row.push(String::new());
                    vec![row]
                }
                None => vec![error_row("missing decomposition")],
            };
        }
        rec.rows
            .iter()
            .map(|r| {
                let mut row = key.clone();
                row.push(opt(r.eigenindex));
                row.push(opt(r.time));
                row.push(r.energy.to_string());
                row.extend(r.faf.iter().map(f64::to_string));
                row.push(opt(r.czz_max));
                row.push(opt(r.czz_site));
                row.push(opt(r.r));
                row.push(r.flags.join(";"));
                row.push(String::new());
                row
            })
            .collect()
    }
}

/// Appends records in completion order to `<name>.partial` so an interrupted
/// sweep leaves salvageable rows, then [`finish`](Self::finish) rewrites the
/// sorted table under the final name.
pub struct RecordWriter {
    table: RecordTable,
    partial: PathBuf,
    target: PathBuf,
    writer: csv::Writer<File>,
}

impl RecordWriter {
    pub fn create(dir: &Path, table: RecordTable) -> Result<Self, CliError> {
        let target = dir.join(table.file_name());
        let partial = dir.join(format!("{}{PARTIAL_SUFFIX}", table.file_name()));
        let file = File::create(&partial).map_err(CliError::io(&partial))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(table.header())?;
        Ok(Self {
            table,
            partial,
            target,
            writer,
        })
    }

    pub fn append(&mut self, rec: &RunRecord) -> Result<(), CliError> {
        for row in self.table.rows(rec) {
            self.writer.write_record(&row)?;
        }
        self.writer.flush().map_err(CliError::io(&self.partial))
    }

    /// Writes the sorted table and removes the partial file. Returns the
    /// final path and the number of data rows.
    pub fn finish(self, sorted: &[RunRecord]) -> Result<(PathBuf, usize), CliError> {
        drop(self.writer);
        let rows = write_records(&self.target, self.table, sorted)?;
        std::fs::remove_file(&self.partial).map_err(CliError::io(&self.partial))?;
        Ok((self.target, rows))
    }
}

pub fn write_records(path: &Path, table: RecordTable, records: &[RunRecord]) -> Result<usize, CliError> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(table.header())?;
    let mut rows = 0;
    for rec in records {
        for row in table.rows(rec) {
            writer.write_record(&row)?;
            rows += 1;
        }
    }
    writer.flush().map_err(CliError::io(path))?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct DisorderSlope {
    pub sites: usize,
    pub delta: f64,
    pub observable: String,
    pub fit: Option<LineFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaCurve {
    pub sites: usize,
    pub disorder: f64,
    pub observable: String,
    pub fit: Option<QuadraticFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Fits {
    /// Log-log slope of the observable mean against `W` at fixed `(L, Δ)`.
    pub disorder_slopes: Vec<DisorderSlope>,
    /// `aΔ + bΔ²` fit of the observable mean at fixed `(L, W)`.
    pub delta_curves: Vec<DeltaCurve>,
}

fn headline_observable(experiment: Experiment) -> Option<&'static str> {
    match experiment {
        Experiment::EigenFaf | Experiment::ResonanceScan => Some("f1"),
        Experiment::Decompose => Some("norm_perp"),
        Experiment::Dynamics | Experiment::LbitDynamics => None,
    }
}

fn distinct(values: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

pub fn sweep_fits(plan: &SweepPlan, aggregates: &[Aggregate]) -> Fits {
    let Some(observable) = headline_observable(plan.experiment) else {
        return Fits::default();
    };
    let mut fits = Fits::default();
    for &sites in &plan.sites {
        for &delta in &plan.delta {
            let group: Vec<Aggregate> = aggregates
                .iter()
                .filter(|a| a.point.sites == sites && a.point.delta == delta && a.point.disorder > 0.0)
                .cloned()
                .collect();
            if distinct(group.iter().map(|a| a.point.disorder)) < 3 {
                continue;
            }
            let result = fit_loglog_slope(&group, Axis::Disorder, observable, (0.0, f64::INFINITY));
            fits.disorder_slopes.push(DisorderSlope {
                sites,
                delta,
                observable: observable.to_string(),
                error: result.as_ref().err().map(ToString::to_string),
                fit: result.ok(),
            });
        }
        for &disorder in &plan.disorder {
            let (x, y): (Vec<f64>, Vec<f64>) = aggregates
                .iter()
                .filter(|a| a.point.sites == sites && a.point.disorder == disorder && a.point.delta != 0.0)
                .filter_map(|a| a.scalar(observable).map(|s| (a.point.delta, s.mean)))
                .unzip();
            if distinct(x.iter().copied()) < 2 {
                continue;
            }
            let result = fit_linear_quadratic(&x, &y);
            fits.delta_curves.push(DeltaCurve {
                sites,
                disorder,
                observable: observable.to_string(),
                error: result.as_ref().err().map(ToString::to_string),
                fit: result.ok(),
            });
        }
    }
    fits
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateFile<'a> {
    pub schema_version: u32,
    pub software_version: &'a str,
    pub plan: &'a SweepPlan,
    pub boundary: &'a str,
    pub points: &'a [Aggregate],
    pub fits: Fits,
}

pub fn write_aggregate(dir: &Path, plan: &SweepPlan, aggregates: &[Aggregate]) -> Result<PathBuf, CliError> {
    let path = dir.join(AGGREGATE_FILE);
    let doc = AggregateFile {
        schema_version: SCHEMA_VERSION,
        software_version: SOFTWARE_VERSION,
        plan,
        boundary: plan.boundary().as_str(),
        points: aggregates,
        fits: sweep_fits(plan, aggregates),
    };
    let file = File::create(&path).map_err(CliError::io(&path))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &doc)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faf_core::ensemble::run_one;

    fn small_plan(experiment: Experiment) -> SweepPlan {
        SweepPlan {
            experiment,
            sites: vec![6],
            disorder: vec![4.0],
            realizations: 1,
            ..SweepPlan::default()
        }
    }

    #[test]
    fn rows_match_header_width() {
        for experiment in [Experiment::EigenFaf, Experiment::Decompose] {
            let plan = small_plan(experiment);
            let table = RecordTable::for_plan(&plan);
            let rec = run_one(&plan, plan.points()[0], 0);
            assert!(rec.is_ok(), "{:?}", rec.error);
            let rows = table.rows(&rec);
            assert!(!rows.is_empty());
            assert!(rows.iter().all(|r| r.len() == table.header().len()));
        }
    }

    #[test]
    fn failed_records_keep_their_key() {
        let plan = small_plan(Experiment::EigenFaf);
        let table = RecordTable::for_plan(&plan);
        let mut rec = run_one(&plan, plan.points()[0], 0);
        rec.error = Some("boom".into());
        let rows = table.rows(&rec);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].last().unwrap(), "boom");
        assert_eq!(rows[0][3], "6");
    }

    #[test]
    fn floats_use_shortest_round_trip() {
        let x = 0.1 + 0.2;
        assert_eq!(x.to_string().parse::<f64>().unwrap(), x);
        assert_eq!(4.0f64.to_string(), "4");
    }
}
