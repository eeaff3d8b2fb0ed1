//! Disorder-ensemble sweeps: per-realization records computed in parallel
//! from counter-derived seeds, and their aggregation per sweep point.

use std::collections::BTreeMap;
use std::sync::{mpsc, Arc};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{SectorBasis, SpinState};
use crate::dynamics::{simulate, TimeGrid, DEFAULT_FIT_WINDOW};
use crate::eigensolve::{default_mid_count, full_diagonalize, select_central};
use crate::faf::Covariance;
use crate::fit::{fit_power_law, loglog_fit, LineFit, PowerLawFit};
use crate::hamiltonian::{build_many_body, Boundary, DisorderRealization, ModelKind, ModelSpec};
use crate::interaction_decomp::{decompose_realization, DecompositionResult};
use crate::lbit::{LBitModel, LBitSpec};
use crate::resonance::{detect_cat_pairs_in, filtered_r_distribution, Histogram, StateSummary};
use crate::rng::realization_seed;
use crate::{Error, Result, SOFTWARE_VERSION};

/// Points with fewer realizations than this are flagged in aggregates.
pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EigenFaf,
    Dynamics,
    LbitDynamics,
    ResonanceScan,
    Decompose,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::EigenFaf => "eigen-faf",
            Experiment::Dynamics => "dynamics",
            Experiment::LbitDynamics => "lbit-dynamics",
            Experiment::ResonanceScan => "resonance-scan",
            Experiment::Decompose => "decompose",
        }
    }

    /// Periodic chains for eigenstate studies, open chains for quenches and
    /// the full-space decomposition.
    pub fn default_boundary(self) -> Boundary {
        match self {
            Experiment::EigenFaf | Experiment::ResonanceScan => Boundary::Periodic,
            Experiment::Dynamics | Experiment::LbitDynamics | Experiment::Decompose => Boundary::Open,
        }
    }
}

/// Serializable description of a logarithmic [`TimeGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub include_zero: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        let (t_min, t_max, per_decade) = crate::dynamics::DEFAULT_GRID;
        Self {
            t_min,
            t_max,
            per_decade,
            include_zero: true,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<TimeGrid> {
        TimeGrid::logarithmic(self.t_min, self.t_max, self.per_decade, self.include_zero)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepPlan {
    pub experiment: Experiment,
    pub model: ModelKind,
    /// `None` uses [`Experiment::default_boundary`].
    pub boundary: Option<Boundary>,
    pub sites: Vec<usize>,
    pub disorder: Vec<f64>,
    pub delta: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    /// Highest FAF order recorded.
    pub kmax: u32,
    /// Mid-spectrum eigenstates per realization; `None` uses
    /// `min(100, dim/20)`.
    pub eigenstates: Option<usize>,
    pub grid: GridSpec,
    pub fit_window: (f64, f64),
    /// l-bit parameters; `sites` and `disorder` come from the sweep axes.
    pub lbit: LBitSpec,
    pub czz_threshold: f64,
    pub histogram_width: f64,
    /// Half-width of the `F₁ ≈ 4` window for the filtered `R` histogram.
    pub filter_eps: f64,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            experiment: Experiment::EigenFaf,
            model: ModelKind::Xxz,
            boundary: None,
            sites: vec![10],
            disorder: vec![10.0],
            delta: vec![1.0],
            realizations: 100,
            seed: 0,
            kmax: 3,
            eigenstates: None,
            grid: GridSpec::default(),
            fit_window: DEFAULT_FIT_WINDOW,
            lbit: LBitSpec::default(),
            czz_threshold: 0.5,
            histogram_width: 0.5,
            filter_eps: 1e-3,
        }
    }
}

/// One `(L, W, Δ)` combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    pub sites: usize,
    pub disorder: f64,
    pub delta: f64,
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidArgument("realizations per point must be at least 1".into()));
        }
        if self.sites.is_empty() || self.disorder.is_empty() || self.delta.is_empty() {
            return Err(Error::InvalidArgument("every sweep axis needs at least one value".into()));
        }
        if self.kmax == 0 {
            return Err(Error::InvalidArgument("kmax must be at least 1".into()));
        }
        match self.experiment {
            Experiment::LbitDynamics => {
                for &sites in &self.sites {
                    self.lbit_spec(&SweepPoint {
                        index: 0,
                        sites,
                        disorder: self.disorder[0],
                        delta: 0.0,
                    })
                    .validate()?;
                }
                for &w in &self.disorder {
                    if !(w >= 0.0 && w.is_finite()) {
                        return Err(Error::InvalidArgument(format!("invalid disorder {w}")));
                    }
                }
            }
            _ => {
                if self.model == ModelKind::Lbit {
                    return Err(Error::InvalidArgument(format!(
                        "model lbit needs the lbit experiment, not {}",
                        self.experiment.as_str()
                    )));
                }
                for p in self.points() {
                    self.model_spec(&p).validate()?;
                    SectorBasis::half_filling(p.sites)?;
                }
            }
        }
        if matches!(self.experiment, Experiment::Dynamics | Experiment::LbitDynamics) {
            self.grid.build()?;
        }
        if self.experiment == Experiment::Decompose && self.boundary() != Boundary::Open {
            return Err(Error::InvalidArgument("decompose runs on open chains only".into()));
        }
        Ok(())
    }

    /// Sweep points with `L` outermost and `Δ` innermost.
    pub fn points(&self) -> Vec<SweepPoint> {
        let mut out = Vec::new();
        for &sites in &self.sites {
            for &disorder in &self.disorder {
                for &delta in &self.delta {
                    out.push(SweepPoint {
                        index: out.len(),
                        sites,
                        disorder,
                        delta,
                    });
                }
            }
        }
        out
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary.unwrap_or(self.experiment.default_boundary())
    }

    pub fn model_spec(&self, p: &SweepPoint) -> ModelSpec {
        ModelSpec::new(self.model, p.sites, p.delta, p.disorder, self.boundary())
    }

    pub fn lbit_spec(&self, p: &SweepPoint) -> LBitSpec {
        LBitSpec {
            sites: p.sites,
            disorder: p.disorder,
            ..self.lbit.clone()
        }
    }

    pub fn total_runs(&self) -> usize {
        self.points().len() * self.realizations
    }
}

/// One CSV row: an eigenstate or a time sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub eigenindex: Option<usize>,
    pub time: Option<f64>,
    pub energy: f64,
    pub faf: Vec<f64>,
    pub czz_max: Option<f64>,
    pub czz_site: Option<usize>,
    pub r: Option<f64>,
    pub flags: Vec<String>,
}

/// Everything computed for one realization at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: Experiment,
    pub model: ModelKind,
    pub boundary: Boundary,
    pub point: SweepPoint,
    pub realization: usize,
    pub seed: u64,
    pub software_version: String,
    pub rows: Vec<RecordRow>,
    pub cat_pairs: usize,
    pub decomposition: Option<DecompositionResult>,
    pub error: Option<String>,
}

impl RunRecord {
    fn shell(plan: &SweepPlan, point: SweepPoint, realization: usize) -> Self {
        Self {
            experiment: plan.experiment,
            model: if plan.experiment == Experiment::LbitDynamics {
                ModelKind::Lbit
            } else {
                plan.model
            },
            boundary: plan.boundary(),
            point,
            realization,
            seed: realization_seed(plan.seed, point.index as u64, realization as u64),
            software_version: SOFTWARE_VERSION.to_string(),
            rows: Vec::new(),
            cat_pairs: 0,
            decomposition: None,
            error: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

fn state_row(psi: &SpinState, index: usize, energy: f64, kmax: u32, degenerate: bool) -> Result<(RecordRow, StateSummary)> {
    let cov = Covariance::from_state(psi)?;
    let faf: Vec<f64> = cov.faf_orders(kmax)?.iter().map(|v| v.value).collect();
    let mut summary = StateSummary::of(psi, energy)?;
    summary.f1 = faf[0];
    let row = RecordRow {
        eigenindex: Some(index),
        time: None,
        energy,
        faf,
        czz_max: Some(summary.czz_max),
        czz_site: Some(summary.czz_site),
        r: Some(summary.r),
        flags: if degenerate { vec!["degenerate".into()] } else { Vec::new() },
    };
    Ok((row, summary))
}

fn time_row(t: f64, energy: f64, cov: &Covariance, kmax: u32) -> Result<RecordRow> {
    let r = cov.onsite_z().iter().map(|z| 1.0 - z.abs().min(1.0)).sum();
    Ok(RecordRow {
        eigenindex: None,
        time: Some(t),
        energy,
        faf: cov.faf_orders(kmax)?.iter().map(|v| v.value).collect(),
        czz_max: None,
        czz_site: None,
        r: Some(r),
        flags: Vec::new(),
    })
}

fn fill_record(plan: &SweepPlan, rec: &mut RunRecord) -> Result<()> {
    let p = rec.point;
    match plan.experiment {
        Experiment::EigenFaf | Experiment::ResonanceScan => {
            let spec = plan.model_spec(&p);
            let h = DisorderRealization::sample(p.disorder, rec.seed, p.sites)?;
            let basis = Arc::new(SectorBasis::half_filling(p.sites)?);
            let op = build_many_body(&spec, &h, basis.clone())?;
            let full = full_diagonalize(&op)?;
            let n_e = plan.eigenstates.unwrap_or_else(|| default_mid_count(basis.dim()));
            let keep = select_central(full.eigenvalues(), full.center(), n_e.min(basis.dim()));
            let eig = full.subset(&keep);
            let mut states = Vec::with_capacity(eig.len());
            for i in 0..eig.len() {
                let psi = eig.state(i)?;
                let (row, _) = state_row(&psi, eig.position(i), eig.eigenvalues()[i], plan.kmax, eig.is_degenerate(i))?;
                rec.rows.push(row);
                states.push(psi);
            }
            if plan.experiment == Experiment::ResonanceScan {
                let cats = detect_cat_pairs_in(eig.eigenvalues(), &states, plan.czz_threshold, None)?;
                rec.cat_pairs = cats
                    .iter()
                    .filter(|c| eig.position(c.indices.1) == eig.position(c.indices.0) + 1)
                    .count();
            }
        }
        Experiment::Dynamics => {
            let spec = plan.model_spec(&p);
            let h = DisorderRealization::sample(p.disorder, rec.seed, p.sites)?;
            let basis = Arc::new(SectorBasis::half_filling(p.sites)?);
            let op = build_many_body(&spec, &h, basis.clone())?;
            let traj = simulate(&op, &SpinState::neel(basis)?, plan.grid.build()?)?;
            for ((t, cov), e) in traj.grid.times().iter().zip(&traj.covariances).zip(&traj.energies) {
                rec.rows.push(time_row(*t, *e, cov, plan.kmax)?);
            }
        }
        Experiment::LbitDynamics => {
            let spec = plan.lbit_spec(&p);
            let h = spec.fields(rec.seed)?;
            let basis = Arc::new(SectorBasis::half_filling(p.sites)?);
            let model = LBitModel::new(&spec, &h, basis.clone())?;
            let traj = model.trajectory(&SpinState::neel(basis)?, plan.grid.build()?)?;
            for ((t, cov), e) in traj.grid.times().iter().zip(&traj.covariances).zip(&traj.energies) {
                rec.rows.push(time_row(*t, *e, cov, plan.kmax)?);
            }
        }
        Experiment::Decompose => {
            let spec = plan.model_spec(&p);
            let h = DisorderRealization::sample(p.disorder, rec.seed, p.sites)?;
            rec.decomposition = Some(decompose_realization(&spec, &h)?);
        }
    }
    Ok(())
}

/// Computes one realization; failures are stored in the record.
pub fn run_one(plan: &SweepPlan, point: SweepPoint, realization: usize) -> RunRecord {
    let mut rec = RunRecord::shell(plan, point, realization);
    if let Err(e) = fill_record(plan, &mut rec) {
        rec.rows.clear();
        rec.error = Some(e.to_string());
    }
    rec
}

/// Runs every `(point, realization)` of `plan` on `workers` threads.
///
/// `on_record` sees each record as soon as it completes, in completion order;
/// the returned records are sorted by `(point, realization)` and do not
/// depend on the worker count.
pub fn run_sweep<F>(plan: &SweepPlan, workers: usize, mut on_record: F) -> Result<Vec<RunRecord>>
where
    F: FnMut(&RunRecord),
{
    plan.validate()?;
    // Inner linear algebra stays sequential so results are bit-identical for
    // every pool size.
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let tasks: Vec<(SweepPoint, usize)> = plan
        .points()
        .into_iter()
        .flat_map(|p| (0..plan.realizations).map(move |r| (p, r)))
        .collect();
    let (tx, rx) = mpsc::channel();
    let mut records = Vec::with_capacity(tasks.len());
    std::thread::scope(|scope| {
        scope.spawn(|| {
            pool.install(|| {
                tasks
                    .par_iter()
                    .for_each_with(tx, |tx, &(p, r)| {
                        let _ = tx.send(run_one(plan, p, r));
                    })
            })
        });
        for rec in rx {
            on_record(&rec);
            records.push(rec);
        }
    });
    records.sort_by_key(|r| (r.point.index, r.realization));
    Ok(records)
}

/// Mean, standard error, median and count of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
    pub count: usize,
}

impl Stat {
    /// `stderr` is the sample standard deviation over `√n`, and 0 for a
    /// single sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        Some(Self {
            mean,
            stderr,
            median,
            count: values.len(),
        })
    }
}

/// Ensemble-averaged time series with its power-law fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesAggregate {
    pub times: Vec<f64>,
    /// Per observable, one [`Stat`] per time.
    pub values: BTreeMap<String, Vec<Stat>>,
    /// Fit of the mean `F₁(t)`.
    pub fit: Option<PowerLawFit>,
    /// Straight line through `log(F₁^sat − ⟨F₁⟩)` vs `log t` in the window.
    pub approach: Option<LineFit>,
    pub fit_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub point: SweepPoint,
    /// Successful realizations.
    pub samples: usize,
    pub failures: usize,
    pub low_sample: bool,
    /// Realization-level statistics: eigenstate observables are first averaged
    /// within each realization.
    pub scalars: BTreeMap<String, Stat>,
    pub series: Option<SeriesAggregate>,
    pub histograms: BTreeMap<String, Histogram>,
}

impl Aggregate {
    pub fn scalar(&self, name: &str) -> Option<&Stat> {
        self.scalars.get(name)
    }
}

fn push(map: &mut BTreeMap<String, Vec<f64>>, key: impl Into<String>, v: f64) {
    map.entry(key.into()).or_default().push(v);
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn aggregate_point(plan: &SweepPlan, point: SweepPoint, records: &[&RunRecord]) -> Result<Aggregate> {
    let ok: Vec<&RunRecord> = records.iter().copied().filter(|r| r.is_ok()).collect();
    let sites = point.sites as f64;
    let mut per_realization: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut histograms = BTreeMap::new();
    let mut series = None;
    match plan.experiment {
        Experiment::EigenFaf | Experiment::ResonanceScan => {
            for rec in &ok {
                for k in 0..plan.kmax as usize {
                    if let Some(m) = mean(rec.rows.iter().map(|r| r.faf[k])) {
                        push(&mut per_realization, format!("F{}", k + 1), m);
                    }
                }
                if let Some(m) = mean(rec.rows.iter().map(|r| r.faf[0] / sites)) {
                    push(&mut per_realization, "f1", m);
                }
                if let Some(m) = mean(rec.rows.iter().filter_map(|r| r.czz_max)) {
                    push(&mut per_realization, "czz_max", m);
                }
                if let Some(m) = mean(rec.rows.iter().filter_map(|r| r.r)) {
                    push(&mut per_realization, "R", m);
                }
                push(&mut per_realization, "cat_pairs", rec.cat_pairs as f64);
            }
            if plan.experiment == Experiment::ResonanceScan {
                // Bins centred on multiples of the width so integer-valued
                // cat peaks do not straddle an edge.
                let w = plan.histogram_width;
                let (lo, hi) = (-w / 2.0, sites + w / 2.0);
                let rows = || ok.iter().flat_map(|r| r.rows.iter());
                let f1 = Histogram::from_values(rows().map(|r| r.faf[0]), lo, hi, w)?;
                let r_hist = Histogram::from_values(rows().filter_map(|r| r.r), lo, hi, w)?;
                let summaries: Vec<StateSummary> = rows()
                    .map(|r| StateSummary {
                        energy: r.energy,
                        f1: r.faf[0],
                        r: r.r.unwrap_or(f64::NAN),
                        czz_max: r.czz_max.unwrap_or(f64::NAN),
                        czz_site: r.czz_site.unwrap_or(0),
                    })
                    .collect();
                let filtered = filtered_r_distribution(&summaries, 4.0, plan.filter_eps, &r_hist)?;
                histograms.insert("F1".to_string(), f1);
                histograms.insert("R".to_string(), r_hist);
                histograms.insert("R_filtered".to_string(), filtered);
            }
        }
        Experiment::Dynamics | Experiment::LbitDynamics => {
            if let Some(first) = ok.first() {
                let times: Vec<f64> = first.rows.iter().filter_map(|r| r.time).collect();
                let column = |f: &dyn Fn(&RecordRow) -> f64| -> Vec<Stat> {
                    (0..times.len())
                        .map(|i| {
                            let v: Vec<f64> = ok.iter().map(|rec| f(&rec.rows[i])).collect();
                            Stat::of(&v).expect("nonempty")
                        })
                        .collect()
                };
                let mut values = BTreeMap::new();
                for k in 0..plan.kmax as usize {
                    values.insert(format!("F{}", k + 1), column(&|r| r.faf[k]));
                }
                values.insert("f1".to_string(), column(&|r| r.faf[0] / sites));
                values.insert("R".to_string(), column(&|r| r.r.unwrap_or(f64::NAN)));
                let mean_f1: Vec<f64> = values["F1"].iter().map(|s: &Stat| s.mean).collect();
                let (fit, approach, fit_error) = match fit_power_law(&times, &mean_f1, plan.fit_window, false) {
                    Ok(fit) => {
                        let approach = approach_line(&times, &mean_f1, fit.saturation, plan.fit_window).ok();
                        (Some(fit), approach, None)
                    }
                    Err(e) => (None, None, Some(e.to_string())),
                };
                series = Some(SeriesAggregate {
                    times,
                    values,
                    fit,
                    approach,
                    fit_error,
                });
            }
        }
        Experiment::Decompose => {
            for rec in &ok {
                if let Some(d) = &rec.decomposition {
                    push(&mut per_realization, "norm_perp", d.norm_perp);
                    push(&mut per_realization, "norm_parallel", d.norm_parallel);
                    push(&mut per_realization, "norm_total", d.norm_total);
                    push(&mut per_realization, "norm_mode_span", d.norm_mode_span);
                    push(&mut per_realization, "pythagoras_defect", d.pythagoras_defect());
                }
            }
        }
    }
    Ok(Aggregate {
        point,
        samples: ok.len(),
        failures: records.len() - ok.len(),
        low_sample: ok.len() < MIN_SAMPLES,
        scalars: per_realization
            .into_iter()
            .filter_map(|(k, v)| Stat::of(&v).map(|s| (k, s)))
            .collect(),
        series,
        histograms,
    })
}

/// Log-log line through `saturation − y` over the window points below the
/// saturation value.
pub fn approach_line(times: &[f64], values: &[f64], saturation: f64, window: (f64, f64)) -> Result<LineFit> {
    let (t, d): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, y)| **t >= window.0 && **t <= window.1 && **y < saturation)
        .map(|(t, y)| (*t, saturation - y))
        .unzip();
    loglog_fit(&t, &d)
}

/// Per-point aggregates in point order.
pub fn aggregate(plan: &SweepPlan, records: &[RunRecord]) -> Result<Vec<Aggregate>> {
    plan.points()
        .into_iter()
        .map(|p| {
            let mine: Vec<&RunRecord> = records.iter().filter(|r| r.point.index == p.index).collect();
            aggregate_point(plan, p, &mine)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Sites,
    Disorder,
    Delta,
}

impl Axis {
    pub fn of(self, p: &SweepPoint) -> f64 {
        match self {
            Axis::Sites => p.sites as f64,
            Axis::Disorder => p.disorder,
            Axis::Delta => p.delta,
        }
    }
}

/// Log-log slope of the mean of `observable` against `axis` over points with
/// the axis value inside `window`.
pub fn fit_loglog_slope(aggregates: &[Aggregate], axis: Axis, observable: &str, window: (f64, f64)) -> Result<LineFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = aggregates
        .iter()
        .filter(|a| {
            let x = axis.of(&a.point);
            x >= window.0 && x <= window.1
        })
        .filter_map(|a| a.scalar(observable).map(|s| (axis.of(&a.point), s.mean)))
        .unzip();
    loglog_fit(&x, &y)
}

/// Least-squares `y = aΔ + bΔ²` through the origin over the sweep points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub linear: f64,
    pub quadratic: f64,
    /// Largest absolute residual.
    pub max_residual: f64,
}

pub fn fit_linear_quadratic(x: &[f64], y: &[f64]) -> Result<QuadraticFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("quadratic fit needs at least two paired points".into()));
    }
    // Dividing by x turns the model into a line y/x = a + b x.
    if x.iter().any(|&v| v == 0.0) {
        return Err(Error::InvalidArgument("quadratic fit through the origin needs x ≠ 0".into()));
    }
    let (s11, s12, s22, r1, r2) = x.iter().zip(y).fold((0.0, 0.0, 0.0, 0.0, 0.0), |acc, (&xi, &yi)| {
        (
            acc.0 + xi * xi,
            acc.1 + xi.powi(3),
            acc.2 + xi.powi(4),
            acc.3 + xi * yi,
            acc.4 + xi * xi * yi,
        )
    });
    let det = s11 * s22 - s12 * s12;
    if det.abs() < 1e-300 {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let a = (r1 * s22 - r2 * s12) / det;
    let b = (s11 * r2 - s12 * r1) / det;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - a * xi - b * xi * xi).abs())
        .fold(0.0, f64::max);
    Ok(QuadraticFit {
        linear: a,
        quadratic: b,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_plan(experiment: Experiment) -> SweepPlan {
        SweepPlan {
            experiment,
            sites: vec![8],
            disorder: vec![4.0],
            realizations: 3,
            seed: 11,
            grid: GridSpec {
                t_min: 0.1,
                t_max: 100.0,
                per_decade: 4,
                include_zero: true,
            },
            fit_window: (1.0, 100.0),
            ..SweepPlan::default()
        }
    }

    #[test]
    fn single_run_gives_one_record() {
        let plan = SweepPlan {
            realizations: 1,
            ..small_plan(Experiment::EigenFaf)
        };
        let recs = run_sweep(&plan, 1, |_| {}).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].rows.len(), default_mid_count(70));
        assert!(recs[0].is_ok());
    }

    #[test]
    fn records_do_not_depend_on_workers() {
        let plan = SweepPlan {
            disorder: vec![2.0, 6.0],
            ..small_plan(Experiment::EigenFaf)
        };
        let mut streamed = 0;
        let a = run_sweep(&plan, 1, |_| streamed += 1).unwrap();
        let b = run_sweep(&plan, 4, |_| {}).unwrap();
        let c = run_sweep(&plan, 4, |_| {}).unwrap();
        assert_eq!(streamed, 6);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(serde_json::to_string(&b).unwrap(), serde_json::to_string(&c).unwrap());
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let plan = SweepPlan {
            experiment: Experiment::Decompose,
            boundary: Some(Boundary::Open),
            sites: vec![12],
            realizations: 1,
            ..SweepPlan::default()
        };
        let recs = run_sweep(&plan, 1, |_| {}).unwrap();
        assert!(recs[0].error.as_deref().unwrap().contains("decomposition sites"));
        let agg = aggregate(&plan, &recs).unwrap();
        assert_eq!(agg[0].failures, 1);
        assert!(agg[0].low_sample);
    }

    #[test]
    fn stat_oracles() {
        let s = Stat::of(&[0.0, 12.0]).unwrap();
        assert_eq!(s.mean, 6.0);
        assert_eq!(s.median, 6.0);
        assert!((s.stderr - 6.0).abs() < 1e-12);
        let same = Stat::of(&[2.5; 7]).unwrap();
        assert_eq!(same.stderr, 0.0);
        let v = [1.0, 4.0, 2.0, 8.0, 5.0];
        let st = Stat::of(&v).unwrap();
        let m = v.iter().sum::<f64>() / 5.0;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!((st.stderr - sd / 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(st.median, 4.0);
    }

    #[test]
    fn slope_fits() {
        let points: Vec<Aggregate> = [2.0, 4.0, 8.0, 16.0]
            .iter()
            .enumerate()
            .map(|(i, &w)| Aggregate {
                point: SweepPoint {
                    index: i,
                    sites: 8,
                    disorder: w,
                    delta: 1.0,
                },
                samples: 10,
                failures: 0,
                low_sample: false,
                scalars: [("f1".to_string(), Stat::of(&[w.powi(-2)]).unwrap())].into(),
                series: None,
                histograms: BTreeMap::new(),
            })
            .collect();
        let fit = fit_loglog_slope(&points, Axis::Disorder, "f1", (0.0, f64::INFINITY)).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&points, Axis::Disorder, "f1", (3.0, 5.0)).is_err());
        let q = fit_linear_quadratic(&[0.2, 0.4, 0.6, 0.8, 1.0], &[0.06, 0.14, 0.24, 0.36, 0.5]).unwrap();
        assert!((q.linear - 0.25).abs() < 1e-12 && (q.quadratic - 0.25).abs() < 1e-12);
        assert!(q.max_residual < 1e-12);
    }

    #[test]
    fn every_experiment_aggregates() {
        for experiment in [
            Experiment::EigenFaf,
            Experiment::ResonanceScan,
            Experiment::Dynamics,
            Experiment::LbitDynamics,
            Experiment::Decompose,
        ] {
            let mut plan = small_plan(experiment);
            if experiment == Experiment::Decompose {
                plan.boundary = Some(Boundary::Open);
                plan.sites = vec![6];
            }
            let recs = run_sweep(&plan, 2, |_| {}).unwrap();
            assert!(recs.iter().all(RunRecord::is_ok), "{experiment:?}");
            let agg = aggregate(&plan, &recs).unwrap();
            assert_eq!(agg.len(), 1);
            assert_eq!(agg[0].samples, 3);
            assert!(agg[0].low_sample);
            match experiment {
                Experiment::Dynamics | Experiment::LbitDynamics => {
                    let s = agg[0].series.as_ref().unwrap();
                    assert!(s.values["F1"][0].mean.abs() < 1e-10);
                    assert_eq!(s.times.len(), recs[0].rows.len());
                }
                Experiment::ResonanceScan => {
                    let h = &agg[0].histograms["F1"];
                    assert_eq!(h.total + h.outliers, 3 * default_mid_count(70) as u64);
                }
                Experiment::Decompose => {
                    assert!(agg[0].scalar("pythagoras_defect").unwrap().mean < 1e-8);
                }
                Experiment::EigenFaf => {
                    let f1 = agg[0].scalar("F1").unwrap();
                    let density = agg[0].scalar("f1").unwrap();
                    assert!((f1.mean / 8.0 - density.mean).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn plan_validation() {
        assert!(SweepPlan {
            realizations: 0,
            ..SweepPlan::default()
        }
        .validate()
        .is_err());
        assert!(SweepPlan {
            model: ModelKind::Lbit,
            ..SweepPlan::default()
        }
        .validate()
        .is_err());
        assert!(SweepPlan {
            sites: vec![7],
            ..SweepPlan::default()
        }
        .validate()
        .is_err());
        assert!(SweepPlan {
            experiment: Experiment::Decompose,
            boundary: Some(Boundary::Periodic),
            ..SweepPlan::default()
        }
        .validate()
        .is_err());
        let decompose = SweepPlan {
            experiment: Experiment::Decompose,
            sites: vec![6],
            ..SweepPlan::default()
        };
        assert_eq!(decompose.boundary(), Boundary::Open);
        assert!(decompose.validate().is_ok());
        assert_eq!(
            SweepPlan {
                sites: vec![8, 10],
                disorder: vec![1.0, 2.0, 3.0],
                ..SweepPlan::default()
            }
            .points()
            .len(),
            6
        );
    }
}
