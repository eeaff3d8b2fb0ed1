//! End-to-end acceptance criteria. Each test prints one `PASS`/`FAIL` line
//! and then asserts it. Tolerances are fixed here and must not be loosened.
//!
//! `cargo test --release -p faf-core --test acceptance -- --nocapture
//! --test-threads 1` shows the lines in order.

use std::time::{Duration, Instant};

use faf_core::ensemble::{aggregate, fit_linear_quadratic, fit_loglog_slope, run_sweep, Aggregate, Axis, Experiment, RunRecord, SweepPlan};
use faf_core::faf::Covariance;
use faf_core::fit::loglog_fit;
use faf_core::hamiltonian::ModelKind;
use faf_core::resonance::{r_observable, CatAnsatz, Histogram};
use faf_core::selftest::{additivity_defect, gaussian_invariance_defect};

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn sweep(plan: &SweepPlan) -> (Vec<RunRecord>, Vec<Aggregate>) {
    let records = run_sweep(plan, workers(), |_| {}).expect("valid plan");
    let failed: Vec<_> = records.iter().filter_map(|r| r.error.as_deref()).collect();
    assert!(failed.is_empty(), "realizations failed: {failed:?}");
    let aggs = aggregate(plan, &records).expect("aggregates");
    (records, aggs)
}

fn report(criterion: u32, passed: bool, detail: String) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("acceptance {criterion:>2}: {status} {detail}");
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn mean_of(aggs: &[Aggregate], name: &str, pick: impl Fn(&Aggregate) -> bool) -> f64 {
    aggs.iter()
        .find(|a| pick(a))
        .and_then(|a| a.scalar(name))
        .unwrap_or_else(|| panic!("no {name} aggregate"))
        .mean
}

fn eigen_plan(model: ModelKind, sites: &[usize], disorder: &[f64], delta: f64, realizations: usize, seed: u64) -> SweepPlan {
    SweepPlan {
        experiment: Experiment::EigenFaf,
        model,
        sites: sites.to_vec(),
        disorder: disorder.to_vec(),
        delta: vec![delta],
        realizations,
        seed,
        ..SweepPlan::default()
    }
}

#[test]
fn criterion_01_faithfulness() {
    let start = Instant::now();
    let plan = eigen_plan(ModelKind::Xx, &[8, 10, 12], &[1.0, 10.0], 0.0, 50, 101);
    let (records, _) = sweep(&plan);
    let worst = records
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.faf[0]))
        .fold(0.0f64, |a, b| a.max(b.abs()));
    let states: usize = records.iter().map(|r| r.rows.len()).sum();
    let elapsed = start.elapsed();
    report(
        1,
        worst < 1e-8 && elapsed < Duration::from_secs(120),
        format!("max |F1| = {worst:.2e} over {states} XX eigenstates (< 1e-8), {elapsed:.1?} (< 2 min)"),
    );
}

#[test]
fn criterion_02_invariance_and_additivity() {
    let start = Instant::now();
    let invariance = (0..100u64)
        .map(|i| gaussian_invariance_defect(2 + (i % 5) as usize, 1000 + i).unwrap())
        .fold(0.0, f64::max);
    let additivity = (0..100u64)
        .map(|i| additivity_defect(1 + (i % 4) as usize, 1 + (i / 4 % 4) as usize, 2000 + i).unwrap())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    report(
        2,
        invariance < 1e-8 && additivity < 1e-8 && elapsed < Duration::from_secs(60),
        format!("invariance defect {invariance:.2e}, additivity defect {additivity:.2e} (< 1e-8, 100 trials each), {elapsed:.1?} (< 1 min)"),
    );
}

#[test]
fn criterion_03_cat_oracle() {
    let mut worst: f64 = 0.0;
    for n in [4usize, 6, 8] {
        for start in 0..=12 - n {
            let psi = CatAnsatz::on_neel(12, start, n).build().unwrap();
            let faf = Covariance::from_state(&psi).unwrap().faf_orders(3).unwrap();
            for v in faf {
                worst = worst.max((v.value - n as f64).abs());
            }
            worst = worst.max((r_observable(&psi) - n as f64).abs());
        }
    }
    let mut pair: f64 = 0.0;
    for start in 0..=10 {
        let psi = CatAnsatz::on_neel(12, start, 2).build().unwrap();
        for v in Covariance::from_state(&psi).unwrap().faf_orders(3).unwrap() {
            pair = pair.max(v.value.abs());
        }
    }
    report(
        3,
        worst < 1e-10 && pair < 1e-10,
        format!("max |F_k - n|, |R - n| = {worst:.2e} for n in {{4,6,8}}; max |F_k| = {pair:.2e} for n = 2 (< 1e-10)"),
    );
}

#[test]
fn criterion_04_disorder_scaling() {
    let start = Instant::now();
    let plan = eigen_plan(ModelKind::Xxz, &[12], &[10.0, 14.0, 20.0, 28.0], 1.0, 200, 104);
    let (_, aggs) = sweep(&plan);
    let fit = fit_loglog_slope(&aggs, Axis::Disorder, "f1", (0.0, f64::INFINITY)).unwrap();
    let elapsed = start.elapsed();
    let means: Vec<String> = aggs.iter().map(|a| format!("{:.4}", a.scalar("f1").unwrap().mean)).collect();
    report(
        4,
        (fit.slope + 2.0).abs() <= 0.3 && elapsed < Duration::from_secs(30 * 60),
        format!(
            "slope {:.3} +/- {:.3} (target -2 +/- 0.3), <f1> = [{}], {elapsed:.0?} on {} workers",
            fit.slope,
            fit.slope_stderr,
            means.join(", "),
            workers()
        ),
    );
}

#[test]
fn criterion_05_delta_linearity() {
    // Each Δ runs as its own single-point sweep with the same base seed, so
    // all Δ share one disorder ensemble.
    let deltas = [0.2, 0.4, 0.6, 0.8, 1.0];
    let f1: Vec<f64> = deltas
        .iter()
        .map(|&d| {
            let (_, aggs) = sweep(&eigen_plan(ModelKind::Xxz, &[12], &[10.0], d, 100, 105));
            aggs[0].scalar("f1").unwrap().mean
        })
        .collect();
    let fit = fit_linear_quadratic(&deltas, &f1).unwrap();
    let range = f1.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - f1.iter().cloned().fold(f64::INFINITY, f64::min);
    let rel = fit.max_residual / range;
    report(
        5,
        rel < 0.05 && fit.quadratic.abs() < fit.linear,
        format!(
            "a = {:.4e}, b = {:.4e} (|b| < a), max residual {:.1}% of range (< 5%), <f1> = {:?}",
            fit.linear,
            fit.quadratic,
            100.0 * rel,
            f1.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_06_area_vs_volume() {
    let sizes = [8usize, 10, 12];
    let (_, imp) = sweep(&eigen_plan(ModelKind::Impurity, &sizes, &[4.0], 1.0, 1000, 106));
    let imp_f1: Vec<f64> = sizes.iter().map(|&l| mean_of(&imp, "F1", |a| a.point.sites == l)).collect();
    let lo = imp_f1.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = imp_f1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let variation = hi / lo - 1.0;

    let (_, xxz) = sweep(&eigen_plan(ModelKind::Xxz, &[8, 12], &[10.0], 1.0, 400, 206));
    let ratio = mean_of(&xxz, "F1", |a| a.point.sites == 12) / mean_of(&xxz, "F1", |a| a.point.sites == 8);
    report(
        6,
        variation < 0.25 && (ratio - 1.5).abs() <= 0.35,
        format!(
            "impurity <F1>(L=8,10,12) = [{:.4}, {:.4}, {:.4}], max/min - 1 = {:.3} (< 0.25); XXZ F(12)/F(8) = {ratio:.3} (1.5 +/- 0.35)",
            imp_f1[0], imp_f1[1], imp_f1[2], variation
        ),
    );
}

#[test]
fn criterion_07_ergodic_typicality() {
    let (_, aggs) = sweep(&eigen_plan(ModelKind::Xxz, &[10, 12], &[1.0], 1.0, 100, 107));
    let f10 = mean_of(&aggs, "f1", |a| a.point.sites == 10);
    let f12 = mean_of(&aggs, "f1", |a| a.point.sites == 12);
    report(
        7,
        f12 > 0.8 && f12 > f10,
        format!("<f1>(L=10) = {f10:.4}, <f1>(L=12) = {f12:.4} (> 0.8 and increasing)"),
    );
}

fn dynamics_plan(model: ModelKind, delta: f64, realizations: usize, seed: u64) -> SweepPlan {
    SweepPlan {
        experiment: Experiment::Dynamics,
        model,
        sites: vec![12],
        disorder: vec![10.0],
        delta: vec![delta],
        realizations,
        seed,
        kmax: 1,
        ..SweepPlan::default()
    }
}

#[test]
fn criterion_08_dynamics_law() {
    let (records, aggs) = sweep(&dynamics_plan(ModelKind::Xxz, 1.0, 200, 108));
    let initial = records
        .iter()
        .flat_map(|r| r.rows.iter().filter(|row| row.time == Some(0.0)).map(|row| row.faf[0].abs()))
        .fold(0.0, f64::max);
    let series = aggs[0].series.as_ref().unwrap();
    let fit = series.fit.as_ref().unwrap();

    let (control, _) = sweep(&dynamics_plan(ModelKind::Xx, 0.0, 20, 208));
    let flat = control
        .iter()
        .flat_map(|r| r.rows.iter().map(|row| row.faf[0].abs()))
        .fold(0.0, f64::max);
    report(
        8,
        initial < 1e-10 && fit.converged && fit.exponent > 0.02 && fit.exponent < 0.5 && fit.loglog_r_squared > 0.9 && flat < 1e-8,
        format!(
            "F1(0) = {initial:.1e} (< 1e-10); beta = {:.4} in (0.02, 0.5), F_sat = {:.4}, log-log R^2 = {:.4} (> 0.9), converged = {}; Delta = 0 max |F1| = {flat:.1e} (< 1e-8)",
            fit.exponent, fit.saturation, fit.loglog_r_squared, fit.converged
        ),
    );
}

#[test]
fn criterion_09_lbit_phenomenology() {
    let plan = SweepPlan {
        experiment: Experiment::LbitDynamics,
        sites: vec![10, 12],
        disorder: vec![SweepPlan::default().lbit.disorder],
        realizations: 200,
        seed: 109,
        kmax: 1,
        ..SweepPlan::default()
    };
    let (_, aggs) = sweep(&plan);
    let window = plan.fit_window;
    let mut plateau = Vec::new();
    let mut details = Vec::new();
    let mut algebraic = true;
    for agg in &aggs {
        let series = agg.series.as_ref().unwrap();
        let fit = series.fit.as_ref().unwrap();
        let approach = series.approach.unwrap();
        let f1 = &series.values["F1"];
        let below: Vec<f64> = series
            .times
            .iter()
            .zip(f1)
            .filter(|(t, s)| **t >= window.0 && **t <= window.1 && s.mean < fit.saturation)
            .map(|(t, _)| *t)
            .collect();
        let decades = match (below.first(), below.last()) {
            (Some(a), Some(b)) => (b / a).log10(),
            _ => 0.0,
        };
        algebraic &= approach.r_squared > 0.9 && decades >= 1.5 && fit.converged;
        plateau.push(fit.saturation / agg.point.sites as f64);
        details.push(format!(
            "L={}: beta = {:.3}, f_sat = {:.4}, R^2 = {:.3} over {decades:.2} decades",
            agg.point.sites,
            fit.exponent,
            fit.saturation / agg.point.sites as f64,
            approach.r_squared
        ));
    }
    let ratio = plateau[1] / plateau[0];
    report(
        9,
        algebraic && (ratio - 1.0).abs() <= 0.25,
        format!("{}; plateau ratio L=12/L=10 = {ratio:.3} (1 +/- 0.25)", details.join("; ")),
    );
}

fn decompose_plan(model: ModelKind, disorder: &[f64], seed: u64) -> SweepPlan {
    SweepPlan {
        experiment: Experiment::Decompose,
        model,
        sites: vec![8],
        disorder: disorder.to_vec(),
        delta: vec![1.0],
        realizations: 100,
        seed,
        ..SweepPlan::default()
    }
}

#[test]
fn criterion_10_interaction_decomposition() {
    let ws = [8.0, 16.0, 32.0, 64.0];
    let (xxz_records, xxz) = sweep(&decompose_plan(ModelKind::Xxz, &ws, 110));
    let (imp_records, imp) = sweep(&decompose_plan(ModelKind::Impurity, &[16.0], 210));
    let pythagoras = xxz_records
        .iter()
        .chain(&imp_records)
        .filter_map(|r| r.decomposition.as_ref())
        .map(|d| d.pythagoras_defect())
        .fold(0.0, f64::max);

    let perp = |a: &Aggregate| *a.scalar("norm_perp").unwrap();
    let medians: Vec<f64> = xxz.iter().map(|a| perp(a).median).collect();
    let median_slope = loglog_fit(&ws, &medians).unwrap().slope;
    let mean_slope = fit_loglog_slope(&xxz, Axis::Disorder, "norm_perp", (0.0, f64::INFINITY)).unwrap().slope;
    let at16 = xxz.iter().find(|a| a.point.disorder == 16.0).map(perp).unwrap();
    let imp16 = perp(&imp[0]);
    let median_ratio = at16.median / imp16.median;
    let mean_ratio = at16.mean / imp16.mean;
    // Median over realizations; the mean is reported alongside.
    report(
        10,
        (median_slope + 1.0).abs() <= 0.2 && pythagoras < 1e-8 && (median_ratio / 8.0 - 1.0).abs() <= 0.5,
        format!(
            "median slope {median_slope:.3} (mean {mean_slope:.3}), target -1 +/- 0.2; Pythagoras defect {pythagoras:.1e} (< 1e-8); XXZ/impurity at W=16 median {median_ratio:.2} (mean {mean_ratio:.2}), target 8 +/- 50%"
        ),
    );
}

fn peak_centres(h: &Histogram, bins: &[usize]) -> Vec<f64> {
    bins.iter().map(|&k| h.center(k)).collect()
}

#[test]
fn criterion_11_resonance_statistics() {
    let base = SweepPlan {
        experiment: Experiment::ResonanceScan,
        model: ModelKind::Xxz,
        sites: vec![12],
        delta: vec![1.0],
        realizations: 300,
        histogram_width: 0.5,
        filter_eps: 1e-3,
        ..SweepPlan::default()
    };
    let (_, w8) = sweep(&SweepPlan {
        disorder: vec![8.0],
        seed: 111,
        ..base.clone()
    });
    let f1 = &w8[0].histograms["F1"];
    let maxima = peak_centres(f1, &f1.local_maxima());
    let secondary = maxima.iter().any(|c| (3.5..=4.5).contains(c));

    // The ε = 1e-3 window is narrow, so the filtered scan keeps every
    // eigenstate of the half-filling sector.
    let (_, w16) = sweep(&SweepPlan {
        disorder: vec![16.0],
        seed: 211,
        eigenstates: Some(924),
        ..base
    });
    let filtered = &w16[0].histograms["R_filtered"];
    let mode = filtered.mode().map(|k| filtered.center(k));
    let mode_ok = mode.is_some_and(|m| (3.5..=4.5).contains(&m));
    report(
        11,
        secondary && mode_ok,
        format!(
            "W=8 P(F1) local maxima at {maxima:?} (one in [3.5, 4.5]); W=16 filtered P(R) mode {mode:?} from {} states (in [3.5, 4.5])",
            filtered.total
        ),
    );
}
