//! Least-squares fits: straight lines in log-log coordinates and saturating
//! power laws `y = y_sat − C t^{−β} (+ C₂ t^{−2β})`.

use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exponent search range of the power-law fit.
pub const EXPONENT_RANGE: (f64, f64) = (1e-3, 2.0);
/// Minimum number of samples inside a power-law fit window.
pub const MIN_FIT_POINTS: usize = 8;

const GRID_POINTS: usize = 240;
const GOLDEN_ITERATIONS: usize = 80;

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits `y = a x + b`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} x values, {} y values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InvalidArgument("a line needs at least 2 points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("x values are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let slope_stderr = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        r_squared,
        points: n,
    })
}

/// Fits `log y = a log x + b`; all values must be positive.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() < 3 {
        return Err(Error::InvalidArgument(
            "a log-log slope needs at least 3 points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "log-log fits need positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly)
}

/// Fitted `y_sat − C t^{−β} (+ C₂ t^{−2β})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub saturation: f64,
    pub amplitude: f64,
    pub exponent: f64,
    pub second_amplitude: Option<f64>,
    /// Root-mean-square residual on the window.
    pub rms: f64,
    /// Coefficient of determination of the model on the window.
    pub r_squared: f64,
    /// `R²` of a straight line through `log(y_sat − y)` vs `log t` over the
    /// window points with `y < y_sat`.
    pub loglog_r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
    pub converged: bool,
    pub note: Option<String>,
}

impl PowerLawFit {
    pub fn evaluate(&self, t: f64) -> f64 {
        let p = t.powf(-self.exponent);
        self.saturation - self.amplitude * p + self.second_amplitude.unwrap_or(0.0) * p * p
    }
}

/// Linear coefficients and residual sum of squares for a fixed exponent.
fn solve_linear(t: &[f64], y: &[f64], beta: f64, second: bool) -> (Vec<f64>, f64) {
    let cols = if second { 3 } else { 2 };
    let n = t.len();
    let design = Mat::<f64>::from_fn(n, cols, |i, j| match j {
        0 => 1.0,
        1 => -t[i].powf(-beta),
        _ => t[i].powf(-2.0 * beta),
    });
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| y[i]);
    let coef = design.qr().solve_lstsq(&rhs);
    let coef: Vec<f64> = (0..cols).map(|j| coef[(j, 0)]).collect();
    let sse = (0..n)
        .map(|i| {
            let fit: f64 = (0..cols).map(|j| design[(i, j)] * coef[j]).sum();
            (y[i] - fit).powi(2)
        })
        .sum();
    (coef, sse)
}

/// Least-squares power-law fit over `window = [t_lo, t_hi]`.
///
/// For fixed `β` the model is linear in the remaining coefficients, so `β`
/// alone is optimized: a logarithmic scan over [`EXPONENT_RANGE`] followed by
/// golden-section refinement. The result is deterministic. Fits whose
/// exponent sits on the range boundary, whose amplitude vanishes, or whose
/// data are constant are returned with `converged = false`.
pub fn fit_power_law(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    second_order: bool,
) -> Result<PowerLawFit> {
    if times.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} times, {} values",
            times.len(),
            values.len()
        )));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1 && **t > 0.0)
        .map(|(a, b)| (*a, *b))
        .unzip();
    if t.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidArgument(format!(
            "fit window holds {} points, need at least {MIN_FIT_POINTS}",
            t.len()
        )));
    }
    let n = t.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let spread = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - y.iter().fold(f64::INFINITY, |a, &b| a.min(b));

    let (lo, hi) = (EXPONENT_RANGE.0.ln(), EXPONENT_RANGE.1.ln());
    let objective = |lb: f64| solve_linear(&t, &y, lb.exp(), second_order).1;
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let scan: Vec<f64> = (0..GRID_POINTS).map(|i| objective(lo + i as f64 * step)).collect();
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty scan");

    let (mut a, mut b) = (
        lo + best.saturating_sub(1) as f64 * step,
        lo + (best + 1).min(GRID_POINTS - 1) as f64 * step,
    );
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = objective(d);
        }
    }
    let mut lb = 0.5 * (a + b);
    if scan[best] < objective(lb) {
        lb = lo + best as f64 * step;
    }
    let beta = lb.exp();
    let (coef, sse) = solve_linear(&t, &y, beta, second_order);

    let (dt, dy): (Vec<f64>, Vec<f64>) = t
        .iter()
        .zip(&y)
        .filter(|(_, v)| coef[0] - **v > 0.0)
        .map(|(ti, v)| (*ti, coef[0] - v))
        .unzip();
    let loglog_r_squared = loglog_fit(&dt, &dy).map(|l| l.r_squared).unwrap_or(f64::NAN);

    let mut note = None;
    let scale = 1.0 + coef[0].abs();
    if spread <= 1e-12 * scale {
        note = Some("constant series: exponent unidentifiable".to_string());
    } else if coef[1].abs() <= 1e-9 * scale {
        note = Some("vanishing amplitude".to_string());
    } else if best == 0 || best == GRID_POINTS - 1 {
        note = Some("exponent at search boundary".to_string());
    }
    Ok(PowerLawFit {
        saturation: coef[0],
        amplitude: coef[1],
        exponent: beta,
        second_amplitude: second_order.then(|| coef[2]),
        rms: (sse / n).sqrt(),
        r_squared: if sst > 0.0 { 1.0 - sse / sst } else { 1.0 },
        loglog_r_squared,
        window,
        points: t.len(),
        converged: note.is_none(),
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log_times(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
        let decades = (hi / lo).log10();
        let n = (decades * per_decade as f64).round() as usize;
        (0..=n)
            .map(|i| lo * 10f64.powf(i as f64 / per_decade as f64))
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let x = [1.0, 2.0, 4.0, 8.0, 16.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(-2)).collect();
        let l = loglog_fit(&x, &y).unwrap();
        assert!((l.slope + 2.0).abs() < 1e-12);
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        assert!((loglog_fit(&x, &y).unwrap().slope - 1.0).abs() < 1e-12);
        assert!(loglog_fit(&x[..2], &y[..2]).is_err());
        assert!(loglog_fit(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn recovers_synthetic_power_law() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 1e-4).unwrap();
        let t = log_times(10.0, 1e3, 10);
        let y: Vec<f64> = t
            .iter()
            .map(|ti| 1.5 - 0.8 * ti.powf(-0.12) + noise.sample(&mut rng))
            .collect();
        let fit = fit_power_law(&t, &y, (10.0, 1e3), false).unwrap();
        assert!(fit.converged, "{fit:?}");
        assert!((fit.saturation - 1.5).abs() < 0.02 * 1.5, "{fit:?}");
        assert!((fit.amplitude - 0.8).abs() < 0.02 * 0.8, "{fit:?}");
        assert!((fit.exponent - 0.12).abs() < 0.02 * 0.12, "{fit:?}");
        assert!(fit.loglog_r_squared > 0.99);
    }

    #[test]
    fn second_order_term() {
        let t = log_times(1.0, 1e3, 10);
        let y: Vec<f64> = t
            .iter()
            .map(|ti| 2.0 - 1.0 * ti.powf(-0.3) + 0.4 * ti.powf(-0.6))
            .collect();
        let fit = fit_power_law(&t, &y, (1.0, 1e3), true).unwrap();
        assert!((fit.exponent - 0.3).abs() < 1e-6);
        assert!((fit.second_amplitude.unwrap() - 0.4).abs() < 1e-5);
        assert!((fit.evaluate(50.0) - (2.0 - 50f64.powf(-0.3) + 0.4 * 50f64.powf(-0.6))).abs() < 1e-8);
    }

    #[test]
    fn constant_series_is_flagged() {
        let t = log_times(10.0, 1e3, 10);
        let y = vec![0.7; t.len()];
        let fit = fit_power_law(&t, &y, (10.0, 1e3), false).unwrap();
        assert!(!fit.converged);
    }

    #[test]
    fn window_too_small() {
        let t = log_times(10.0, 100.0, 3);
        let y = vec![1.0; t.len()];
        assert!(fit_power_law(&t, &y, (10.0, 100.0), false).is_err());
    }
}
