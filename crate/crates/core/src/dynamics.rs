//! Real-time evolution by spectral decomposition and the observables
//! recorded along a trajectory.

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::basis::SpinState;
use crate::eigensolve::{full_diagonalize, EigenVectors, EigenpairSet};
use crate::faf::Covariance;
use crate::fit::{fit_power_law, loglog_fit, LineFit, PowerLawFit};
use crate::hamiltonian::SparseOperator;
use crate::{Error, Result, C64};

/// Default grid: `t ∈ [10⁻¹, 10³]`, 10 points per decade, plus `t = 0`.
pub const DEFAULT_GRID: (f64, f64, usize) = (0.1, 1e3, 10);
/// Default power-law fit window.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (10.0, 1e3);

/// Logarithmically spaced sample times, optionally preceded by `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub include_zero: bool,
}

impl TimeGrid {
    pub fn logarithmic(t_min: f64, t_max: f64, per_decade: usize, include_zero: bool) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || per_decade == 0 {
            return Err(Error::InvalidArgument(format!(
                "time grid needs 0 < t_min < t_max and points per decade ≥ 1, got [{t_min}, {t_max}] × {per_decade}"
            )));
        }
        let steps = ((t_max / t_min).log10() * per_decade as f64).round() as usize;
        let mut times = Vec::with_capacity(steps + 2);
        if include_zero {
            times.push(0.0);
        }
        times.extend((0..=steps).map(|i| t_min * 10f64.powf(i as f64 / per_decade as f64)));
        Ok(Self {
            times,
            t_min,
            t_max,
            per_decade,
            include_zero,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

impl Default for TimeGrid {
    fn default() -> Self {
        let (lo, hi, n) = DEFAULT_GRID;
        Self::logarithmic(lo, hi, n, true).expect("valid default grid")
    }
}

/// One observable sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    /// Samples with `t_lo ≤ t ≤ t_hi`.
    pub fn window(&self, t_lo: f64, t_hi: f64) -> (Vec<f64>, Vec<f64>) {
        self.times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
            .map(|(t, v)| (*t, *v))
            .unzip()
    }

    pub fn fit_power_law(&self, window: (f64, f64), second_order: bool) -> Result<PowerLawFit> {
        fit_power_law(&self.times, &self.values, window, second_order)
    }

    /// Straight-line fit of `log value` vs `log t` over a window.
    pub fn loglog_slope(&self, window: (f64, f64)) -> Result<LineFit> {
        let (t, v) = self.window(window.0, window.1);
        loglog_fit(&t, &v)
    }

    /// `(max − min) / |mean|` over the last decade of the grid.
    pub fn last_decade_drift(&self) -> f64 {
        let t_end = self.times.last().copied().unwrap_or(0.0);
        let (_, v) = self.window(t_end / 10.0, t_end);
        if v.is_empty() {
            return 0.0;
        }
        let max = v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = v.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        if mean == 0.0 {
            max - min
        } else {
            (max - min) / mean.abs()
        }
    }

    /// Pointwise mean of equally gridded series.
    pub fn mean_of(label: &str, series: &[TimeSeries]) -> Result<TimeSeries> {
        let first = series
            .first()
            .ok_or_else(|| Error::InvalidArgument("no series to average".into()))?;
        if series.iter().any(|s| s.times != first.times) {
            return Err(Error::Shape("series live on different grids".into()));
        }
        let n = series.len() as f64;
        let values = (0..first.times.len())
            .map(|i| series.iter().map(|s| s.values[i]).sum::<f64>() / n)
            .collect();
        Ok(TimeSeries {
            label: label.to_string(),
            times: first.times.clone(),
            values,
        })
    }
}

/// Cached spectral data for evolving one initial state.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    eig: &'a EigenpairSet,
    overlaps: Vec<C64>,
}

impl<'a> Propagator<'a> {
    /// Requires a complete eigendecomposition.
    pub fn new(eig: &'a EigenpairSet, psi0: &SpinState) -> Result<Self> {
        if !eig.is_full() {
            return Err(Error::PartialEigenset {
                got: eig.len(),
                dim: eig.basis().dim(),
            });
        }
        if **eig.basis() != **psi0.basis() {
            return Err(Error::Shape("state and eigenbasis differ".into()));
        }
        let psi = psi0.amplitudes();
        let dim = psi.len();
        let overlaps = match eig.vectors() {
            EigenVectors::Real(v) => {
                let rhs = Mat::<f64>::from_fn(dim, 2, |i, j| if j == 0 { psi[i].re } else { psi[i].im });
                let c = v.transpose() * &rhs;
                (0..dim).map(|k| C64::new(c[(k, 0)], c[(k, 1)])).collect()
            }
            EigenVectors::Complex(v) => {
                let rhs = Mat::<c64>::from_fn(dim, 1, |i, _| psi[i]);
                let c = v.adjoint() * &rhs;
                (0..dim).map(|k| c[(k, 0)]).collect()
            }
        };
        Ok(Self { eig, overlaps })
    }

    /// `Σ_n e^{−iλ_n t} ⟨v_n|ψ₀⟩ v_n`.
    pub fn state_at(&self, t: f64) -> Result<SpinState> {
        let dim = self.overlaps.len();
        let phased: Vec<C64> = self
            .overlaps
            .iter()
            .zip(self.eig.eigenvalues())
            .map(|(c, &l)| c * C64::new((l * t).cos(), -(l * t).sin()))
            .collect();
        let amps: Vec<C64> = match self.eig.vectors() {
            EigenVectors::Real(v) => {
                let rhs = Mat::<f64>::from_fn(dim, 2, |i, j| if j == 0 { phased[i].re } else { phased[i].im });
                let out = v * &rhs;
                (0..dim).map(|i| C64::new(out[(i, 0)], out[(i, 1)])).collect()
            }
            EigenVectors::Complex(v) => {
                let rhs = Mat::<c64>::from_fn(dim, 1, |i, _| phased[i]);
                let out = v * &rhs;
                (0..dim).map(|i| out[(i, 0)]).collect()
            }
        };
        SpinState::normalized(self.eig.basis().clone(), amps)
    }

    /// `Σ |c_n|² λ_n`.
    pub fn energy(&self) -> f64 {
        self.overlaps
            .iter()
            .zip(self.eig.eigenvalues())
            .map(|(c, l)| c.norm_sqr() * l)
            .sum()
    }
}

/// `e^{−iHt} ψ₀` from a full eigendecomposition.
pub fn evolve(psi0: &SpinState, eig: &EigenpairSet, t: f64) -> Result<SpinState> {
    Propagator::new(eig, psi0)?.state_at(t)
}

/// Covariance matrices and conserved quantities along a trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub covariances: Vec<Covariance>,
    pub energies: Vec<f64>,
    pub norms: Vec<f64>,
}

impl Trajectory {
    /// Builds the trajectory from explicit states; `energy` measures each.
    pub fn from_states<F>(grid: TimeGrid, states: &[SpinState], mut energy: F) -> Result<Self>
    where
        F: FnMut(&SpinState) -> Result<f64>,
    {
        if states.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} states for {} grid points",
                states.len(),
                grid.len()
            )));
        }
        let mut covariances = Vec::with_capacity(states.len());
        let mut energies = Vec::with_capacity(states.len());
        let mut norms = Vec::with_capacity(states.len());
        for s in states {
            covariances.push(Covariance::from_state(s)?);
            energies.push(energy(s)?);
            norms.push(s.norm());
        }
        Ok(Self {
            grid,
            covariances,
            energies,
            norms,
        })
    }

    fn series(&self, label: String, f: impl Fn(&Covariance) -> Result<f64>) -> Result<TimeSeries> {
        Ok(TimeSeries {
            label,
            times: self.grid.times().to_vec(),
            values: self.covariances.iter().map(f).collect::<Result<_>>()?,
        })
    }

    /// `F_k(t)`.
    pub fn faf_series(&self, k: u32) -> Result<TimeSeries> {
        self.series(format!("F{k}"), |m| Ok(m.faf(k)?.value))
    }

    /// `F_1(t)` through `L − Σ_{m<n} M_mn²`.
    pub fn faf1_sum_series(&self) -> Result<TimeSeries> {
        self.series("F1_sum".into(), |m| Ok(m.faf1_sum_form()))
    }

    /// `|⟨γ_m γ_n⟩|²(t)` for 1-based Majorana indices.
    pub fn correlator_series(&self, m: usize, n: usize) -> Result<TimeSeries> {
        let dim = 2 * self.covariances.first().map_or(0, |c| c.sites());
        if m == 0 || n == 0 || m > dim || n > dim || m == n {
            return Err(Error::InvalidArgument(format!(
                "Majorana pair ({m}, {n}) invalid for {dim} Majoranas"
            )));
        }
        self.series(format!("corr_{m}_{n}"), |c| Ok(c.correlator_sq(m - 1, n - 1)))
    }

    /// On-site weight `c_z(t) = Σ_j ⟨σᶻ_j⟩²`.
    pub fn onsite_weight_series(&self) -> Result<TimeSeries> {
        self.series("c_z".into(), |c| Ok(c.onsite_z().iter().map(|z| z * z).sum()))
    }
}

/// Evolves `psi0` under `h` across `grid` using a fresh full diagonalization.
pub fn simulate(h: &SparseOperator, psi0: &SpinState, grid: TimeGrid) -> Result<Trajectory> {
    let eig = full_diagonalize(h)?;
    simulate_with(&eig, h, psi0, grid)
}

/// Evolves `psi0` with a precomputed full eigendecomposition of `h`.
pub fn simulate_with(
    eig: &EigenpairSet,
    h: &SparseOperator,
    psi0: &SpinState,
    grid: TimeGrid,
) -> Result<Trajectory> {
    let prop = Propagator::new(eig, psi0)?;
    let states = grid
        .times()
        .iter()
        .map(|&t| prop.state_at(t))
        .collect::<Result<Vec<_>>>()?;
    // Normalized construction hides the raw norm; record it from overlaps.
    let raw_norm = prop.overlaps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut traj = Trajectory::from_states(grid, &states, |s| Ok(h.expectation(s.amplitudes())?.re))?;
    traj.norms.iter_mut().for_each(|n| *n = raw_norm);
    Ok(traj)
}
