//! Splitting an interaction into the part that commutes with every Anderson
//! mode operator `Q_α` and the remainder.
//!
//! Everything here works with dense operators on the full `2^L` space, so it
//! is limited to small chains.

use std::sync::Arc;

use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::freefermion::{anderson_basis, canonical_form, NormalModes};
use crate::hamiltonian::{
    build_interaction, build_xx_quadratic, Boundary, DisorderRealization, ModelKind, ModelSpec, Parity,
};
use crate::rng::realization_seed;
use crate::{Error, Result};

/// Largest chain handled by the dense decomposition.
pub const MAX_DECOMP_SITES: usize = 10;

/// Normalized trace inner product `tr[A†B] / N`.
pub fn hs_inner(a: &Mat<c64>, b: &Mat<c64>) -> Result<c64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() || a.nrows() != a.ncols() {
        return Err(Error::Shape(format!(
            "inner product of {}x{} and {}x{} operators",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    Ok(acc / a.nrows() as f64)
}

/// Hilbert–Schmidt norm `⟨A, A⟩^{1/2}`.
pub fn hs_norm(a: &Mat<c64>) -> f64 {
    let sum: f64 = (0..a.ncols())
        .flat_map(|j| (0..a.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| a[(i, j)].norm_sqr())
        .sum();
    (sum / a.nrows().max(1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub norm_parallel: f64,
    pub norm_perp: f64,
    pub norm_total: f64,
    /// Norm of the projection onto `span{Q_α}` alone.
    pub norm_mode_span: f64,
    pub sites: usize,
}

impl DecompositionResult {
    /// `|‖H_∥‖² + ‖H_⊥‖² − ‖H‖²|`.
    pub fn pythagoras_defect(&self) -> f64 {
        (self.norm_parallel.powi(2) + self.norm_perp.powi(2) - self.norm_total.powi(2)).abs()
    }
}

/// Simultaneous eigenbasis of the `Q_α` as the columns of a unitary, with the
/// occupation pattern of each column.
#[derive(Debug, Clone)]
pub struct AndersonFrame {
    pub unitary: Mat<c64>,
    pub occupations: Vec<Vec<bool>>,
}

impl AndersonFrame {
    pub fn new(modes: &NormalModes, basis: Arc<SectorBasis>) -> Result<Self> {
        let states = anderson_basis(modes, basis.clone())?;
        let dim = basis.dim();
        let unitary = Mat::<c64>::from_fn(dim, dim, |i, j| states[j].1.amplitudes()[i]);
        Ok(Self {
            unitary,
            occupations: states.into_iter().map(|(occ, _)| occ).collect(),
        })
    }

    /// `V† A V`.
    pub fn rotate(&self, a: &Mat<c64>) -> Mat<c64> {
        self.unitary.adjoint() * a * &self.unitary
    }

    /// `V A V†`.
    pub fn unrotate(&self, a: &Mat<c64>) -> Mat<c64> {
        &self.unitary * a * self.unitary.adjoint()
    }
}

/// The parallel and perpendicular operators in the original basis.
#[derive(Debug, Clone)]
pub struct Split {
    pub parallel: Mat<c64>,
    pub perpendicular: Mat<c64>,
}

/// Splits `h_int` into its diagonal and off-diagonal parts in `frame`.
pub fn split(h_int: &Mat<c64>, frame: &AndersonFrame) -> Split {
    let rotated = frame.rotate(h_int);
    let n = rotated.nrows();
    let diag = Mat::<c64>::from_fn(n, n, |i, j| if i == j { rotated[(i, j)] } else { c64::new(0.0, 0.0) });
    let off = Mat::<c64>::from_fn(n, n, |i, j| if i == j { c64::new(0.0, 0.0) } else { rotated[(i, j)] });
    Split {
        parallel: frame.unrotate(&diag),
        perpendicular: frame.unrotate(&off),
    }
}

/// Norms of the commutant split of `h_int`.
pub fn decompose(h_int: &Mat<c64>, frame: &AndersonFrame) -> Result<DecompositionResult> {
    let n = frame.unitary.nrows();
    if h_int.nrows() != n || h_int.ncols() != n {
        return Err(Error::Shape(format!(
            "{}x{} operator in a frame of dimension {n}",
            h_int.nrows(),
            h_int.ncols()
        )));
    }
    let rotated = frame.rotate(h_int);
    let sites = frame.occupations.first().map_or(0, Vec::len);
    let (mut diag_sq, mut off_sq) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let w = rotated[(i, j)].norm_sqr();
            if i == j {
                diag_sq += w;
            } else {
                off_sq += w;
            }
        }
    }
    // ⟨Q_α, H⟩ = (1/N) Σ_n q_α(n) H'_nn with q = ±½, and ⟨Q_α, Q_β⟩ = δ/4.
    let mode_overlaps: f64 = (0..sites)
        .map(|alpha| {
            let s: c64 = frame
                .occupations
                .iter()
                .enumerate()
                .map(|(k, occ)| rotated[(k, k)] * if occ[alpha] { 0.5 } else { -0.5 })
                .sum();
            (s / n as f64).norm_sqr()
        })
        .sum();
    Ok(DecompositionResult {
        norm_parallel: (diag_sq / n as f64).sqrt(),
        norm_perp: (off_sq / n as f64).sqrt(),
        norm_total: hs_norm(h_int),
        norm_mode_span: 2.0 * mode_overlaps.sqrt(),
        sites,
    })
}

/// Decomposition of the interaction of `spec` for one field realization, on
/// an open chain where the quadratic part needs no parity sector.
pub fn decompose_realization(spec: &ModelSpec, h: &DisorderRealization) -> Result<DecompositionResult> {
    if spec.sites > MAX_DECOMP_SITES {
        return Err(Error::Capacity {
            what: "decomposition sites",
            value: spec.sites,
            limit: MAX_DECOMP_SITES,
        });
    }
    if spec.boundary != Boundary::Open {
        return Err(Error::InvalidArgument(
            "the full-space decomposition needs an open chain".into(),
        ));
    }
    let basis = Arc::new(SectorBasis::full(spec.sites)?);
    let form = build_xx_quadratic(h, Boundary::Open, Parity::Even)?;
    let modes = canonical_form(&form)?;
    let frame = AndersonFrame::new(&modes, basis.clone())?;
    let h_int = build_interaction(spec, basis)?.to_dense();
    decompose(&h_int, &frame)
}

/// Disorder statistics of `‖H_⊥‖` at one `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerpScalingPoint {
    pub disorder: f64,
    pub mean: f64,
    pub median: f64,
    pub stderr: f64,
    pub max_pythagoras_defect: f64,
    pub samples: usize,
}

/// `‖H_⊥‖` over `realizations` samples for each `W`, with seeds derived from
/// `(base_seed, W index, realization)`.
pub fn perp_norm_scaling(
    kind: ModelKind,
    sites: usize,
    delta: f64,
    disorders: &[f64],
    realizations: usize,
    base_seed: u64,
) -> Result<Vec<PerpScalingPoint>> {
    disorders
        .iter()
        .enumerate()
        .map(|(point, &w)| {
            let spec = ModelSpec::new(kind, sites, delta, w, Boundary::Open);
            let results = (0..realizations)
                .into_par_iter()
                .map(|r| {
                    let seed = realization_seed(base_seed, point as u64, r as u64);
                    let h = DisorderRealization::sample(w, seed, sites)?;
                    decompose_realization(&spec, &h)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut norms: Vec<f64> = results.iter().map(|r| r.norm_perp).collect();
            let n = norms.len() as f64;
            let mean = norms.iter().sum::<f64>() / n;
            let var = norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            norms.sort_by(f64::total_cmp);
            let median = if norms.is_empty() {
                f64::NAN
            } else if norms.len() % 2 == 1 {
                norms[norms.len() / 2]
            } else {
                0.5 * (norms[norms.len() / 2 - 1] + norms[norms.len() / 2])
            };
            Ok(PerpScalingPoint {
                disorder: w,
                mean,
                median,
                stderr: (var / n).sqrt(),
                max_pythagoras_defect: results.iter().map(|r| r.pythagoras_defect()).fold(0.0, f64::max),
                samples: results.len(),
            })
        })
        .collect()
}
