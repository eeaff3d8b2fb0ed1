//! Cat-like eigenstates: long-range connected correlators, the count of
//! unsaturated spins and the distributions built from them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{site_mask, Config, SectorBasis, SpinState};
use crate::eigensolve::EigenpairSet;
use crate::faf::Covariance;
use crate::{Error, Result, C64};

/// `|⟨σᶻ_i σᶻ_j⟩ − ⟨σᶻ_i⟩⟨σᶻ_j⟩|`.
pub fn czz_connected(psi: &SpinState, i: usize, j: usize) -> f64 {
    let z = psi.magnetization_profile();
    (psi.zz_expectation(i, j) - z[i] * z[j]).abs()
}

/// Largest connected correlator over the pairs `(i, i + L/2)`, with the `i`
/// that attains it.
pub fn max_half_chain_czz(psi: &SpinState) -> (f64, usize) {
    let sites = psi.sites();
    let half = sites / 2;
    let z = psi.magnetization_profile();
    (0..half)
        .map(|i| ((psi.zz_expectation(i, i + half) - z[i] * z[i + half]).abs(), i))
        .fold((f64::NEG_INFINITY, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

/// `R = L − Σ_i |⟨σᶻ_i⟩|`, with each `|⟨σᶻ_i⟩|` clamped to 1 so saturated
/// spins contribute exactly zero.
pub fn r_observable(psi: &SpinState) -> f64 {
    psi.magnetization_profile().iter().map(|z| 1.0 - z.abs().min(1.0)).sum()
}

/// Per-eigenstate observables used by the resonance statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSummary {
    pub energy: f64,
    pub f1: f64,
    pub r: f64,
    pub czz_max: f64,
    pub czz_site: usize,
}

impl StateSummary {
    pub fn of(psi: &SpinState, energy: f64) -> Result<Self> {
        let (czz_max, czz_site) = max_half_chain_czz(psi);
        Ok(Self {
            energy,
            f1: Covariance::from_state(psi)?.faf(1)?.value,
            r: r_observable(psi),
            czz_max,
            czz_site,
        })
    }
}

/// Summaries of every pair in `eig`.
pub fn summarize(eig: &EigenpairSet) -> Result<Vec<StateSummary>> {
    (0..eig.len())
        .map(|i| StateSummary::of(&eig.state(i)?, eig.eigenvalues()[i]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatCandidate {
    pub indices: (usize, usize),
    /// Energy gap per site.
    pub gap: f64,
    pub members: [CatMember; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatMember {
    pub czz_max: f64,
    pub czz_site: usize,
    pub f1: f64,
    pub r: f64,
    pub profile: Vec<f64>,
}

impl CatMember {
    fn of(psi: &SpinState) -> Result<Self> {
        let (czz_max, czz_site) = max_half_chain_czz(psi);
        Ok(Self {
            czz_max,
            czz_site,
            f1: Covariance::from_state(psi)?.faf(1)?.value,
            r: r_observable(psi),
            profile: psi.magnetization_profile(),
        })
    }
}

/// Adjacent pairs `(k, k+1)` of energy-sorted states where both members have
/// `max C^zz ≥ threshold`, optionally with a per-site gap of at most
/// `gap_ceiling`.
pub fn detect_cat_pairs_in(
    energies: &[f64],
    states: &[SpinState],
    threshold: f64,
    gap_ceiling: Option<f64>,
) -> Result<Vec<CatCandidate>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "correlator threshold must be positive, got {threshold}"
        )));
    }
    if energies.len() != states.len() {
        return Err(Error::Shape(format!(
            "{} energies for {} states",
            energies.len(),
            states.len()
        )));
    }
    let passes: Vec<bool> = states.iter().map(|s| max_half_chain_czz(s).0 >= threshold).collect();
    let mut out = Vec::new();
    for k in 0..states.len().saturating_sub(1) {
        if !(passes[k] && passes[k + 1]) {
            continue;
        }
        let gap = (energies[k + 1] - energies[k]).abs() / states[k].sites() as f64;
        if gap_ceiling.is_some_and(|c| gap > c) {
            continue;
        }
        out.push(CatCandidate {
            indices: (k, k + 1),
            gap,
            members: [CatMember::of(&states[k])?, CatMember::of(&states[k + 1])?],
        });
    }
    Ok(out)
}

/// [`detect_cat_pairs_in`] over the pairs of `eig` that are neighbors in the
/// full spectrum.
pub fn detect_cat_pairs(eig: &EigenpairSet, threshold: f64, gap_ceiling: Option<f64>) -> Result<Vec<CatCandidate>> {
    let states = (0..eig.len()).map(|i| eig.state(i)).collect::<Result<Vec<_>>>()?;
    let found = detect_cat_pairs_in(eig.eigenvalues(), &states, threshold, gap_ceiling)?;
    Ok(found
        .into_iter()
        .filter(|c| eig.position(c.indices.1) == eig.position(c.indices.0) + 1)
        .collect())
}

/// Histogram with uniform bins `[e_k, e_{k+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples that landed in a bin.
    pub total: u64,
    /// Samples outside `[e_0, e_last)` or not finite.
    pub outliers: u64,
}

impl Histogram {
    /// Empty histogram over `[lo, hi)` with bins of `width`; `hi` is rounded
    /// up to a whole number of bins.
    pub fn uniform(lo: f64, hi: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "histogram range [{lo}, {hi}) with width {width}"
            )));
        }
        let bins = ((hi - lo) / width - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            edges: (0..=bins).map(|k| lo + k as f64 * width).collect(),
            counts: vec![0; bins],
            total: 0,
            outliers: 0,
        })
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, width: f64) -> Result<Self> {
        let mut h = Self::uniform(lo, hi, width)?;
        h.extend(values);
        Ok(h)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn insert(&mut self, value: f64) {
        let lo = self.edges[0];
        let k = ((value - lo) / self.width()).floor();
        if value.is_finite() && k >= 0.0 && (k as usize) < self.bins() {
            // Guard the floor against rounding at an edge.
            let mut k = k as usize;
            if value < self.edges[k] {
                k -= 1;
            } else if k + 1 < self.edges.len() && value >= self.edges[k + 1] {
                k += 1;
            }
            if k < self.bins() {
                self.counts[k] += 1;
                self.total += 1;
                return;
            }
        }
        self.outliers += 1;
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.edges != other.edges {
            return Err(Error::Shape("histograms have different bins".into()));
        }
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        self.total += other.total;
        self.outliers += other.outliers;
        Ok(())
    }

    /// Probability density per bin; integrates to 1 over the binned samples.
    pub fn density(&self) -> Vec<f64> {
        let norm = self.total as f64 * self.width();
        self.counts
            .iter()
            .map(|&c| if norm > 0.0 { c as f64 / norm } else { 0.0 })
            .collect()
    }

    pub fn center(&self, k: usize) -> f64 {
        0.5 * (self.edges[k] + self.edges[k + 1])
    }

    /// Bin with the largest count (first on ties).
    pub fn mode(&self) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        (0..self.bins()).fold(None, |best: Option<usize>, k| match best {
            Some(b) if self.counts[b] >= self.counts[k] => Some(b),
            _ => Some(k),
        })
    }

    /// Interior bins whose count exceeds both neighbors; a plateau of equal
    /// counts counts once, at its first bin, when it is higher than both
    /// sides.
    pub fn local_maxima(&self) -> Vec<usize> {
        let c = &self.counts;
        let mut out = Vec::new();
        let mut k = 1;
        while k + 1 < c.len() {
            let mut end = k;
            while end + 1 < c.len() && c[end + 1] == c[k] {
                end += 1;
            }
            if end + 1 < c.len() && c[k] > c[k - 1] && c[k] > c[end + 1] {
                out.push(k);
            }
            k = end + 1;
        }
        out
    }
}

/// Histogram of `R` over states with `F₁ ∈ [target − eps, target + eps]`.
pub fn filtered_r_distribution(
    summaries: &[StateSummary],
    target: f64,
    eps: f64,
    bins: &Histogram,
) -> Result<Histogram> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("filter width must be positive, got {eps}")));
    }
    let mut h = Histogram {
        counts: vec![0; bins.bins()],
        total: 0,
        outliers: 0,
        edges: bins.edges.clone(),
    };
    h.extend(summaries.iter().filter(|s| (s.f1 - target).abs() <= eps).map(|s| s.r));
    Ok(h)
}

impl Extend<f64> for Histogram {
    fn extend<T: IntoIterator<Item = f64>>(&mut self, iter: T) {
        iter.into_iter().for_each(|v| self.insert(v));
    }
}

/// Product state with a cat superposition on a segment:
/// `(|a⟩ + |ā⟩)/√2 ⊗ |background⟩`, where `a` alternates starting with `↑` at
/// `start` and `ā` is its flip on the segment.
#[derive(Debug, Clone, PartialEq)]
pub struct CatAnsatz {
    pub sites: usize,
    pub start: usize,
    pub len: usize,
    /// Frozen spins outside the segment (segment bits ignored).
    pub background: Config,
}

impl CatAnsatz {
    /// Segment on a Néel background.
    pub fn on_neel(sites: usize, start: usize, len: usize) -> Self {
        Self {
            sites,
            start,
            len,
            background: crate::basis::neel_config(sites),
        }
    }

    pub fn segment_mask(&self) -> Config {
        site_mask(self.len) << self.start
    }

    pub fn build(&self) -> Result<SpinState> {
        if self.len == 0 || self.start + self.len > self.sites {
            return Err(Error::InvalidArgument(format!(
                "segment [{}, {}) outside a {}-site chain",
                self.start,
                self.start + self.len,
                self.sites
            )));
        }
        let seg = self.segment_mask();
        let pattern: Config = (0..self.len)
            .filter(|k| k % 2 == 0)
            .fold(0, |acc, k| acc | 1 << (self.start + k));
        let a = (self.background & site_mask(self.sites) & !seg) | pattern;
        let b = a ^ seg;
        let basis = if a.count_ones() == b.count_ones() {
            SectorBasis::new(self.sites, a.count_ones() as usize)?
        } else {
            SectorBasis::full(self.sites)?
        };
        let basis = Arc::new(basis);
        let mut amps = vec![C64::new(0.0, 0.0); basis.dim()];
        for c in [a, b] {
            amps[basis.index_of(c).expect("config lies in its basis")] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        }
        SpinState::from_normalized(basis, amps)
    }
}
