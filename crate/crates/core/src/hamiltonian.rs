//! Disordered XX, XXZ and impurity chains.
//!
//! `H = ¼ Σ_j (σˣ_j σˣ_{j+1} + σʸ_j σʸ_{j+1}) + ½ Σ_j h_j σᶻ_j + H_int` with
//! `H_int = (Δ/4) Σ_j σᶻ_j σᶻ_{j+1}` for XXZ and a single central bond for the
//! impurity model.

use std::sync::Arc;

use faer::{c64, Mat};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::basis::{Config, SectorBasis};
use crate::freefermion::QuadraticForm;
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result, C64};

/// Hopping amplitude between configurations related by one adjacent exchange.
pub const HOP: f64 = 0.5;

/// Quadratic-form entry multiplying `h_j` on the on-site pair `(2j−1, 2j)`:
/// `(i/4)(A γ₁γ₂ + (−A) γ₂γ₁) = −(A/2) σᶻ`, so `½ h σᶻ` needs `A = −h`.
pub const FIELD_ENTRY: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Xx,
    Xxz,
    Impurity,
    Lbit,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Xx => "xx",
            ModelKind::Xxz => "xxz",
            ModelKind::Impurity => "impurity",
            ModelKind::Lbit => "lbit",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xx" => Ok(ModelKind::Xx),
            "xxz" => Ok(ModelKind::Xxz),
            "impurity" => Ok(ModelKind::Impurity),
            "lbit" => Ok(ModelKind::Lbit),
            other => Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "open" | "obc" => Ok(Boundary::Open),
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidArgument(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Eigenvalue of the fermion parity `∏_j σᶻ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Parity of every configuration with `n_up` up spins on `sites` sites.
    pub fn of_sector(sites: usize, n_up: usize) -> Parity {
        if (sites - n_up) % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Sign `η` of the wrap-around bond in the quadratic form. The spin ring
    /// maps to antiperiodic fermions in the even sector and periodic ones in
    /// the odd sector, which with the entry pattern of [`build_xx_quadratic`]
    /// means `η = −1` for even and `η = +1` for odd parity (fixed by matching
    /// many-body and single-particle spectra).
    pub fn boundary_sign(self) -> f64 {
        match self {
            Parity::Even => -1.0,
            Parity::Odd => 1.0,
        }
    }
}

/// One Hamiltonian instance up to its disorder fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub sites: usize,
    pub delta: f64,
    pub disorder: f64,
    pub boundary: Boundary,
    pub parity: Parity,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, sites: usize, delta: f64, disorder: f64, boundary: Boundary) -> Self {
        Self {
            kind,
            sites,
            delta,
            disorder,
            boundary,
            parity: Parity::of_sector(sites, sites / 2),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.disorder >= 0.0 && self.disorder.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "disorder strength must be finite and non-negative, got {}",
                self.disorder
            )));
        }
        if !self.delta.is_finite() {
            return Err(Error::InvalidArgument("delta must be finite".into()));
        }
        if self.sites < 2 || self.sites % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "chain length must be even and at least 2, got {}",
                self.sites
            )));
        }
        if self.kind == ModelKind::Impurity && self.sites < 4 {
            return Err(Error::InvalidArgument(
                "the impurity model needs at least 4 sites".into(),
            ));
        }
        Ok(())
    }

    /// Bonds `(i, i+1)` of the chain, including `(L−1, 0)` when periodic.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        chain_bonds(self.sites, self.boundary)
    }

    /// Bonds carrying the `σᶻσᶻ` interaction.
    pub fn interaction_bonds(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ModelKind::Xxz => self.bonds(),
            ModelKind::Impurity => vec![(self.sites / 2 - 1, self.sites / 2)],
            ModelKind::Xx | ModelKind::Lbit => Vec::new(),
        }
    }
}

pub fn chain_bonds(sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut bonds: Vec<_> = (0..sites.saturating_sub(1)).map(|j| (j, j + 1)).collect();
    if boundary == Boundary::Periodic && sites > 1 {
        bonds.push((sites - 1, 0));
    }
    bonds
}

/// On-site fields of one disorder realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub fields: Vec<f64>,
    pub strength: f64,
    pub seed: u64,
}

impl DisorderRealization {
    /// `h_j = W (2u_j − 1)` with `u_j` uniform on `[0, 1)` from the field
    /// stream of `seed`. Realizations with equal seeds but different `W` share
    /// the same `u_j`.
    pub fn sample(strength: f64, seed: u64, sites: usize) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "disorder strength must be finite and non-negative, got {strength}"
            )));
        }
        let mut rng = stream_rng(seed, Stream::Fields);
        let fields = (0..sites)
            .map(|_| strength * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        Ok(Self {
            fields,
            strength,
            seed,
        })
    }

    pub fn from_fields(fields: Vec<f64>) -> Self {
        let strength = fields.iter().fold(0.0_f64, |m, h| m.max(h.abs()));
        Self {
            fields,
            strength,
            seed: 0,
        }
    }

    pub fn sites(&self) -> usize {
        self.fields.len()
    }
}

/// Sparse operator on a basis, entries sorted by `(row, col)` without
/// duplicates.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    basis: Arc<SectorBasis>,
    entries: Vec<(u32, u32, C64)>,
}

impl SparseOperator {
    /// Sorts and merges duplicate coordinates; exact zeros are dropped.
    pub fn from_triplets(basis: Arc<SectorBasis>, mut triplets: Vec<(u32, u32, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut entries: Vec<(u32, u32, C64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match entries.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => entries.push((r, c, v)),
            }
        }
        entries.retain(|e| e.2 != C64::new(0.0, 0.0));
        Self { basis, entries }
    }

    /// Keeps entries of `dense` with modulus above `cutoff`.
    pub fn from_dense(basis: Arc<SectorBasis>, dense: &Mat<c64>, cutoff: f64) -> Result<Self> {
        let n = basis.dim();
        if dense.nrows() != n || dense.ncols() != n {
            return Err(Error::Shape(format!(
                "{}x{} matrix on a basis of dimension {n}",
                dense.nrows(),
                dense.ncols()
            )));
        }
        let mut triplets = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = dense[(r, c)];
                if v.norm() > cutoff {
                    triplets.push((r as u32, c as u32, v));
                }
            }
        }
        Ok(Self::from_triplets(basis, triplets))
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn entries(&self) -> &[(u32, u32, C64)] {
        &self.entries
    }

    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|e| e.2.im == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|e| e.0 == e.1)
    }

    pub fn trace(&self) -> C64 {
        self.entries.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        let mut d = vec![C64::new(0.0, 0.0); self.dim()];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r as usize] = v;
            }
        }
        d
    }

    /// Largest `|H_rc − conj(H_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let lookup = |r: u32, c: u32| {
            self.entries
                .binary_search_by_key(&(r, c), |e| (e.0, e.1))
                .map(|i| self.entries[i].2)
                .unwrap_or(C64::new(0.0, 0.0))
        };
        self.entries
            .iter()
            .map(|&(r, c, v)| (v - lookup(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `H v`.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim() {
            return Err(Error::Shape(format!(
                "vector of length {} for an operator of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for &(r, c, h) in &self.entries {
            out[r as usize] += h * v[c as usize];
        }
        Ok(out)
    }

    /// `⟨v|H|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> Result<C64> {
        let hv = self.apply(v)?;
        Ok(v.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(self.dim(), self.dim());
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] = v;
        }
        m
    }

    /// Real part as a dense matrix; `None` if any entry is complex.
    pub fn to_dense_real(&self) -> Option<Mat<f64>> {
        if !self.is_real() {
            return None;
        }
        let mut m = Mat::<f64>::zeros(self.dim(), self.dim());
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] = v.re;
        }
        Some(m)
    }

    /// `self + scale · other` on the same basis.
    pub fn add_scaled(&self, other: &SparseOperator, scale: f64) -> Result<SparseOperator> {
        if *self.basis != *other.basis {
            return Err(Error::Shape("operators live in different bases".into()));
        }
        let triplets = self
            .entries
            .iter()
            .copied()
            .chain(other.entries.iter().map(|&(r, c, v)| (r, c, v * scale)))
            .collect();
        Ok(Self::from_triplets(self.basis.clone(), triplets))
    }
}

fn check_lengths(spec: &ModelSpec, h: &DisorderRealization, basis: &SectorBasis) -> Result<()> {
    if spec.sites != basis.sites() || spec.sites != h.sites() {
        return Err(Error::Shape(format!(
            "model on {} sites, fields on {}, basis on {}",
            spec.sites,
            h.sites(),
            basis.sites()
        )));
    }
    Ok(())
}

#[inline]
fn zz_sign(c: Config, i: usize, j: usize) -> f64 {
    if (c >> i ^ c >> j) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Full many-body Hamiltonian of `spec` on `basis`.
pub fn build_many_body(
    spec: &ModelSpec,
    h: &DisorderRealization,
    basis: Arc<SectorBasis>,
) -> Result<SparseOperator> {
    if spec.kind == ModelKind::Lbit {
        return Err(Error::InvalidArgument(
            "l-bit Hamiltonians are built by the lbit module".into(),
        ));
    }
    spec.validate()?;
    check_lengths(spec, h, &basis)?;
    let bonds = spec.bonds();
    let int_bonds = spec.interaction_bonds();
    let mut triplets = Vec::with_capacity(basis.dim() * (bonds.len() + 1));
    for (r, &c) in basis.states().iter().enumerate() {
        let field: f64 = h
            .fields
            .iter()
            .enumerate()
            .map(|(j, hj)| if c >> j & 1 == 1 { 0.5 * hj } else { -0.5 * hj })
            .sum();
        let interaction: f64 = int_bonds
            .iter()
            .map(|&(i, j)| 0.25 * spec.delta * zz_sign(c, i, j))
            .sum();
        triplets.push((r as u32, r as u32, C64::new(field + interaction, 0.0)));
        for &(i, j) in &bonds {
            if zz_sign(c, i, j) < 0.0 {
                let flipped = c ^ (1 << i | 1 << j);
                let col = basis
                    .index_of(flipped)
                    .expect("exchange preserves magnetization");
                triplets.push((col as u32, r as u32, C64::new(HOP, 0.0)));
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis, triplets))
}

/// Interaction part `H_int` alone (diagonal).
pub fn build_interaction(spec: &ModelSpec, basis: Arc<SectorBasis>) -> Result<SparseOperator> {
    spec.validate()?;
    if spec.sites != basis.sites() {
        return Err(Error::Shape(format!(
            "model on {} sites, basis on {}",
            spec.sites,
            basis.sites()
        )));
    }
    let bonds = spec.interaction_bonds();
    let triplets = basis
        .states()
        .iter()
        .enumerate()
        .map(|(r, &c)| {
            let v: f64 = bonds
                .iter()
                .map(|&(i, j)| 0.25 * spec.delta * zz_sign(c, i, j))
                .sum();
            (r as u32, r as u32, C64::new(v, 0.0))
        })
        .collect();
    Ok(SparseOperator::from_triplets(basis, triplets))
}

/// Antisymmetric `A` with `H_xx = (i/4) Σ_{mn} A_mn γ_m γ_n`.
///
/// Bond `(j, j+1)` contributes `A_{2j−1,2j+2} = ½` and `A_{2j,2j+1} = −½`
/// (1-based Majorana indices); the wrap-around bond of a periodic chain
/// carries the extra sign `η` of `parity`.
pub fn build_xx_quadratic(
    h: &DisorderRealization,
    boundary: Boundary,
    parity: Parity,
) -> Result<QuadraticForm> {
    let sites = h.sites();
    if sites == 0 {
        return Err(Error::InvalidArgument("empty chain".into()));
    }
    let n = 2 * sites;
    let mut a = Mat::<f64>::zeros(n, n);
    let mut set = |m: usize, k: usize, v: f64| {
        a[(m, k)] += v;
        a[(k, m)] -= v;
    };
    for (j, hj) in h.fields.iter().enumerate() {
        set(2 * j, 2 * j + 1, FIELD_ENTRY * hj);
    }
    for (i, j) in chain_bonds(sites, boundary) {
        let eta = if j == i + 1 { 1.0 } else { parity.boundary_sign() };
        set(2 * i, 2 * j + 1, eta * HOP);
        set(2 * i + 1, 2 * j, -eta * HOP);
    }
    QuadraticForm::new(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_re(op: &SparseOperator) -> Vec<Vec<f64>> {
        let d = op.to_dense();
        (0..op.dim())
            .map(|r| (0..op.dim()).map(|c| d[(r, c)].re).collect())
            .collect()
    }

    #[test]
    fn two_site_oracles() {
        let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
        let h0 = DisorderRealization::from_fields(vec![0.0, 0.0]);
        let xx = ModelSpec::new(ModelKind::Xx, 2, 0.0, 0.0, Boundary::Open);
        let op = build_many_body(&xx, &h0, basis.clone()).unwrap();
        assert_eq!(dense_re(&op), vec![vec![0.0, 0.5], vec![0.5, 0.0]]);

        let xxz = ModelSpec::new(ModelKind::Xxz, 2, 4.0, 0.0, Boundary::Open);
        let op = build_many_body(&xxz, &h0, basis).unwrap();
        assert_eq!(dense_re(&op), vec![vec![-1.0, 0.5], vec![0.5, -1.0]]);
    }

    #[test]
    fn zero_delta_models_coincide() {
        let basis = Arc::new(SectorBasis::half_filling(6).unwrap());
        let h = DisorderRealization::sample(3.0, 11, 6).unwrap();
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let ops: Vec<_> = [ModelKind::Xx, ModelKind::Xxz, ModelKind::Impurity]
                .into_iter()
                .map(|k| {
                    build_many_body(&ModelSpec::new(k, 6, 0.0, 3.0, boundary), &h, basis.clone())
                        .unwrap()
                })
                .collect();
            assert_eq!(ops[0].entries(), ops[1].entries());
            assert_eq!(ops[0].entries(), ops[2].entries());
        }
    }

    #[test]
    fn hermitian_and_sector_preserving() {
        let basis = Arc::new(SectorBasis::half_filling(8).unwrap());
        let h = DisorderRealization::sample(5.0, 3, 8).unwrap();
        let spec = ModelSpec::new(ModelKind::Xxz, 8, 1.0, 5.0, Boundary::Periodic);
        let op = build_many_body(&spec, &h, basis).unwrap();
        assert!(op.hermiticity_defect() < 1e-14);
        assert!(op.entries().iter().all(|e| (e.0 as usize) < op.dim()));
    }

    #[test]
    fn field_sampling() {
        let h = DisorderRealization::sample(0.0, 5, 8).unwrap();
        assert!(h.fields.iter().all(|&x| x == 0.0));
        let a = DisorderRealization::sample(2.0, 5, 8).unwrap();
        let b = DisorderRealization::sample(2.0, 5, 8).unwrap();
        assert_eq!(a, b);
        let c = DisorderRealization::sample(4.0, 5, 8).unwrap();
        for (x, y) in a.fields.iter().zip(&c.fields) {
            assert!((2.0 * x - y).abs() < 1e-15);
        }
        let big = DisorderRealization::sample(1.0, 9, 100_000).unwrap();
        assert!(big.fields.iter().all(|x| x.abs() <= 1.0));
        let mean_abs = big.fields.iter().map(|x| x.abs()).sum::<f64>() / 1e5;
        assert!((mean_abs - 0.5).abs() < 0.01);
        assert!(DisorderRealization::sample(-1.0, 0, 4).is_err());
    }

    #[test]
    fn rejects_invalid_specs() {
        let basis = Arc::new(SectorBasis::half_filling(4).unwrap());
        let h = DisorderRealization::from_fields(vec![0.0; 4]);
        let lbit = ModelSpec::new(ModelKind::Lbit, 4, 0.0, 0.0, Boundary::Open);
        assert!(build_many_body(&lbit, &h, basis.clone()).is_err());
        let imp = ModelSpec::new(ModelKind::Impurity, 2, 1.0, 0.0, Boundary::Open);
        assert!(imp.validate().is_err());
        let bad = DisorderRealization::from_fields(vec![0.0; 6]);
        let xx = ModelSpec::new(ModelKind::Xx, 4, 0.0, 0.0, Boundary::Open);
        assert!(build_many_body(&xx, &bad, basis).is_err());
    }

    #[test]
    fn quadratic_form_entries() {
        let h = DisorderRealization::from_fields(vec![0.3, -0.7, 1.1]);
        let q = build_xx_quadratic(&h, Boundary::Open, Parity::Even).unwrap();
        let a = q.matrix();
        assert_eq!(a[(0, 1)], -0.3);
        assert_eq!(a[(0, 3)], 0.5);
        assert_eq!(a[(1, 2)], -0.5);
        assert_eq!(a[(4, 1)], 0.0);
        for m in 0..6 {
            for k in 0..6 {
                assert_eq!(a[(m, k)], -a[(k, m)]);
            }
        }
        let p = build_xx_quadratic(&h, Boundary::Periodic, Parity::Even).unwrap();
        assert_eq!(p.matrix()[(4, 1)], -0.5);
        assert_eq!(p.matrix()[(5, 0)], 0.5);
    }

    #[test]
    fn impurity_sits_on_central_bond() {
        let spec = ModelSpec::new(ModelKind::Impurity, 8, 1.0, 0.0, Boundary::Periodic);
        assert_eq!(spec.interaction_bonds(), vec![(3, 4)]);
        let basis = Arc::new(SectorBasis::half_filling(8).unwrap());
        let hint = build_interaction(&spec, basis).unwrap();
        assert!(hint.is_diagonal());
        for (&c, v) in hint.basis().states().iter().zip(hint.diagonal()) {
            let want = if (c >> 3 ^ c >> 4) & 1 == 0 { 0.25 } else { -0.25 };
            assert_eq!(v.re, want);
        }
    }

    /// Many-body energies of each parity class against `Σ_α s_α ε_α / 2` over
    /// sign patterns of that parity, `∏_j σᶻ_j = det G · ∏_α (−s_α)`.
    fn check_spectrum_equivalence(sites: usize, boundary: Boundary, seed: u64) {
        use crate::freefermion::canonical_form;
        use faer::Side;
        let h = DisorderRealization::sample(1.7, seed, sites).unwrap();
        for parity in [Parity::Even, Parity::Odd] {
            let mut many_body = Vec::new();
            for n_up in 0..=sites {
                if Parity::of_sector(sites, n_up) != parity {
                    continue;
                }
                let basis = Arc::new(SectorBasis::new(sites, n_up).unwrap());
                let spec = ModelSpec::new(ModelKind::Xx, sites, 0.0, 1.7, boundary);
                let op = build_many_body(&spec, &h, basis).unwrap();
                many_body.extend(op.to_dense().self_adjoint_eigenvalues(Side::Lower).unwrap());
            }
            let a = build_xx_quadratic(&h, boundary, parity).unwrap();
            let modes = canonical_form(&a).unwrap();
            let mut free = Vec::new();
            for pattern in 0u32..(1 << sites) {
                let mut sign = modes.determinant;
                let mut e = 0.0;
                for (al, eps) in modes.energies.iter().enumerate() {
                    let s = if pattern >> al & 1 == 1 { 1.0 } else { -1.0 };
                    sign *= -s;
                    e += 0.5 * s * eps;
                }
                let p = if sign > 0.0 { Parity::Even } else { Parity::Odd };
                if p == parity {
                    free.push(e);
                }
            }
            many_body.sort_by(|x, y| x.partial_cmp(y).unwrap());
            free.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(many_body.len(), free.len());
            for (x, y) in many_body.iter().zip(&free) {
                assert!((x - y).abs() < 1e-10, "{boundary:?} {parity:?}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn spectrum_matches_free_fermion_sums() {
        for sites in [2, 4, 6] {
            check_spectrum_equivalence(sites, Boundary::Open, sites as u64);
        }
        for sites in [4, 6] {
            check_spectrum_equivalence(sites, Boundary::Periodic, 10 + sites as u64);
        }
    }
}
