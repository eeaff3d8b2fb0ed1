//! Dense exact diagonalization and mid-spectrum selection.

use std::sync::Arc;

use faer::{c64, Mat, Side};

use crate::basis::{SectorBasis, SpinState};
use crate::hamiltonian::SparseOperator;
use crate::{Error, Result, C64};

/// Largest dimension handed to the dense solver.
pub const MAX_DENSE_DIM: usize = 4000;

/// Eigenvalue gaps below this mark a pair as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-12;

/// Eigenvectors stored column-wise; real Hamiltonians keep real vectors.
#[derive(Debug, Clone)]
pub enum EigenVectors {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

impl EigenVectors {
    pub fn ncols(&self) -> usize {
        match self {
            EigenVectors::Real(m) => m.ncols(),
            EigenVectors::Complex(m) => m.ncols(),
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            EigenVectors::Real(m) => m.nrows(),
            EigenVectors::Complex(m) => m.nrows(),
        }
    }

    fn column(&self, j: usize) -> Vec<C64> {
        match self {
            EigenVectors::Real(m) => (0..m.nrows()).map(|i| C64::new(m[(i, j)], 0.0)).collect(),
            EigenVectors::Complex(m) => (0..m.nrows()).map(|i| m[(i, j)]).collect(),
        }
    }

    fn select(&self, cols: &[usize]) -> Self {
        match self {
            EigenVectors::Real(m) => {
                EigenVectors::Real(Mat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])]))
            }
            EigenVectors::Complex(m) => {
                EigenVectors::Complex(Mat::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])]))
            }
        }
    }
}

/// Selected eigenpairs of one Hamiltonian, ascending in energy.
#[derive(Debug, Clone)]
pub struct EigenpairSet {
    basis: Arc<SectorBasis>,
    eigenvalues: Vec<f64>,
    vectors: EigenVectors,
    /// Position of each pair in the full ascending spectrum.
    positions: Vec<usize>,
    /// Full spectrum, kept for gap and bandwidth queries.
    spectrum: Vec<f64>,
    center: f64,
}

impl EigenpairSet {
    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &EigenVectors {
        &self.vectors
    }

    /// Position of pair `i` in the full spectrum.
    pub fn position(&self, i: usize) -> usize {
        self.positions[i]
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `(E_min + E_max) / 2`.
    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.basis.dim()
    }

    pub fn amplitudes(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    pub fn state(&self, i: usize) -> Result<SpinState> {
        SpinState::normalized(self.basis.clone(), self.amplitudes(i))
    }

    /// Whether pair `i` lies within [`DEGENERACY_GAP`] of a neighbor in the
    /// full spectrum.
    pub fn is_degenerate(&self, i: usize) -> bool {
        let p = self.positions[i];
        let e = self.spectrum[p];
        (p > 0 && e - self.spectrum[p - 1] < DEGENERACY_GAP)
            || (p + 1 < self.spectrum.len() && self.spectrum[p + 1] - e < DEGENERACY_GAP)
    }

    /// Largest `‖H v − λ v‖` over the stored pairs.
    pub fn max_residual(&self, h: &SparseOperator) -> Result<f64> {
        let mut worst = 0.0_f64;
        for (i, &lambda) in self.eigenvalues.iter().enumerate() {
            let v = self.amplitudes(i);
            let hv = h.apply(&v)?;
            let r = hv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * lambda).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(r);
        }
        Ok(worst)
    }

    /// Largest entry of `|V†V − 1|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let cols: Vec<Vec<C64>> = (0..self.len()).map(|i| self.amplitudes(i)).collect();
        let mut worst = 0.0_f64;
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in cols.iter().enumerate().skip(i) {
                let dot: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).norm());
            }
        }
        worst
    }

    /// Keeps the pairs at the given local indices.
    pub fn subset(&self, keep: &[usize]) -> EigenpairSet {
        EigenpairSet {
            basis: self.basis.clone(),
            eigenvalues: keep.iter().map(|&i| self.eigenvalues[i]).collect(),
            vectors: self.vectors.select(keep),
            positions: keep.iter().map(|&i| self.positions[i]).collect(),
            spectrum: self.spectrum.clone(),
            center: self.center,
        }
    }
}

/// All eigenpairs of `h`.
pub fn full_diagonalize(h: &SparseOperator) -> Result<EigenpairSet> {
    let dim = h.dim();
    if dim > MAX_DENSE_DIM {
        return Err(Error::Capacity {
            what: "dense eigensolve dimension",
            value: dim,
            limit: MAX_DENSE_DIM,
        });
    }
    let (eigenvalues, vectors) = match h.to_dense_real() {
        Some(m) => {
            let e = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            let vals = (0..dim).map(|i| e.S().column_vector()[i]).collect::<Vec<_>>();
            (vals, EigenVectors::Real(e.U().to_owned()))
        }
        None => {
            let e = h
                .to_dense()
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
            let vals = (0..dim).map(|i| e.S().column_vector()[i].re).collect::<Vec<_>>();
            (vals, EigenVectors::Complex(e.U().to_owned()))
        }
    };
    let center = match (eigenvalues.first(), eigenvalues.last()) {
        (Some(a), Some(b)) => 0.5 * (a + b),
        _ => 0.0,
    };
    Ok(EigenpairSet {
        basis: h.basis().clone(),
        spectrum: eigenvalues.clone(),
        eigenvalues,
        vectors,
        positions: (0..dim).collect(),
        center,
    })
}

/// `max(1, min(100, N/20))` mid-spectrum states for a sector of dimension `N`.
pub fn default_mid_count(dim: usize) -> usize {
    (dim / 20).clamp(1, 100)
}

/// Indices of the `n_e` eigenvalues closest to `center`, ties toward lower
/// energy, returned in ascending order.
pub fn select_central(eigenvalues: &[f64], center: f64, n_e: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        let da = (eigenvalues[a] - center).abs();
        let db = (eigenvalues[b] - center).abs();
        da.total_cmp(&db).then(eigenvalues[a].total_cmp(&eigenvalues[b]))
    });
    let mut keep: Vec<usize> = order.into_iter().take(n_e).collect();
    keep.sort_unstable();
    keep
}

/// The `n_e` eigenpairs closest to the spectral center `(E_min + E_max)/2`.
pub fn mid_spectrum(h: &SparseOperator, n_e: usize) -> Result<EigenpairSet> {
    if n_e == 0 {
        return Err(Error::InvalidArgument("n_e must be at least 1".into()));
    }
    if n_e > h.dim() {
        return Err(Error::InvalidArgument(format!(
            "n_e = {n_e} exceeds the dimension {}",
            h.dim()
        )));
    }
    let full = full_diagonalize(h)?;
    let keep = select_central(full.eigenvalues(), full.center(), n_e);
    Ok(full.subset(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_many_body, Boundary, DisorderRealization, ModelKind, ModelSpec};

    fn xxz(sites: usize, w: f64, seed: u64) -> SparseOperator {
        let basis = Arc::new(SectorBasis::half_filling(sites).unwrap());
        let h = DisorderRealization::sample(w, seed, sites).unwrap();
        let spec = ModelSpec::new(ModelKind::Xxz, sites, 1.0, w, Boundary::Periodic);
        build_many_body(&spec, &h, basis).unwrap()
    }

    #[test]
    fn two_site_xx() {
        let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
        let h = DisorderRealization::from_fields(vec![0.0, 0.0]);
        let spec = ModelSpec::new(ModelKind::Xx, 2, 0.0, 0.0, Boundary::Open);
        let op = build_many_body(&spec, &h, basis).unwrap();
        let eig = full_diagonalize(&op).unwrap();
        assert!((eig.eigenvalues()[0] + 0.5).abs() < 1e-14);
        assert!((eig.eigenvalues()[1] - 0.5).abs() < 1e-14);
        assert!(eig.is_full());
    }

    #[test]
    fn residuals_trace_and_orthonormality() {
        let op = xxz(8, 3.0, 5);
        let eig = full_diagonalize(&op).unwrap();
        assert!(eig.max_residual(&op).unwrap() < 1e-9);
        assert!(eig.orthonormality_defect() < 1e-9);
        let tr: f64 = eig.eigenvalues().iter().sum();
        assert!((tr - op.trace().re).abs() < 1e-8);
        assert!(eig.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn mid_spectrum_selection() {
        let op = xxz(8, 2.0, 9);
        let dim = op.dim();
        assert_eq!(default_mid_count(924), 46);
        assert_eq!(default_mid_count(6), 1);
        let n_e = default_mid_count(dim);
        let mid = mid_spectrum(&op, n_e).unwrap();
        assert_eq!(mid.len(), n_e);
        let full = full_diagonalize(&op).unwrap();
        let c = full.center();
        let worst_in = mid.eigenvalues().iter().map(|e| (e - c).abs()).fold(0.0, f64::max);
        let best_out = (0..dim)
            .filter(|i| !(0..mid.len()).any(|j| mid.position(j) == *i))
            .map(|i| (full.eigenvalues()[i] - c).abs())
            .fold(f64::INFINITY, f64::min);
        assert!(worst_in <= best_out);
        assert!(mid.max_residual(&op).unwrap() < 1e-9);
        assert_eq!(mid_spectrum(&op, dim).unwrap().len(), dim);
        assert!(mid_spectrum(&op, dim + 1).is_err());
        assert!(mid_spectrum(&op, 0).is_err());
    }

    #[test]
    fn ties_break_toward_lower_energy() {
        let keep = select_central(&[-1.0, 0.0, 1.0, 3.0], 0.0, 2);
        assert_eq!(keep, vec![0, 1]);
    }

    #[test]
    fn capacity_cap() {
        let basis = Arc::new(SectorBasis::half_filling(14).unwrap());
        assert!(basis.dim() <= MAX_DENSE_DIM);
        let basis = Arc::new(SectorBasis::new(16, 8).unwrap());
        let op = SparseOperator::from_triplets(basis, vec![]);
        assert!(matches!(full_diagonalize(&op), Err(Error::Capacity { .. })));
    }

    #[test]
    fn degeneracy_flag() {
        // The clean XXZ ring has exact degeneracies.
        let op = xxz(4, 0.0, 0);
        let eig = full_diagonalize(&op).unwrap();
        let any = (0..eig.len()).any(|i| eig.is_degenerate(i));
        let spectrum = eig.spectrum();
        let real = spectrum.windows(2).any(|w| w[1] - w[0] < DEGENERACY_GAP);
        assert_eq!(any, real);
    }
}
