//! Quadratic Majorana forms, their normal modes and Gaussian rotations.
//!
//! A real antisymmetric `A` stands for `Â = (i/4) Σ_{mn} A_mn γ_m γ_n`. An
//! orthogonal `G` with `G A Gᵀ = ⊕_α [[0, ε_α], [−ε_α, 0]]` rewrites it as
//! `Â = Σ_α ε_α Q_α` where `Q_α = (i/2) γ̃_{2α−1} γ̃_{2α}`, `γ̃ = G γ`, has
//! eigenvalues `±½`.

use std::sync::Arc;

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::basis::{PauliString, SectorBasis, SpinState};
use crate::hamiltonian::SparseOperator;
use crate::{Error, Result, C64};

/// Antisymmetry tolerance relative to the largest entry.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;
/// Orthogonality tolerance for rotations.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
/// Mode energies closer than this are reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Real antisymmetric `2L × 2L` matrix.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    matrix: Mat<f64>,
}

impl QuadraticForm {
    pub fn new(matrix: Mat<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || n % 2 != 0 || n == 0 {
            return Err(Error::Shape(format!(
                "expected a square matrix of even size, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        let scale = max_abs(&matrix).max(1.0);
        let defect = antisymmetry_defect(&matrix);
        if defect > ANTISYMMETRY_TOL * scale {
            return Err(Error::NotAntisymmetric(defect));
        }
        Ok(Self { matrix })
    }

    pub fn zeros(sites: usize) -> Self {
        Self {
            matrix: Mat::zeros(2 * sites, 2 * sites),
        }
    }

    /// Entries `K_mn = −K_nm` with `K_mn` standard normal for `m < n`.
    pub fn random<R: Rng + ?Sized>(sites: usize, rng: &mut R) -> Self {
        let n = 2 * sites;
        let mut m = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.sample(StandardNormal);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        Self { matrix: m }
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn sites(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * faer::Scale(s),
        }
    }
}

pub(crate) fn max_abs(m: &Mat<f64>) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].abs());
        }
    }
    best
}

pub(crate) fn antisymmetry_defect(m: &Mat<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] + m[(j, i)]).abs());
        }
    }
    worst
}

/// Largest entry of `|G Gᵀ − 1|`.
pub fn orthogonality_defect(g: &Mat<f64>) -> f64 {
    let n = g.nrows();
    let ggt = g * g.transpose();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((ggt[(i, j)] - want).abs());
        }
    }
    worst
}

/// Canonical rotation of a quadratic form.
#[derive(Debug, Clone)]
pub struct NormalModes {
    /// Orthogonal `G`; row `2α` and `2α+1` define mode `α` (0-based).
    pub rotation: Mat<f64>,
    /// `ε_α ≥ 0`, nonincreasing.
    pub energies: Vec<f64>,
    /// `det G`; `−1` only when no zero mode is available to absorb the sign.
    pub determinant: f64,
    /// Two mode energies coincide within [`DEGENERACY_TOL`].
    pub degenerate: bool,
}

impl NormalModes {
    pub fn sites(&self) -> usize {
        self.energies.len()
    }

    /// `G A Gᵀ`.
    pub fn rotate(&self, a: &QuadraticForm) -> Mat<f64> {
        &self.rotation * a.matrix() * self.rotation.transpose()
    }

    /// Canonical block matrix `⊕ [[0, ε], [−ε, 0]]`.
    pub fn canonical_matrix(&self) -> Mat<f64> {
        let n = 2 * self.sites();
        let mut m = Mat::<f64>::zeros(n, n);
        for (a, &e) in self.energies.iter().enumerate() {
            m[(2 * a, 2 * a + 1)] = e;
            m[(2 * a + 1, 2 * a)] = -e;
        }
        m
    }

    /// Weight of mode `alpha` on each site, summing to 1.
    pub fn mode_profile(&self, alpha: usize) -> Vec<f64> {
        (0..self.sites())
            .map(|j| {
                let mut w = 0.0;
                for r in [2 * alpha, 2 * alpha + 1] {
                    for c in [2 * j, 2 * j + 1] {
                        w += self.rotation[(r, c)].powi(2);
                    }
                }
                w / 2.0
            })
            .collect()
    }

    /// Antisymmetric `K` with `Q_α = (i/4) Σ K_mn γ_m γ_n`.
    pub fn mode_generator(&self, alpha: usize) -> QuadraticForm {
        let n = 2 * self.sites();
        let (a, b) = (2 * alpha, 2 * alpha + 1);
        let g = &self.rotation;
        let matrix = Mat::from_fn(n, n, |m, k| g[(a, m)] * g[(b, k)] - g[(a, k)] * g[(b, m)]);
        QuadraticForm { matrix }
    }

    /// `⟨Q_α⟩ = −½ (G M Gᵀ)_{2α−1, 2α}` for every mode.
    pub fn mode_expectations(&self, covariance: &Mat<f64>) -> Vec<f64> {
        let rotated = &self.rotation * covariance * self.rotation.transpose();
        (0..self.sites())
            .map(|a| -0.5 * rotated[(2 * a, 2 * a + 1)])
            .collect()
    }
}

/// Orthogonal block reduction of `a`.
///
/// Blocks are sorted by nonincreasing `ε`; each nonzero block is fixed by
/// requiring the first largest-modulus entry of its complex eigenvector of
/// `iA` to be positive imaginary. Zero modes are spanned by Gram–Schmidt on
/// the projected unit vectors `e_1, e_2, …`.
pub fn canonical_form(a: &QuadraticForm) -> Result<NormalModes> {
    let n = a.dim();
    let scale = max_abs(a.matrix()).max(1.0);
    let ia = Mat::<c64>::from_fn(n, n, |i, j| c64::new(0.0, a.matrix()[(i, j)]));
    let eig = ia
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let lambdas: Vec<f64> = (0..n).map(|i| eig.S().column_vector()[i].re).collect();
    let vecs = eig.U();
    let zero_tol = 1e-11 * scale * n as f64;

    let mut g = Mat::<f64>::zeros(n, n);
    let mut energies = Vec::with_capacity(n / 2);
    let positive: Vec<usize> = (0..n).rev().filter(|&i| lambdas[i] > zero_tol).collect();
    let positive = &positive[..positive.len().min(n / 2)];
    for (block, &col) in positive.iter().enumerate() {
        let v: Vec<c64> = (0..n).map(|i| vecs[(i, col)]).collect();
        let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let k = v
            .iter()
            .position(|z| z.norm() >= peak * (1.0 - 1e-10))
            .expect("nonzero eigenvector");
        // Rotate so v_k = +i|v_k|.
        let phase = c64::new(0.0, 1.0) * v[k].conj() / v[k].norm();
        for (i, z) in v.iter().enumerate() {
            let w = z * phase;
            g[(2 * block, i)] = std::f64::consts::SQRT_2 * w.im;
            g[(2 * block + 1, i)] = std::f64::consts::SQRT_2 * w.re;
        }
        energies.push(lambdas[col]);
    }

    let filled = 2 * positive.len();
    if filled < n {
        let kernel: Vec<usize> = (0..n).filter(|&i| lambdas[i].abs() <= zero_tol).collect();
        // Real projector onto the kernel; the kernel of a real matrix is
        // closed under conjugation so V V† is real.
        let mut proj = Mat::<f64>::zeros(n, n);
        for &col in &kernel {
            for i in 0..n {
                for j in 0..n {
                    proj[(i, j)] += (vecs[(i, col)] * vecs[(j, col)].conj()).re;
                }
            }
        }
        let mut row = filled;
        for e in 0..n {
            if row == n {
                break;
            }
            let mut w: Vec<f64> = (0..n).map(|i| proj[(i, e)]).collect();
            for r in 0..row {
                let dot: f64 = (0..n).map(|i| g[(r, i)] * w[i]).sum();
                for (i, wi) in w.iter_mut().enumerate() {
                    *wi -= dot * g[(r, i)];
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for (i, wi) in w.iter().enumerate() {
                    g[(row, i)] = wi / norm;
                }
                row += 1;
            }
        }
        if row < n {
            return Err(Error::Eigensolver(
                "could not complete the zero-mode basis".into(),
            ));
        }
        energies.resize(n / 2, 0.0);
    }

    let mut determinant = g.determinant();
    if determinant < 0.0 && filled < n {
        for i in 0..n {
            let t = g[(n - 2, i)];
            g[(n - 2, i)] = g[(n - 1, i)];
            g[(n - 1, i)] = t;
        }
        determinant = -determinant;
    }
    let degenerate = energies
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() < DEGENERACY_TOL);
    Ok(NormalModes {
        rotation: g,
        energies,
        determinant: determinant.signum(),
        degenerate,
    })
}

/// `(i/4) Σ_{mn} K_mn γ_m γ_n` as an operator on `basis`.
///
/// Bilinears that leave a fixed-magnetization sector are projected out, which
/// is exact whenever the form conserves particle number.
pub fn bilinear_operator(k: &QuadraticForm, basis: Arc<SectorBasis>) -> Result<SparseOperator> {
    let sites = basis.sites();
    if k.sites() != sites {
        return Err(Error::Shape(format!(
            "form on {} sites, basis on {sites}",
            k.sites()
        )));
    }
    let majoranas: Vec<PauliString> = (1..=2 * sites)
        .map(|m| PauliString::majorana(sites, m))
        .collect::<Result<_>>()?;
    let n = 2 * sites;
    let mut triplets = Vec::new();
    for m in 0..n {
        for q in m + 1..n {
            let coeff = k.matrix()[(m, q)];
            if coeff == 0.0 {
                continue;
            }
            let s = majoranas[m] * majoranas[q];
            if basis.n_up().is_some() && s.flip_count() % 2 == 1 {
                continue;
            }
            // (i/4)(K_mq γ_mγ_q + K_qm γ_qγ_m) = (i/2) K_mq γ_mγ_q.
            let c = C64::new(0.0, 0.5 * coeff);
            for (col, &cfg) in basis.states().iter().enumerate() {
                if let Some(row) = basis.index_of(cfg ^ s.x_mask()) {
                    triplets.push((row as u32, col as u32, c * s.factor(cfg)));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis, triplets))
}

/// Mode operator `Q_α` (0-based `alpha`) on `basis`.
pub fn aliom_operator(
    modes: &NormalModes,
    alpha: usize,
    basis: Arc<SectorBasis>,
) -> Result<SparseOperator> {
    if alpha >= modes.sites() {
        return Err(Error::InvalidArgument(format!(
            "mode {alpha} out of range for {} modes",
            modes.sites()
        )));
    }
    bilinear_operator(&modes.mode_generator(alpha), basis)
}

/// Simultaneous eigenbasis of all `Q_α` on `basis`, each state paired with
/// its occupation pattern (`true` ⇔ `Q_α = +½`).
pub fn anderson_basis(
    modes: &NormalModes,
    basis: Arc<SectorBasis>,
) -> Result<Vec<(Vec<bool>, SpinState)>> {
    if modes.degenerate {
        return Err(Error::DegenerateModes(
            "mode energies coincide; the occupation basis is ambiguous".into(),
        ));
    }
    let sites = modes.sites();
    let dim = basis.dim();
    // Σ 2^α Q_α has eigenvalue Σ 2^α s_α / 2 with s_α = ±1, a distinct
    // half-integer for every sign pattern.
    let mut probe = Mat::<c64>::zeros(dim, dim);
    for alpha in 0..sites {
        let q = aliom_operator(modes, alpha, basis.clone())?;
        let w = (1u64 << alpha) as f64;
        for &(r, c, v) in q.entries() {
            probe[(r as usize, c as usize)] += v * w;
        }
    }
    let eig = probe
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let offset = ((1u64 << sites) - 1) as f64 / 2.0;
    let mut out = Vec::with_capacity(dim);
    for col in 0..dim {
        let lambda = eig.S().column_vector()[col].re;
        let code = (lambda + offset).round();
        if (lambda + offset - code).abs() > 1e-6 || code < 0.0 {
            return Err(Error::Eigensolver(format!(
                "mode eigenvalue {lambda} is not a sign pattern"
            )));
        }
        let code = code as u64;
        let occupation = (0..sites).map(|a| code >> a & 1 == 1).collect();
        let amps = (0..dim).map(|i| eig.U()[(i, col)]).collect();
        out.push((occupation, SpinState::normalized(basis.clone(), amps)?));
    }
    Ok(out)
}

/// The Anderson eigenstate with the given mode occupations.
pub fn anderson_eigenstate(
    modes: &NormalModes,
    occupation: &[bool],
    basis: Arc<SectorBasis>,
) -> Result<SpinState> {
    if occupation.len() != modes.sites() {
        return Err(Error::Shape(format!(
            "{} occupation bits for {} modes",
            occupation.len(),
            modes.sites()
        )));
    }
    anderson_basis(modes, basis)?
        .into_iter()
        .find(|(occ, _)| occ == occupation)
        .map(|(_, s)| s)
        .ok_or_else(|| {
            Error::InvalidArgument("occupation pattern does not lie in this sector".into())
        })
}

/// `G M Gᵀ`.
pub fn gaussian_rotate_covariance(m: &QuadraticForm, g: &Mat<f64>) -> Result<QuadraticForm> {
    if g.nrows() != m.dim() || g.ncols() != m.dim() {
        return Err(Error::Shape(format!(
            "{}x{} rotation for a {}x{} covariance",
            g.nrows(),
            g.ncols(),
            m.dim(),
            m.dim()
        )));
    }
    let defect = orthogonality_defect(g);
    if defect > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(defect));
    }
    let mut out = g * m.matrix() * g.transpose();
    // Restore exact antisymmetry lost to rounding.
    let n = out.nrows();
    for i in 0..n {
        out[(i, i)] = 0.0;
        for j in i + 1..n {
            let v = 0.5 * (out[(i, j)] - out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = -v;
        }
    }
    Ok(QuadraticForm { matrix: out })
}

/// `exp(−i K̂) |ψ⟩` with `K̂ = (i/4) Σ K_mn γ_m γ_n`, computed densely in the
/// full `2^L` space (the result need not conserve magnetization).
pub fn apply_gaussian_unitary(k: &QuadraticForm, psi: &SpinState) -> Result<SpinState> {
    let psi = psi.embed_full()?;
    let op = bilinear_operator(k, psi.basis().clone())?.to_dense();
    let eig = op
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let u = eig.U();
    let dim = psi.basis().dim();
    let coeffs: Vec<C64> = (0..dim)
        .map(|c| {
            let l = eig.S().column_vector()[c].re;
            let overlap: C64 = (0..dim).map(|i| u[(i, c)].conj() * psi.amplitudes()[i]).sum();
            overlap * C64::new(l.cos(), -l.sin())
        })
        .collect();
    let amps = (0..dim)
        .map(|i| (0..dim).map(|c| u[(i, c)] * coeffs[c]).sum())
        .collect();
    SpinState::normalized(psi.basis().clone(), amps)
}

/// `exp(s K)` for antisymmetric `K`.
///
/// With `K̂ = (i/4) Σ K_mn γ_m γ_n` and `U = exp(−i K̂)`, Majoranas transform
/// as `U† γ_m U = Σ_n exp(K)_mn γ_n`, so a state's covariance maps to
/// `exp(K) M exp(K)ᵀ`.
pub fn rotation_from_generator(k: &QuadraticForm, s: f64) -> Result<Mat<f64>> {
    let n = k.dim();
    let ik = Mat::<c64>::from_fn(n, n, |i, j| c64::new(0.0, k.matrix()[(i, j)]));
    let eig = ik
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    // K = −i V Λ V†, exp(sK) = V exp(−isΛ) V†.
    let u = eig.U();
    let phases: Vec<c64> = (0..n)
        .map(|i| {
            let l = eig.S().column_vector()[i].re;
            c64::new((s * l).cos(), -(s * l).sin())
        })
        .collect();
    Ok(Mat::from_fn(n, n, |i, j| {
        (0..n)
            .map(|c| (u[(i, c)] * phases[c] * u[(j, c)].conj()).re)
            .sum()
    }))
}
