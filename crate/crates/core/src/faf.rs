//! Majorana covariance matrices and fermionic antiflatness.
//!
//! `M_mn = −i⟨γ_m γ_n⟩` for `m ≠ n` and `F_k = L − ½ tr[(MᵀM)^k]`. A pure
//! state is a fermionic Gaussian state iff `F_k = 0`.

use faer::{Mat, Side};

use crate::basis::{PauliString, SpinState};
use crate::freefermion::{antisymmetry_defect, gaussian_rotate_covariance, QuadraticForm};
use crate::{Error, Result, C64};

/// States whose norm differs from one by more than this are rejected.
pub const NORM_TOL: f64 = 1e-8;
/// Singular values above `1 + SINGULAR_TOL` make a covariance invalid.
pub const SINGULAR_TOL: f64 = 1e-8;

/// Real antisymmetric covariance matrix with singular values at most one.
#[derive(Debug, Clone)]
pub struct Covariance {
    matrix: Mat<f64>,
}

/// `F_k` for one order `k ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FafValue {
    pub k: u32,
    pub value: f64,
}

impl Covariance {
    /// Validates antisymmetry (`1e-10`) and the singular-value bound.
    pub fn new(matrix: Mat<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || n % 2 != 0 || n == 0 {
            return Err(Error::Shape(format!(
                "expected a square matrix of even size, got {}x{}",
                n,
                matrix.ncols()
            )));
        }
        let defect = antisymmetry_defect(&matrix);
        if defect > 1e-10 {
            return Err(Error::NotAntisymmetric(defect));
        }
        let c = Self { matrix };
        c.squared_singular_values()?;
        Ok(c)
    }

    /// Covariance of `psi`.
    ///
    /// Each site pair `i < l` is handled in one sweep: all four bilinears
    /// `γ_{2i−1|2i} γ_{2l−1|2l}` flip exactly sites `i` and `l` and differ
    /// only by per-configuration signs fixed by the two spins, so they follow
    /// from four partial sums.
    pub fn from_state(psi: &SpinState) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        let sites = psi.sites();
        let n = 2 * sites;
        let basis = psi.basis();
        let amps = psi.amplitudes();
        let mut m = Mat::<f64>::zeros(n, n);

        for (j, z) in psi.magnetization_profile().into_iter().enumerate() {
            m[(2 * j, 2 * j + 1)] = z;
            m[(2 * j + 1, 2 * j)] = -z;
        }

        let majoranas: Vec<PauliString> = (1..=n)
            .map(|k| PauliString::majorana(sites, k))
            .collect::<Result<_>>()?;
        for i in 0..sites {
            for l in i + 1..sites {
                let flip = 1 << i | 1 << l;
                let between = ((1u32 << l) - 1) & !((1u32 << (i + 1)) - 1);
                // sums[b_i][b_l] = Σ conj(ψ(b ⊕ flip)) ψ(b) (−1)^{#down in between}
                let mut sums = [[C64::new(0.0, 0.0); 2]; 2];
                for (&c, &a) in basis.states().iter().zip(amps) {
                    if a.norm_sqr() == 0.0 {
                        continue;
                    }
                    if let Some(t) = basis.index_of(c ^ flip) {
                        let mut p = amps[t].conj() * a;
                        if (between & !c).count_ones() % 2 == 1 {
                            p = -p;
                        }
                        sums[(c >> i & 1) as usize][(c >> l & 1) as usize] += p;
                    }
                }
                for a in [2 * i, 2 * i + 1] {
                    for b in [2 * l, 2 * l + 1] {
                        let s = majoranas[a] * majoranas[b];
                        let z = s.z_mask();
                        let base = crate::basis::i_pow(
                            s.phase_exponent() as u32 + (s.x_mask() & z).count_ones(),
                        );
                        let mut acc = C64::new(0.0, 0.0);
                        for (bi, row) in sums.iter().enumerate() {
                            for (bl, &v) in row.iter().enumerate() {
                                let mut sign = 1.0;
                                if z >> i & 1 == 1 && bi == 0 {
                                    sign = -sign;
                                }
                                if z >> l & 1 == 1 && bl == 0 {
                                    sign = -sign;
                                }
                                acc += v * sign;
                            }
                        }
                        // M = −i⟨γ_a γ_b⟩, real for any state.
                        let val = (C64::new(0.0, -1.0) * base * acc).re;
                        m[(a, b)] = val;
                        m[(b, a)] = -val;
                    }
                }
            }
        }
        Ok(Self { matrix: m })
    }

    /// Covariance from one `string_expectation` per bilinear; slow reference.
    pub fn from_state_naive(psi: &SpinState) -> Result<Self> {
        let sites = psi.sites();
        let n = 2 * sites;
        let mut m = Mat::<f64>::zeros(n, n);
        for a in 0..n {
            for b in a + 1..n {
                let s = PauliString::majorana(sites, a + 1)? * PauliString::majorana(sites, b + 1)?;
                let v = crate::basis::string_expectation(&s, psi)?;
                let val = (C64::new(0.0, -1.0) * v).re;
                m[(a, b)] = val;
                m[(b, a)] = -val;
            }
        }
        Ok(Self { matrix: m })
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    pub fn sites(&self) -> usize {
        self.matrix.nrows() / 2
    }

    pub fn as_form(&self) -> QuadraticForm {
        QuadraticForm::new(self.matrix.clone()).expect("covariance is antisymmetric")
    }

    /// `G M Gᵀ` for orthogonal `G`.
    pub fn rotated(&self, g: &Mat<f64>) -> Result<Covariance> {
        let form = gaussian_rotate_covariance(&self.as_form(), g)?;
        Ok(Self {
            matrix: form.into_matrix(),
        })
    }

    /// Eigenvalues of `MᵀM` (each squared singular value), clamped to
    /// `[0, 1]` within tolerance.
    pub fn squared_singular_values(&self) -> Result<Vec<f64>> {
        let mtm = self.matrix.transpose() * &self.matrix;
        let ev = mtm
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
        ev.into_iter()
            .map(|x| {
                if x > 1.0 + 2.0 * SINGULAR_TOL {
                    Err(Error::InvalidCovariance(x.sqrt()))
                } else {
                    Ok(x.clamp(0.0, 1.0))
                }
            })
            .collect()
    }

    /// `F_k = L − ½ Σ_i s_i^{2k}`.
    pub fn faf(&self, k: u32) -> Result<FafValue> {
        Ok(self.faf_orders(k)?.pop().expect("k ≥ 1"))
    }

    /// `F_1, …, F_kmax` from one eigensolve.
    pub fn faf_orders(&self, kmax: u32) -> Result<Vec<FafValue>> {
        if kmax == 0 {
            return Err(Error::InvalidArgument("FAF order must be at least 1".into()));
        }
        let s2 = self.squared_singular_values()?;
        let l = self.sites() as f64;
        Ok((1..=kmax)
            .map(|k| FafValue {
                k,
                value: l - 0.5 * s2.iter().map(|x| x.powi(k as i32)).sum::<f64>(),
            })
            .collect())
    }

    /// `L − Σ_{m<n} M_mn²`, equal to `F_1`.
    pub fn faf1_sum_form(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut s = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                s += self.matrix[(a, b)].powi(2);
            }
        }
        self.sites() as f64 - s
    }

    /// `⟨σᶻ_j⟩ = M_{2j−1,2j}` for every site.
    pub fn onsite_z(&self) -> Vec<f64> {
        (0..self.sites())
            .map(|j| self.matrix[(2 * j, 2 * j + 1)])
            .collect()
    }

    /// `|⟨γ_m γ_n⟩|² = M_mn²` (0-based indices).
    pub fn correlator_sq(&self, m: usize, n: usize) -> f64 {
        self.matrix[(m, n)].powi(2)
    }
}

/// `F_k(ψ)`.
pub fn faf(psi: &SpinState, k: u32) -> Result<FafValue> {
    Covariance::from_state(psi)?.faf(k)
}

/// `F_k` of a covariance matrix.
pub fn faf_from_covariance(m: &Covariance, k: u32) -> Result<FafValue> {
    m.faf(k)
}
