//! Phenomenological l-bit model: a diagonal Hamiltonian in the τᶻ operators,
//! dressed into the physical σᶻ basis by a shallow magnetization-conserving
//! brickwork circuit.

use std::sync::Arc;

use faer::{c64, Mat};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::basis::{Config, SectorBasis, SpinState};
use crate::dynamics::{TimeGrid, TimeSeries, Trajectory};
use crate::hamiltonian::{DisorderRealization, SparseOperator};
use crate::rng::{stream_rng, Stream};
use crate::{Error, Result, C64};

/// How the prefactor `u_ij` of `J_ij = J₀ u_ij e^{−|i−j|/ξ′}` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingLaw {
    /// `u_ij = ±U[0.5, 1.5]` with a random sign.
    Random,
    /// `u_ij = 1`.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LBitSpec {
    pub sites: usize,
    pub j0: f64,
    pub xi_prime: f64,
    pub lambda: f64,
    /// Gate rotation scale.
    pub f: f64,
    /// Brickwork depth `D_u`.
    pub depth: usize,
    pub include_three_body: bool,
    /// Width of the uniform field distribution `[−W, W]`.
    pub disorder: f64,
    pub couplings: CouplingLaw,
}

impl Default for LBitSpec {
    fn default() -> Self {
        Self {
            sites: 12,
            j0: 1.0,
            xi_prime: 0.5,
            lambda: 1.0,
            f: 1.0,
            depth: 2,
            include_three_body: false,
            disorder: 2.5,
            couplings: CouplingLaw::Random,
        }
    }
}

impl LBitSpec {
    pub fn with_sites(sites: usize) -> Self {
        Self {
            sites,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi_prime > 0.0) {
            return Err(Error::InvalidArgument(format!("ξ′ must be positive, got {}", self.xi_prime)));
        }
        if self.depth == 0 {
            return Err(Error::InvalidArgument("circuit depth must be at least 1".into()));
        }
        if self.sites < 2 || self.sites > crate::basis::MAX_SITES {
            return Err(Error::Capacity {
                what: "l-bit sites",
                value: self.sites,
                limit: crate::basis::MAX_SITES,
            });
        }
        if !(self.disorder >= 0.0 && self.disorder.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l-bit disorder must be finite and non-negative, got {}",
                self.disorder
            )));
        }
        Ok(())
    }

    /// Disorder fields for realization `seed`.
    pub fn fields(&self, seed: u64) -> Result<DisorderRealization> {
        DisorderRealization::sample(self.disorder, seed, self.sites)
    }
}

/// Pair couplings `J_ij`, stored for `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    sites: usize,
    values: Vec<f64>,
}

impl Couplings {
    pub fn sample(spec: &LBitSpec, seed: u64) -> Self {
        let n = spec.sites;
        let mut rng = stream_rng(seed, Stream::Couplings);
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let u = match spec.couplings {
                    CouplingLaw::Deterministic => 1.0,
                    CouplingLaw::Random => {
                        let magnitude = rng.random_range(0.5..1.5);
                        if rng.random::<bool>() {
                            magnitude
                        } else {
                            -magnitude
                        }
                    }
                };
                values[i * n + j] = spec.j0 * u * (-((j - i) as f64) / spec.xi_prime).exp();
            }
        }
        Self { sites: n, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.values[a * self.sites + b]
    }
}

/// Diagonal energies `E(z) = Σ h_i s_i + λ Σ_{i<j} J_ij s_i s_j (+ λ Σ J_ijk s_i s_j s_k)`
/// with `s = ±1`, one per basis state.
pub fn lbit_energies(
    spec: &LBitSpec,
    h: &DisorderRealization,
    couplings: &Couplings,
    basis: &SectorBasis,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if h.sites() != spec.sites || basis.sites() != spec.sites {
        return Err(Error::Shape(format!(
            "l-bit model on {} sites got {} fields and a {}-site basis",
            spec.sites,
            h.sites(),
            basis.sites()
        )));
    }
    let n = spec.sites;
    let spin = |c: Config, i: usize| if c >> i & 1 == 1 { 1.0 } else { -1.0 };
    Ok(basis
        .states()
        .iter()
        .map(|&c| {
            let field: f64 = (0..n).map(|i| h.fields[i] * spin(c, i)).sum();
            let mut pair = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    pair += couplings.get(i, j) * spin(c, i) * spin(c, j);
                }
            }
            let mut triple = 0.0;
            if spec.include_three_body {
                for i in 0..n {
                    for j in i + 1..n {
                        for k in j + 1..n {
                            triple += spec.j0
                                * (-((k - i) as f64) / spec.xi_prime).exp()
                                * spin(c, i)
                                * spin(c, j)
                                * spin(c, k);
                        }
                    }
                }
            }
            field + spec.lambda * (pair + triple)
        })
        .collect())
}

/// Diagonal l-bit Hamiltonian on `basis`.
pub fn build_lbit_diagonal(
    spec: &LBitSpec,
    h: &DisorderRealization,
    basis: Arc<SectorBasis>,
) -> Result<SparseOperator> {
    let couplings = Couplings::sample(spec, h.seed);
    let energies = lbit_energies(spec, h, &couplings, &basis)?;
    let triplets = energies
        .iter()
        .enumerate()
        .map(|(i, &e)| (i as u32, i as u32, C64::new(e, 0.0)))
        .collect();
    Ok(SparseOperator::from_triplets(basis, triplets))
}

/// Two-site gate `exp(−i f w Γ)` on sites `(site, site + 1)`.
///
/// In the local order `↓↓, ↑↓, ↓↑, ↑↑` (lower site first) the gate is
/// diagonal on `↓↓` and `↑↑` and a 2×2 unitary on the middle block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub site: usize,
    pub theta: [f64; 3],
    pub c: C64,
    pub weight: f64,
    down_down: C64,
    up_up: C64,
    block: [[C64; 2]; 2],
}

impl Gate {
    pub fn new(site: usize, theta: [f64; 3], c: C64, weight: f64, f: f64, lambda: f64) -> Self {
        let [t1, t2, t3] = theta;
        let tau = f * weight;
        let phase = |e: f64| C64::new((tau * e).cos(), -(tau * e).sin());
        let a = -lambda * t3 / 2.0;
        let nz = (t1 - t2) / 2.0;
        let norm = (nz * nz + c.norm_sqr()).sqrt();
        let (cos, sinc) = if norm > 0.0 {
            ((tau * norm).cos(), (tau * norm).sin() / norm)
        } else {
            (1.0, tau)
        };
        let minus_i = C64::new(0.0, -1.0);
        let g = phase(a);
        let block = [
            [g * (C64::from(cos) + minus_i * sinc * nz), g * minus_i * sinc * c],
            [g * minus_i * sinc * c.conj(), g * (C64::from(cos) - minus_i * sinc * nz)],
        ];
        Self {
            site,
            theta,
            c,
            weight,
            down_down: phase((-t1 - t2 + lambda * t3) / 2.0),
            up_up: phase((t1 + t2 + lambda * t3) / 2.0),
            block,
        }
    }

    /// Dense 4×4 matrix in the local order `↓↓, ↑↓, ↓↑, ↑↑`.
    pub fn matrix(&self) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(4, 4);
        m[(0, 0)] = self.down_down;
        m[(3, 3)] = self.up_up;
        for r in 0..2 {
            for s in 0..2 {
                m[(1 + r, 1 + s)] = self.block[r][s];
            }
        }
        m
    }

    /// Applies the gate (or its adjoint) in place.
    pub fn apply(&self, basis: &SectorBasis, amplitudes: &mut [C64], adjoint: bool) {
        let lo: Config = 1 << self.site;
        let hi: Config = 1 << (self.site + 1);
        let conj = |z: C64| if adjoint { z.conj() } else { z };
        let block = if adjoint {
            [
                [self.block[0][0].conj(), self.block[1][0].conj()],
                [self.block[0][1].conj(), self.block[1][1].conj()],
            ]
        } else {
            self.block
        };
        for (idx, &c) in basis.states().iter().enumerate() {
            match (c & lo != 0, c & hi != 0) {
                (false, false) => amplitudes[idx] *= conj(self.down_down),
                (true, true) => amplitudes[idx] *= conj(self.up_up),
                (true, false) => {
                    let partner = basis
                        .index_of(c ^ lo ^ hi)
                        .expect("swap preserves magnetization");
                    let (x, y) = (amplitudes[idx], amplitudes[partner]);
                    amplitudes[idx] = block[0][0] * x + block[0][1] * y;
                    amplitudes[partner] = block[1][0] * x + block[1][1] * y;
                }
                (false, true) => {}
            }
        }
    }
}

/// Brickwork of [`Gate`]s: each layer acts on bonds starting at even sites,
/// then on bonds starting at odd sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DressingCircuit {
    pub sites: usize,
    pub depth: usize,
    pub gates: Vec<Gate>,
}

impl DressingCircuit {
    pub fn identity(sites: usize) -> Self {
        Self {
            sites,
            depth: 0,
            gates: Vec::new(),
        }
    }

    /// `ψ ← U_ℓ ψ`.
    pub fn apply(&self, psi: &SpinState) -> Result<SpinState> {
        self.check(psi)?;
        let mut amps = psi.amplitudes().to_vec();
        for g in &self.gates {
            g.apply(psi.basis(), &mut amps, false);
        }
        SpinState::from_normalized(psi.basis().clone(), amps)
    }

    /// `ψ ← U_ℓ† ψ`.
    pub fn apply_adjoint(&self, psi: &SpinState) -> Result<SpinState> {
        self.check(psi)?;
        let mut amps = psi.amplitudes().to_vec();
        for g in self.gates.iter().rev() {
            g.apply(psi.basis(), &mut amps, true);
        }
        SpinState::from_normalized(psi.basis().clone(), amps)
    }

    fn check(&self, psi: &SpinState) -> Result<()> {
        if psi.sites() != self.sites {
            return Err(Error::Shape(format!(
                "{}-site circuit applied to a {}-site state",
                self.sites,
                psi.sites()
            )));
        }
        Ok(())
    }

    /// Dense `U_ℓ` on `basis`.
    pub fn to_dense(&self, basis: &SectorBasis) -> Mat<c64> {
        let dim = basis.dim();
        let mut u = Mat::<c64>::zeros(dim, dim);
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            for g in &self.gates {
                g.apply(basis, &mut col, false);
            }
            for (i, z) in col.iter().enumerate() {
                u[(i, j)] = *z;
            }
        }
        u
    }
}

/// Draws the dressing circuit for the fields `h`; gate parameters come from
/// the circuit stream of `h.seed`.
pub fn build_dressing_circuit(spec: &LBitSpec, h: &DisorderRealization) -> Result<DressingCircuit> {
    spec.validate()?;
    if h.sites() != spec.sites {
        return Err(Error::Shape(format!(
            "{} fields for a {}-site circuit",
            h.sites(),
            spec.sites
        )));
    }
    let mut rng = stream_rng(h.seed, Stream::Circuit);
    let mut gates = Vec::new();
    for _ in 0..spec.depth {
        for start in [0, 1] {
            for site in (start..spec.sites - 1).step_by(2) {
                let mut normal = || rng.sample::<f64, _>(StandardNormal);
                let theta = [normal(), normal(), normal()];
                let c = C64::new(normal(), normal());
                let weight = (-2.0 * (h.fields[site] - h.fields[site + 1]).abs()).exp();
                gates.push(Gate::new(site, theta, c, weight, spec.f, spec.lambda));
            }
        }
    }
    Ok(DressingCircuit {
        sites: spec.sites,
        depth: spec.depth,
        gates,
    })
}

/// One realization of the dressed model.
#[derive(Debug, Clone)]
pub struct LBitModel {
    pub basis: Arc<SectorBasis>,
    pub energies: Vec<f64>,
    pub circuit: DressingCircuit,
}

impl LBitModel {
    pub fn new(spec: &LBitSpec, h: &DisorderRealization, basis: Arc<SectorBasis>) -> Result<Self> {
        let couplings = Couplings::sample(spec, h.seed);
        let energies = lbit_energies(spec, h, &couplings, &basis)?;
        let circuit = build_dressing_circuit(spec, h)?;
        Ok(Self {
            basis,
            energies,
            circuit,
        })
    }

    /// `H_phys = U_ℓ D U_ℓ†` as a dense-derived sparse operator.
    pub fn physical_hamiltonian(&self) -> Result<SparseOperator> {
        let u = self.circuit.to_dense(&self.basis);
        let dim = self.basis.dim();
        let scaled = Mat::<c64>::from_fn(dim, dim, |i, j| u[(i, j)] * self.energies[j]);
        let h = &scaled * u.adjoint();
        SparseOperator::from_dense(self.basis.clone(), &h, 1e-14)
    }

    /// `τᶻ_k = U_ℓ σᶻ_k U_ℓ†` expectation in `psi`.
    pub fn tau_z(&self, psi: &SpinState, k: usize) -> Result<f64> {
        let phi = self.circuit.apply_adjoint(psi)?;
        Ok(phi
            .amplitudes()
            .iter()
            .zip(self.basis.states())
            .map(|(a, &c)| if c >> k & 1 == 1 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `U_ℓ e^{−iDt} U_ℓ† ψ₀` on every grid time.
    pub fn evolve(&self, psi0: &SpinState, grid: &TimeGrid) -> Result<Vec<SpinState>> {
        let phi = self.circuit.apply_adjoint(psi0)?;
        grid.times()
            .iter()
            .map(|&t| {
                let amps = phi
                    .amplitudes()
                    .iter()
                    .zip(&self.energies)
                    .map(|(a, &e)| a * C64::new((e * t).cos(), -(e * t).sin()))
                    .collect();
                self.circuit
                    .apply(&SpinState::from_normalized(self.basis.clone(), amps)?)
            })
            .collect()
    }

    /// `⟨ψ|H_phys|ψ⟩` without building `H_phys`.
    pub fn energy(&self, psi: &SpinState) -> Result<f64> {
        let phi = self.circuit.apply_adjoint(psi)?;
        Ok(phi
            .amplitudes()
            .iter()
            .zip(&self.energies)
            .map(|(a, e)| a.norm_sqr() * e)
            .sum())
    }

    pub fn trajectory(&self, psi0: &SpinState, grid: TimeGrid) -> Result<Trajectory> {
        let states = self.evolve(psi0, &grid)?;
        Trajectory::from_states(grid, &states, |s| self.energy(s))
    }
}

/// Physical Hamiltonian of the realization `h`.
pub fn lbit_physical_hamiltonian(
    spec: &LBitSpec,
    h: &DisorderRealization,
    basis: Arc<SectorBasis>,
) -> Result<SparseOperator> {
    LBitModel::new(spec, h, basis)?.physical_hamiltonian()
}

/// `F_k(t)` of the Néel state under the dressed model, on the half-filling
/// sector.
pub fn lbit_faf_dynamics(spec: &LBitSpec, h: &DisorderRealization, grid: TimeGrid, k: u32) -> Result<TimeSeries> {
    let basis = Arc::new(SectorBasis::half_filling(spec.sites)?);
    let model = LBitModel::new(spec, h, basis.clone())?;
    let psi0 = SpinState::neel(basis)?;
    model.trajectory(&psi0, grid)?.faf_series(k)
}
