//! Quick invariant suite behind the `selftest` command.

use std::sync::Arc;

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::basis::{PauliString, SectorBasis, SpinState};
use crate::dynamics::{simulate, TimeGrid};
use crate::eigensolve::full_diagonalize;
use crate::ensemble::{run_sweep, Experiment, SweepPlan};
use crate::faf::Covariance;
use crate::freefermion::{
    aliom_operator, apply_gaussian_unitary, canonical_form, rotation_from_generator, QuadraticForm,
};
use crate::hamiltonian::{
    build_many_body, build_xx_quadratic, Boundary, DisorderRealization, ModelKind, ModelSpec, Parity,
};
use crate::interaction_decomp::decompose_realization;
use crate::lbit::{LBitModel, LBitSpec};
use crate::resonance::{r_observable, CatAnsatz};
use crate::rng::{stream_rng, Stream};
use crate::{Result, C64};

/// Tolerance shared by the invariant checks.
pub const CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Random normalized state on `basis`.
pub fn random_state<R: Rng + ?Sized>(basis: Arc<SectorBasis>, rng: &mut R) -> Result<SpinState> {
    let amps = (0..basis.dim())
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    SpinState::normalized(basis, amps)
}

fn faf_vector(psi: &SpinState, kmax: u32) -> Result<Vec<f64>> {
    Ok(Covariance::from_state(psi)?
        .faf_orders(kmax)?
        .iter()
        .map(|v| v.value)
        .collect())
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Worst `|ΔF_k|`, `k ≤ 3`, between a random state and its image under a
/// random Gaussian unitary.
pub fn gaussian_invariance_defect(sites: usize, seed: u64) -> Result<f64> {
    let mut rng = stream_rng(seed, Stream::Trials);
    let psi = random_state(Arc::new(SectorBasis::full(sites)?), &mut rng)?;
    let k = QuadraticForm::random(sites, &mut rng);
    let rotated = apply_gaussian_unitary(&k, &psi)?;
    Ok(max_diff(&faf_vector(&psi, 3)?, &faf_vector(&rotated, 3)?))
}

/// Worst `|F_k(ψ⊗φ) − F_k(ψ) − F_k(φ)|`, `k ≤ 3`, for random `ψ`, `φ`.
///
/// Each factor is drawn in a random fixed-magnetization sector: the spin
/// tensor product is a fermionic product only for parity-definite factors.
pub fn additivity_defect(left_sites: usize, right_sites: usize, seed: u64) -> Result<f64> {
    let mut rng = stream_rng(seed, Stream::Trials);
    let mut sector = |sites: usize| SectorBasis::new(sites, rng.random_range(0..=sites)).map(Arc::new);
    let (left, right) = (sector(left_sites)?, sector(right_sites)?);
    let psi = random_state(left, &mut rng)?;
    let phi = random_state(right, &mut rng)?;
    let joint = faf_vector(&SpinState::tensor(&psi, &phi)?, 3)?;
    let sum: Vec<f64> = faf_vector(&psi, 3)?
        .iter()
        .zip(faf_vector(&phi, 3)?)
        .map(|(a, b)| a + b)
        .collect();
    Ok(max_diff(&joint, &sum))
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match f() {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn below(value: f64, bound: f64) -> (bool, String) {
    (value < bound, format!("{value:.3e} (bound {bound:.0e})"))
}

/// Runs every check; never panics.
pub fn run() -> Report {
    let mut checks = Vec::new();

    checks.push(check("majorana anticommutation", || {
        let sites = 4;
        let gammas: Vec<PauliString> = (1..=2 * sites)
            .map(|m| PauliString::majorana(sites, m))
            .collect::<Result<_>>()?;
        let mut ok = true;
        for (a, ga) in gammas.iter().enumerate() {
            for (b, gb) in gammas.iter().enumerate() {
                let ab = ga.multiply(gb)?;
                let ba = gb.multiply(ga)?;
                let anticommute = ab.x_mask() == ba.x_mask()
                    && ab.z_mask() == ba.z_mask()
                    && (ab.phase() + ba.phase()).norm() < 1e-15;
                ok &= if a == b { ab.x_mask() == 0 && ab.z_mask() == 0 && ab.phase() == C64::new(1.0, 0.0) } else { anticommute };
            }
        }
        Ok((ok, format!("{} Majoranas", 2 * sites)))
    }));

    checks.push(check("covariance fast path matches reference", || {
        let mut rng = stream_rng(1, Stream::Trials);
        let mut worst = 0.0_f64;
        for _ in 0..4 {
            let psi = random_state(Arc::new(SectorBasis::full(5)?), &mut rng)?;
            let fast = Covariance::from_state(&psi)?;
            let slow = Covariance::from_state_naive(&psi)?;
            worst = worst.max((fast.matrix() - slow.matrix()).norm_max());
        }
        Ok((worst < 1e-12, format!("max |ΔM| = {worst:.3e}")))
    }));

    checks.push(check("faithfulness on free eigenstates", || {
        let sites = 8;
        let basis = Arc::new(SectorBasis::half_filling(sites)?);
        let h = DisorderRealization::sample(3.0, 2, sites)?;
        let spec = ModelSpec::new(ModelKind::Xx, sites, 0.0, 3.0, Boundary::Periodic);
        let eig = full_diagonalize(&build_many_body(&spec, &h, basis)?)?;
        let mut worst = 0.0_f64;
        for i in 0..eig.len() {
            worst = worst.max(Covariance::from_state(&eig.state(i)?)?.faf(1)?.value.abs());
        }
        Ok((worst < CHECK_TOL, format!("max F1 = {worst:.3e} over {} states", eig.len())))
    }));

    checks.push(check("gaussian invariance", || {
        let worst = (0..3)
            .map(|s| gaussian_invariance_defect(5, 100 + s))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(below(worst, CHECK_TOL))
    }));

    checks.push(check("covariance follows the orthogonal rotation", || {
        let mut rng = stream_rng(7, Stream::Trials);
        let psi = random_state(Arc::new(SectorBasis::full(4)?), &mut rng)?;
        let k = QuadraticForm::random(4, &mut rng);
        let g = rotation_from_generator(&k, 1.0)?;
        let predicted = Covariance::from_state(&psi)?.rotated(&g)?;
        let actual = Covariance::from_state(&apply_gaussian_unitary(&k, &psi)?)?;
        let d = (predicted.matrix() - actual.matrix()).norm_max();
        Ok((d < CHECK_TOL, format!("max |ΔM| = {d:.3e}")))
    }));

    checks.push(check("additivity", || {
        let worst = (0..3)
            .map(|s| additivity_defect(3, 3, 200 + s))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(below(worst, CHECK_TOL))
    }));

    checks.push(check("cat segments", || {
        let mut worst = 0.0_f64;
        for n in [4usize, 6, 8] {
            let psi = CatAnsatz::on_neel(12, 2, n).build()?;
            let f = faf_vector(&psi, 3)?;
            worst = worst
                .max(max_diff(&f, &[n as f64; 3]))
                .max((r_observable(&psi) - n as f64).abs());
        }
        let pair = faf_vector(&CatAnsatz::on_neel(12, 5, 2).build()?, 3)?;
        worst = worst.max(max_diff(&pair, &[0.0; 3]));
        Ok((worst < 1e-10, format!("max deviation {worst:.3e}")))
    }));

    checks.push(check("free-fermion spectrum", || {
        let sites = 6;
        let h = DisorderRealization::sample(2.0, 3, sites)?;
        let basis = Arc::new(SectorBasis::full(sites)?);
        let spec = ModelSpec::new(ModelKind::Xx, sites, 0.0, 2.0, Boundary::Open);
        let op = build_many_body(&spec, &h, basis)?;
        let mut many_body: Vec<f64> = op
            .to_dense()
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| crate::Error::Eigensolver(format!("{e:?}")))?;
        let modes = canonical_form(&build_xx_quadratic(&h, Boundary::Open, Parity::Even)?)?;
        let mut free: Vec<f64> = (0u32..1 << sites)
            .map(|p| {
                modes
                    .energies
                    .iter()
                    .enumerate()
                    .map(|(a, e)| if p >> a & 1 == 1 { 0.5 * e } else { -0.5 * e })
                    .sum()
            })
            .collect();
        many_body.sort_by(f64::total_cmp);
        free.sort_by(f64::total_cmp);
        let d = max_diff(&many_body, &free);
        Ok((d < 1e-10, format!("max level deviation {d:.3e}")))
    }));

    checks.push(check("mode operators commute with the free chain", || {
        let sites = 6;
        let h = DisorderRealization::sample(2.0, 4, sites)?;
        let basis = Arc::new(SectorBasis::full(sites)?);
        let spec = ModelSpec::new(ModelKind::Xx, sites, 0.0, 2.0, Boundary::Open);
        let hx = build_many_body(&spec, &h, basis.clone())?.to_dense();
        let modes = canonical_form(&build_xx_quadratic(&h, Boundary::Open, Parity::Even)?)?;
        let mut worst = 0.0_f64;
        for a in 0..sites {
            let q: Mat<c64> = aliom_operator(&modes, a, basis.clone())?.to_dense();
            worst = worst.max((&q * &hx - &hx * &q).norm_max());
        }
        Ok((worst < 1e-10, format!("max |[Q, H]| = {worst:.3e}")))
    }));

    checks.push(check("quench conserves norm and energy", || {
        let sites = 8;
        let basis = Arc::new(SectorBasis::half_filling(sites)?);
        let h = DisorderRealization::sample(5.0, 5, sites)?;
        let spec = ModelSpec::new(ModelKind::Xxz, sites, 1.0, 5.0, Boundary::Open);
        let op = build_many_body(&spec, &h, basis.clone())?;
        let traj = simulate(&op, &SpinState::neel(basis)?, TimeGrid::default())?;
        let e0 = traj.energies[0];
        let de = traj.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        let dn = traj.norms.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
        let f0 = traj.faf_series(1)?.values[0].abs();
        Ok((de < 1e-10 && dn < 1e-10 && f0 < 1e-10, format!("|ΔE| {de:.1e}, |Δnorm| {dn:.1e}, F1(0) {f0:.1e}")))
    }));

    checks.push(check("free quench stays gaussian", || {
        let sites = 8;
        let basis = Arc::new(SectorBasis::half_filling(sites)?);
        let h = DisorderRealization::sample(5.0, 6, sites)?;
        let spec = ModelSpec::new(ModelKind::Xx, sites, 0.0, 5.0, Boundary::Open);
        let op = build_many_body(&spec, &h, basis.clone())?;
        let traj = simulate(&op, &SpinState::neel(basis)?, TimeGrid::default())?;
        let worst = traj.faf_series(1)?.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        Ok((worst < CHECK_TOL, format!("max F1 = {worst:.3e}")))
    }));

    checks.push(check("dressed l-bit model is isospectral", || {
        let spec = LBitSpec::with_sites(8);
        let h = spec.fields(9)?;
        let model = LBitModel::new(&spec, &h, Arc::new(SectorBasis::half_filling(8)?))?;
        let mut dressed = full_diagonalize(&model.physical_hamiltonian()?)?.eigenvalues().to_vec();
        let mut bare = model.energies.clone();
        dressed.sort_by(f64::total_cmp);
        bare.sort_by(f64::total_cmp);
        let d = max_diff(&dressed, &bare);
        Ok((d < 1e-10, format!("max level deviation {d:.3e}")))
    }));

    checks.push(check("interaction split is orthogonal", || {
        let h = DisorderRealization::sample(8.0, 10, 6)?;
        let spec = ModelSpec::new(ModelKind::Xxz, 6, 1.0, 8.0, Boundary::Open);
        let r = decompose_realization(&spec, &h)?;
        let d = r.pythagoras_defect();
        Ok((d < CHECK_TOL, format!("Pythagoras defect {d:.3e}")))
    }));

    checks.push(check("sweeps are worker-count independent", || {
        let plan = SweepPlan {
            experiment: Experiment::EigenFaf,
            sites: vec![6],
            disorder: vec![3.0],
            realizations: 4,
            seed: 3,
            ..SweepPlan::default()
        };
        let one = run_sweep(&plan, 1, |_| {})?;
        let three = run_sweep(&plan, 3, |_| {})?;
        Ok((one == three, format!("{} records", one.len())))
    }));

    Report { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        let report = run();
        for c in report.failures() {
            panic!("{}: {}", c.name, c.detail);
        }
        assert_eq!(report.checks.len(), 14);
    }
}
