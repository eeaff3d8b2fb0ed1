//! Bit-encoded spin-1/2 bases, state vectors and Pauli strings.
//!
//! Site `j` of the chain (0-based in code) is bit `j` of a configuration word
//! and a set bit is an up spin, i.e. an eigenvalue `+1` of `σᶻ_j`. Sector
//! bases list every configuration with a fixed number of up spins in
//! increasing integer order.

use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

use crate::{Error, Result, C64};

/// Largest chain length a basis may describe.
pub const MAX_SITES: usize = 24;

/// Up to this many sites the configuration → index map is a dense table.
const TABLE_SITES: usize = 20;

const ABSENT: u32 = u32::MAX;

/// A spin configuration, one bit per site.
pub type Config = u32;

/// Mask with the lowest `sites` bits set.
#[inline]
pub fn site_mask(sites: usize) -> Config {
    if sites >= 32 {
        Config::MAX
    } else {
        (1 << sites) - 1
    }
}

/// `n` choose `k` in `u128` (exact for all sizes used here).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Ordered list of configurations spanning either one magnetization sector
/// or the full `2^L` space.
#[derive(Clone)]
pub struct SectorBasis {
    sites: usize,
    n_up: Option<usize>,
    states: Vec<Config>,
    table: Option<Vec<u32>>,
}

impl fmt::Debug for SectorBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SectorBasis")
            .field("sites", &self.sites)
            .field("n_up", &self.n_up)
            .field("dim", &self.states.len())
            .finish()
    }
}

impl PartialEq for SectorBasis {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites && self.n_up == other.n_up
    }
}

impl SectorBasis {
    /// Sector with exactly `n_up` up spins on `sites` sites.
    pub fn new(sites: usize, n_up: usize) -> Result<Self> {
        check_sites(sites)?;
        if n_up > sites {
            return Err(Error::InvalidArgument(format!(
                "n_up = {n_up} exceeds the number of sites {sites}"
            )));
        }
        let mut states = Vec::with_capacity(binomial(sites, n_up) as usize);
        if n_up == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks the fixed-popcount words in increasing order.
            let limit: u64 = 1 << sites;
            let mut c: u64 = (1 << n_up) - 1;
            while c < limit {
                states.push(c as Config);
                let lowest = c & c.wrapping_neg();
                let ripple = c + lowest;
                c = (((ripple ^ c) >> 2) / lowest) | ripple;
            }
        }
        Ok(Self::from_states(sites, Some(n_up), states))
    }

    /// Zero-magnetization sector, `n_up = L/2`.
    pub fn half_filling(sites: usize) -> Result<Self> {
        if sites % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "half filling needs an even number of sites, got {sites}"
            )));
        }
        Self::new(sites, sites / 2)
    }

    /// Unrestricted `2^L`-dimensional space.
    pub fn full(sites: usize) -> Result<Self> {
        check_sites(sites)?;
        let states = (0..(1u64 << sites)).map(|c| c as Config).collect();
        Ok(Self::from_states(sites, None, states))
    }

    fn from_states(sites: usize, n_up: Option<usize>, states: Vec<Config>) -> Self {
        let table = (sites <= TABLE_SITES).then(|| {
            let mut table = vec![ABSENT; 1 << sites];
            for (i, &c) in states.iter().enumerate() {
                table[c as usize] = i as u32;
            }
            table
        });
        Self {
            sites,
            n_up,
            states,
            table,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Number of up spins, `None` for the full space.
    pub fn n_up(&self) -> Option<usize> {
        self.n_up
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Config] {
        &self.states
    }

    pub fn state(&self, index: usize) -> Config {
        self.states[index]
    }

    #[inline]
    pub fn index_of(&self, config: Config) -> Option<usize> {
        match &self.table {
            Some(table) => match table.get(config as usize) {
                Some(&i) if i != ABSENT => Some(i as usize),
                _ => None,
            },
            None => self.states.binary_search(&config).ok(),
        }
    }

    /// Whether global spin flip maps the basis onto itself.
    pub fn is_flip_symmetric(&self) -> bool {
        match self.n_up {
            None => true,
            Some(n) => 2 * n == self.sites,
        }
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites == 0 {
        return Err(Error::InvalidArgument("a chain needs at least one site".into()));
    }
    if sites > MAX_SITES {
        return Err(Error::Capacity {
            what: "sites",
            value: sites,
            limit: MAX_SITES,
        });
    }
    Ok(())
}

/// Normalized amplitude vector over a [`SectorBasis`].
#[derive(Debug, Clone)]
pub struct SpinState {
    basis: Arc<SectorBasis>,
    amplitudes: Vec<C64>,
}

impl SpinState {
    /// Normalizes `amplitudes` and wraps them.
    pub fn normalized(basis: Arc<SectorBasis>, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotNormalized(norm));
        }
        let inv = 1.0 / norm;
        for a in &mut amplitudes {
            *a *= inv;
        }
        Ok(Self { basis, amplitudes })
    }

    /// Wraps amplitudes that are already normalized to within `1e-10`.
    pub fn from_normalized(basis: Arc<SectorBasis>, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dim()
            )));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { basis, amplitudes })
    }

    /// Computational basis state `|config⟩`.
    pub fn product(basis: Arc<SectorBasis>, config: Config) -> Result<Self> {
        let index = basis.index_of(config).ok_or_else(|| {
            Error::InvalidArgument(format!("configuration {config:#b} is not in the basis"))
        })?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { basis, amplitudes })
    }

    /// Néel state `|↑↓↑↓…⟩` (site 0 up).
    pub fn neel(basis: Arc<SectorBasis>) -> Result<Self> {
        Self::product(basis.clone(), neel_config(basis.sites()))
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn sites(&self) -> usize {
        self.basis.sites()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SpinState) -> Result<C64> {
        if *self.basis != *other.basis {
            return Err(Error::Shape("states live in different bases".into()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `⟨σᶻ_j⟩` for every site.
    pub fn magnetization_profile(&self) -> Vec<f64> {
        let mut profile = vec![0.0; self.sites()];
        for (&c, a) in self.basis.states().iter().zip(&self.amplitudes) {
            let p = a.norm_sqr();
            for (j, m) in profile.iter_mut().enumerate() {
                *m += if c >> j & 1 == 1 { p } else { -p };
            }
        }
        profile
    }

    /// `⟨σᶻ_i σᶻ_j⟩`.
    pub fn zz_expectation(&self, i: usize, j: usize) -> f64 {
        let mask = (1 << i) | (1 << j);
        self.basis
            .states()
            .iter()
            .zip(&self.amplitudes)
            .map(|(&c, a)| {
                let p = a.norm_sqr();
                if (c & mask).count_ones() == 1 {
                    -p
                } else {
                    p
                }
            })
            .sum()
    }

    /// The same state expressed in the full `2^L` basis.
    pub fn embed_full(&self) -> Result<SpinState> {
        if self.basis.n_up().is_none() {
            return Ok(self.clone());
        }
        let basis = Arc::new(SectorBasis::full(self.sites())?);
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        for (&c, &a) in self.basis.states().iter().zip(&self.amplitudes) {
            amplitudes[basis.index_of(c).expect("full basis holds every configuration")] = a;
        }
        Ok(Self { basis, amplitudes })
    }

    /// Image under the global spin flip `∏ σˣ_j`.
    pub fn spin_flipped(&self) -> Result<SpinState> {
        if !self.basis.is_flip_symmetric() {
            return Err(Error::InvalidArgument(
                "spin flip leaves the magnetization sector".into(),
            ));
        }
        let mask = site_mask(self.sites());
        let mut out = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        for (&c, &a) in self.basis.states().iter().zip(&self.amplitudes) {
            let i = self.basis.index_of(!c & mask).expect("flip-symmetric basis");
            out[i] = a;
        }
        Ok(Self {
            basis: self.basis.clone(),
            amplitudes: out,
        })
    }

    /// `|left⟩ ⊗ |right⟩` with `left` on the first sites of the combined chain.
    ///
    /// The result lives in the sector with the summed magnetization when both
    /// factors have one, otherwise in the full space.
    pub fn tensor(left: &SpinState, right: &SpinState) -> Result<SpinState> {
        let l1 = left.sites();
        let sites = l1 + right.sites();
        let basis = match (left.basis.n_up(), right.basis.n_up()) {
            (Some(a), Some(b)) => SectorBasis::new(sites, a + b)?,
            _ => SectorBasis::full(sites)?,
        };
        let basis = Arc::new(basis);
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        for (&cl, &al) in left.basis.states().iter().zip(&left.amplitudes) {
            for (&cr, &ar) in right.basis.states().iter().zip(&right.amplitudes) {
                let i = basis
                    .index_of(cl | cr << l1)
                    .expect("product configuration lies in the combined basis");
                amplitudes[i] = al * ar;
            }
        }
        Ok(Self { basis, amplitudes })
    }
}

/// Configuration of the Néel state `|↑↓↑↓…⟩`.
pub fn neel_config(sites: usize) -> Config {
    (0..sites).step_by(2).fold(0, |c, j| c | 1 << j)
}

/// Single-site Pauli operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// `self · other = i^k · result`.
    fn product(self, other: Pauli) -> (Pauli, u8) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (p, 0),
            (a, b) if a == b => (I, 0),
            (X, Y) => (Z, 1),
            (Y, X) => (Z, 3),
            (Y, Z) => (X, 1),
            (Z, Y) => (X, 3),
            (Z, X) => (Y, 1),
            (X, Z) => (Y, 3),
            _ => unreachable!(),
        }
    }

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `i^k` for `k ∈ {0,1,2,3}`.
#[inline]
pub fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Tensor product of single-site Paulis with a phase in `{±1, ±i}`.
///
/// Site `j` carries `X` when only bit `j` of `x` is set, `Z` when only bit `j`
/// of `z` is set and `Y` when both are.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    sites: usize,
    x: Config,
    z: Config,
    /// Phase exponent: the string carries `i^phase`.
    phase: u8,
}

impl PauliString {
    pub fn identity(sites: usize) -> Self {
        Self {
            sites,
            x: 0,
            z: 0,
            phase: 0,
        }
    }

    pub fn from_ops(ops: &[Pauli]) -> Self {
        let mut s = Self::identity(ops.len());
        for (j, op) in ops.iter().enumerate() {
            let (x, z) = op.bits();
            s.x |= (x as Config) << j;
            s.z |= (z as Config) << j;
        }
        s
    }

    /// Single operator `op` on `site`, identity elsewhere.
    pub fn single(sites: usize, site: usize, op: Pauli) -> Self {
        let mut ops = vec![Pauli::I; sites];
        ops[site] = op;
        Self::from_ops(&ops)
    }

    /// Jordan–Wigner Majorana `γ_m`, `m ∈ 1..=2L`:
    /// `γ_{2j−1} = (∏_{k<j} σᶻ_k) σˣ_j` and `γ_{2j} = (∏_{k<j} σᶻ_k) σʸ_j`.
    pub fn majorana(sites: usize, m: usize) -> Result<Self> {
        if m == 0 || m > 2 * sites {
            return Err(Error::InvalidArgument(format!(
                "Majorana index {m} outside 1..={}",
                2 * sites
            )));
        }
        let site = (m - 1) / 2;
        let string: Config = (1 << site) - 1;
        let x = 1 << site;
        let z = if m % 2 == 0 { string | x } else { string };
        Ok(Self {
            sites,
            x,
            z,
            phase: 0,
        })
    }

    pub fn with_phase(mut self, k: u8) -> Self {
        self.phase = (self.phase + k) % 4;
        self
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn x_mask(&self) -> Config {
        self.x
    }

    pub fn z_mask(&self) -> Config {
        self.z
    }

    /// Phase exponent `k` of `i^k`.
    pub fn phase_exponent(&self) -> u8 {
        self.phase
    }

    pub fn phase(&self) -> C64 {
        i_pow(self.phase as u32)
    }

    pub fn op(&self, site: usize) -> Pauli {
        Pauli::from_bits(self.x >> site & 1 == 1, self.z >> site & 1 == 1)
    }

    pub fn ops(&self) -> Vec<Pauli> {
        (0..self.sites).map(|j| self.op(j)).collect()
    }

    /// Hermitian iff the phase is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    /// Number of sites carrying `X` or `Y`.
    pub fn flip_count(&self) -> u32 {
        self.x.count_ones()
    }

    /// Sitewise product `self · other`.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        if self.sites != other.sites {
            return Err(Error::Shape(format!(
                "strings on {} and {} sites",
                self.sites, other.sites
            )));
        }
        let mut out = Self::identity(self.sites);
        let mut phase = self.phase as u32 + other.phase as u32;
        for j in 0..self.sites {
            let (p, k) = self.op(j).product(other.op(j));
            phase += k as u32;
            let (x, z) = p.bits();
            out.x |= (x as Config) << j;
            out.z |= (z as Config) << j;
        }
        out.phase = (phase % 4) as u8;
        Ok(out)
    }

    /// Matrix element factor: `s|b⟩ = factor(b) · |b ⊕ x⟩`.
    #[inline]
    pub fn factor(&self, config: Config) -> C64 {
        let y_count = (self.x & self.z).count_ones();
        let down_z = (self.z & !config & site_mask(self.sites)).count_ones();
        let k = self.phase as u32 + y_count + 2 * (down_z & 1);
        i_pow(k)
    }
}

impl Mul for PauliString {
    type Output = PauliString;

    fn mul(self, rhs: PauliString) -> PauliString {
        self.multiply(&rhs).expect("Pauli strings of equal length")
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phase = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{phase}")?;
        for op in self.ops() {
            write!(f, "{}", op.symbol())?;
        }
        Ok(())
    }
}

/// Outcome of applying a Pauli string to a sector state.
#[derive(Debug, Clone)]
pub enum StringAction {
    /// Every image configuration stays in the sector.
    Image(SpinState),
    /// Part of the image left the sector; `amplitudes` is the projection back
    /// onto the sector and `leaked_weight` the squared norm that was lost.
    Partial {
        amplitudes: Vec<C64>,
        leaked_weight: f64,
    },
    /// No image configuration lies in the sector.
    SectorViolation,
}

/// Applies `s` to `psi`.
pub fn apply_string(s: &PauliString, psi: &SpinState) -> Result<StringAction> {
    let basis = psi.basis();
    if s.sites() != basis.sites() {
        return Err(Error::Shape(format!(
            "string on {} sites applied to a {}-site state",
            s.sites(),
            basis.sites()
        )));
    }
    if basis.n_up().is_some() && s.flip_count() % 2 == 1 {
        return Ok(StringAction::SectorViolation);
    }
    let mut out = vec![C64::new(0.0, 0.0); basis.dim()];
    let mut leaked = 0.0;
    let mut landed = false;
    for (&c, &a) in basis.states().iter().zip(psi.amplitudes()) {
        match basis.index_of(c ^ s.x_mask()) {
            Some(i) => {
                out[i] += s.factor(c) * a;
                landed = true;
            }
            None => leaked += a.norm_sqr(),
        }
    }
    if !landed {
        return Ok(StringAction::SectorViolation);
    }
    if leaked == 0.0 {
        Ok(StringAction::Image(SpinState {
            basis: basis.clone(),
            amplitudes: out,
        }))
    } else {
        Ok(StringAction::Partial {
            amplitudes: out,
            leaked_weight: leaked,
        })
    }
}

/// `⟨ψ|s|ψ⟩`; zero when `s` cannot connect `ψ` to itself.
pub fn string_expectation(s: &PauliString, psi: &SpinState) -> Result<C64> {
    let basis = psi.basis();
    if s.sites() != basis.sites() {
        return Err(Error::Shape(format!(
            "string on {} sites evaluated on a {}-site state",
            s.sites(),
            basis.sites()
        )));
    }
    if basis.n_up().is_some() && s.flip_count() % 2 == 1 {
        return Ok(C64::new(0.0, 0.0));
    }
    let amps = psi.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    for (&c, &a) in basis.states().iter().zip(amps) {
        if let Some(i) = basis.index_of(c ^ s.x_mask()) {
            acc += amps[i].conj() * s.factor(c) * a;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Dense 2^L matrix of a Pauli string built from Kronecker products.
    fn dense_string(s: &PauliString) -> Vec<Vec<C64>> {
        let one = [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(1., 0.)]];
        let x = [[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]];
        let y = [[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]];
        let z = [[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]];
        let dim = 1usize << s.sites();
        let mut m = vec![vec![c(0., 0.); dim]; dim];
        // Local basis index 0 = up, 1 = down; configuration bit 1 = up.
        for (r, row) in m.iter_mut().enumerate() {
            for (col, entry) in row.iter_mut().enumerate() {
                let mut v = s.phase();
                for j in 0..s.sites() {
                    let lr = 1 - (r >> j & 1);
                    let lc = 1 - (col >> j & 1);
                    let op = match s.op(j) {
                        Pauli::I => one,
                        Pauli::X => x,
                        Pauli::Y => y,
                        Pauli::Z => z,
                    };
                    v *= op[lr][lc];
                }
                *entry = v;
            }
        }
        m
    }

    fn dense_mul(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let n = a.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum())
                    .collect()
            })
            .collect()
    }

    fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sector_dimensions_and_order() {
        let b = SectorBasis::new(2, 1).unwrap();
        assert_eq!(b.states(), &[0b01, 0b10]);
        assert_eq!(SectorBasis::new(12, 6).unwrap().dim(), 924);
        let b = SectorBasis::new(4, 2).unwrap();
        assert_eq!(b.states(), &[0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        for (i, &s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
        }
        assert_eq!(b.index_of(0b0111), None);
        assert_eq!(SectorBasis::new(5, 0).unwrap().states(), &[0]);
        assert_eq!(SectorBasis::new(5, 5).unwrap().states(), &[0b11111]);
    }

    #[test]
    fn sector_errors() {
        assert!(matches!(
            SectorBasis::half_filling(5),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            SectorBasis::new(25, 12),
            Err(Error::Capacity { .. })
        ));
        assert!(SectorBasis::new(4, 5).is_err());
    }

    #[test]
    fn binary_search_lookup_matches_table() {
        let b = SectorBasis::new(22, 2).unwrap();
        assert!(b.table.is_none());
        assert_eq!(b.dim() as u128, binomial(22, 2));
        for (i, &s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
        }
        assert_eq!(b.index_of(0b111), None);
    }

    #[test]
    fn majorana_strings() {
        let g1 = PauliString::majorana(3, 1).unwrap();
        assert_eq!(g1.ops(), vec![Pauli::X, Pauli::I, Pauli::I]);
        let g4 = PauliString::majorana(3, 4).unwrap();
        assert_eq!(g4.ops(), vec![Pauli::Z, Pauli::Y, Pauli::I]);
        let g5 = PauliString::majorana(3, 5).unwrap();
        assert_eq!(g5.ops(), vec![Pauli::Z, Pauli::Z, Pauli::X]);
        assert_eq!(g5.phase_exponent(), 0);
        assert!(PauliString::majorana(3, 0).is_err());
        assert!(PauliString::majorana(3, 7).is_err());
    }

    #[test]
    fn string_products() {
        let x = PauliString::from_ops(&[Pauli::X]);
        let y = PauliString::from_ops(&[Pauli::Y]);
        let p = x * y;
        assert_eq!(p.ops(), vec![Pauli::Z]);
        assert_eq!(p.phase(), c(0., 1.));

        // γ2 γ3 = Y1 · Z1 X2 = i X1 X2, checked against dense matrices.
        let g2 = PauliString::majorana(2, 2).unwrap();
        let g3 = PauliString::majorana(2, 3).unwrap();
        let p = g2 * g3;
        assert_eq!(p.ops(), vec![Pauli::X, Pauli::X]);
        assert_eq!(p.phase(), c(0., 1.));
        let dense = dense_mul(&dense_string(&g2), &dense_string(&g3));
        assert!(max_diff(&dense, &dense_string(&p)) < 1e-15);

        let bad = PauliString::identity(3);
        assert!(g2.multiply(&bad).is_err());
    }

    #[test]
    fn majorana_clifford_algebra_against_dense_oracle() {
        for sites in 1..=4 {
            let dim = 1usize << sites;
            for m in 1..=2 * sites {
                let gm = PauliString::majorana(sites, m).unwrap();
                for n in 1..=2 * sites {
                    let gn = PauliString::majorana(sites, n).unwrap();
                    let ab = dense_string(&(gm * gn));
                    let ba = dense_string(&(gn * gm));
                    // Product strings must agree with dense matrix products.
                    let ab_dense = dense_mul(&dense_string(&gm), &dense_string(&gn));
                    assert!(max_diff(&ab, &ab_dense) < 1e-14);
                    for i in 0..dim {
                        for j in 0..dim {
                            let anti = ab[i][j] + ba[i][j];
                            let want = if m == n && i == j { 2.0 } else { 0.0 };
                            assert!((anti - c(want, 0.)).norm() < 1e-14);
                        }
                    }
                }
                let sq = gm * gm;
                assert_eq!(sq, PauliString::identity(sites));
            }
        }
    }

    #[test]
    fn apply_string_cases() {
        let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
        // |↑↓⟩: site 0 up → config 0b01.
        let up_down = SpinState::product(basis.clone(), 0b01).unwrap();
        let zz = PauliString::from_ops(&[Pauli::Z, Pauli::Z]);
        match apply_string(&zz, &up_down).unwrap() {
            StringAction::Image(s) => {
                assert_eq!(s.amplitudes()[0], c(-1., 0.));
                assert_eq!(s.amplitudes()[1], c(0., 0.));
            }
            other => panic!("unexpected {other:?}"),
        }
        let xx = PauliString::from_ops(&[Pauli::X, Pauli::X]);
        match apply_string(&xx, &up_down).unwrap() {
            StringAction::Image(s) => {
                assert_eq!(s.amplitudes()[1], c(1., 0.));
                assert!((s.norm() - 1.0).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        let x1 = PauliString::single(2, 0, Pauli::X);
        assert!(matches!(
            apply_string(&x1, &up_down).unwrap(),
            StringAction::SectorViolation
        ));
    }

    #[test]
    fn partial_images_report_leakage() {
        let basis = Arc::new(SectorBasis::new(4, 2).unwrap());
        let amps = vec![C64::new(1.0, 0.0); basis.dim()];
        let psi = SpinState::normalized(basis, amps).unwrap();
        let xx = PauliString::from_ops(&[Pauli::X, Pauli::X, Pauli::I, Pauli::I]);
        match apply_string(&xx, &psi).unwrap() {
            StringAction::Partial { leaked_weight, .. } => {
                // 0011 and 1100 leave the sector.
                assert!((leaked_weight - 2.0 / 6.0).abs() < 1e-14)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expectations() {
        let basis = Arc::new(SectorBasis::half_filling(4).unwrap());
        let neel = SpinState::neel(basis).unwrap();
        let z1 = PauliString::single(4, 0, Pauli::Z);
        assert_eq!(string_expectation(&z1, &neel).unwrap(), c(1., 0.));
        let xx = PauliString::from_ops(&[Pauli::X, Pauli::X, Pauli::I, Pauli::I]);
        assert_eq!(string_expectation(&xx, &neel).unwrap(), c(0., 0.));

        // Bell pair (|↑↓⟩ + |↓↑⟩)/√2 against the dense oracle.
        let basis = Arc::new(SectorBasis::new(2, 1).unwrap());
        let bell =
            SpinState::normalized(basis, vec![c(1., 0.), c(1., 0.)]).unwrap();
        let xx = PauliString::from_ops(&[Pauli::X, Pauli::X]);
        assert!((string_expectation(&xx, &bell).unwrap() - c(1., 0.)).norm() < 1e-15);
        let dense = dense_string(&xx);
        // Full-space amplitudes: configs 0b01 and 0b10.
        let mut v = [c(0., 0.); 4];
        v[1] = c(std::f64::consts::FRAC_1_SQRT_2, 0.);
        v[2] = c(std::f64::consts::FRAC_1_SQRT_2, 0.);
        let oracle: C64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| v[i].conj() * dense[i][j] * v[j])
            .sum();
        assert!((oracle - c(1., 0.)).norm() < 1e-15);
    }

    #[test]
    fn factor_matches_dense_matrix_elements() {
        let sites = 3;
        let basis = SectorBasis::full(sites).unwrap();
        for m in 1..=2 * sites {
            for n in 1..=2 * sites {
                let s = PauliString::majorana(sites, m).unwrap()
                    * PauliString::majorana(sites, n).unwrap();
                let dense = dense_string(&s);
                for &b in basis.states() {
                    let img = (b ^ s.x_mask()) as usize;
                    assert!((dense[img][b as usize] - s.factor(b)).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn tensor_and_flip() {
        let b1 = Arc::new(SectorBasis::new(2, 1).unwrap());
        let bell = SpinState::normalized(b1.clone(), vec![c(1., 0.), c(1., 0.)]).unwrap();
        let up = SpinState::product(Arc::new(SectorBasis::new(1, 1).unwrap()), 1).unwrap();
        let t = SpinState::tensor(&bell, &up).unwrap();
        assert_eq!(t.basis().n_up(), Some(2));
        assert!((t.norm() - 1.0).abs() < 1e-14);
        for (m, want) in t.magnetization_profile().iter().zip([0.0, 0.0, 1.0]) {
            assert!((m - want).abs() < 1e-14);
        }

        let neel = SpinState::neel(Arc::new(SectorBasis::half_filling(4).unwrap())).unwrap();
        let flipped = neel.spin_flipped().unwrap();
        assert_eq!(flipped.magnetization_profile(), vec![-1.0, 1.0, -1.0, 1.0]);
    }
}
