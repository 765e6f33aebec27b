//! Hamiltonian of a dipole array in the standard (bitmask) basis.
//!
//! Basis state `b` has bit `i` set when dipole `i` is excited, i.e. oriented
//! against the field. The Hamiltonian is
//!
//! ```text
//! H = Σ_i ω_i n̂_i + Σ_{i<j} Ω_ij (Ŝ_i⁺Ŝ_j⁻ + Ŝ_j⁺Ŝ_i⁻)
//! ```
//!
//! with `n̂_i` the excitation-number operator of site `i`. This is the
//! `Σ ω_i Ŝ_i^z` form shifted by the constant `Σ ω_i / 2`, so the fully
//! aligned state `|00…0⟩` sits at energy exactly zero and, for two dipoles,
//! the spectrum is `{0, ω − Ω, ω + Ω, 2ω}`.
//!
//! The hopping term moves a single excitation and never changes the total
//! excitation count, so `H` is block diagonal in sectors of fixed popcount.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::CouplingMatrix;

/// Largest array for which the full `2^N × 2^N` matrix is built.
pub const DENSE_MAX_DIPOLES: usize = 14;

/// From this size on, [`Layout::Auto`] builds sector blocks.
pub const AUTO_BLOCKED_FROM: usize = 8;

/// A product state; bit `i` set means dipole `i` is excited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState(pub u64);

impl BasisState {
    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn excitations(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_excited(self, site: usize) -> bool {
        self.0 >> site & 1 == 1
    }

    /// Ket label with dipole 1 leftmost, `0` aligned and `1` excited.
    pub fn ket(self, n: usize) -> String {
        let bits: String = (0..n)
            .map(|i| if self.is_excited(i) { '1' } else { '0' })
            .collect();
        format!("|{bits}⟩")
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `n`-site states with exactly `k` excitations, in ascending mask order.
pub fn enumerate_sector(n: usize, k: usize) -> Result<Vec<BasisState>> {
    if k > n {
        return Err(Error::InvalidInput(format!(
            "excitation count {k} out of range for {n} dipoles"
        )));
    }
    if n >= 64 {
        return Err(Error::InvalidInput(format!("{n} dipoles do not fit a 64-bit mask")));
    }
    if k == 0 {
        return Ok(vec![BasisState(0)]);
    }
    let mut states = Vec::with_capacity(binomial(n, k));
    let limit = 1u64 << n;
    // Gosper's hack: next integer with the same popcount.
    let mut mask = (1u64 << k) - 1;
    while mask < limit {
        states.push(BasisState(mask));
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    Ok(states)
}

/// Dense Hamiltonian block for a single excitation sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBlock {
    excitations: usize,
    states: Vec<BasisState>,
    matrix: DMatrix<f64>,
}

impl SectorBlock {
    pub fn excitations(&self) -> usize {
        self.excitations
    }

    /// Basis states of the block, ascending.
    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Dense(DMatrix<f64>),
    Blocked(Vec<SectorBlock>),
}

/// Requested storage for [`build_hamiltonian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// Dense below [`AUTO_BLOCKED_FROM`] dipoles, blocked from there on.
    #[default]
    Auto,
    Dense,
    Blocked,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix {
    n_dipoles: usize,
    omega: Vec<f64>,
    representation: Representation,
}

impl HamiltonianMatrix {
    pub fn n_dipoles(&self) -> usize {
        self.n_dipoles
    }

    /// Full Hilbert-space dimension `2^N`.
    pub fn dim(&self) -> usize {
        1 << self.n_dipoles
    }

    /// Per-site transition frequencies, in units of the reference coupling.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn representation(&self) -> &Representation {
        &self.representation
    }

    /// Reassembles the full matrix; for a dense representation this is a copy.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match &self.representation {
            Representation::Dense(m) => m.clone(),
            Representation::Blocked(blocks) => {
                let dim = self.dim();
                let mut full = DMatrix::zeros(dim, dim);
                for block in blocks {
                    for (a, sa) in block.states.iter().enumerate() {
                        for (b, sb) in block.states.iter().enumerate() {
                            full[(sa.index(), sb.index())] = block.matrix[(a, b)];
                        }
                    }
                }
                full
            }
        }
    }
}

fn check_inputs(couplings: &CouplingMatrix, omega: &[f64]) -> Result<()> {
    if omega.len() != couplings.n() {
        return Err(Error::InvalidInput(format!(
            "{} transition frequencies given for {} dipoles",
            omega.len(),
            couplings.n()
        )));
    }
    if omega.iter().any(|w| !w.is_finite()) {
        return Err(Error::InvalidInput("transition frequencies must be finite".into()));
    }
    Ok(())
}

fn site_energy(omega: &[f64], state: BasisState) -> f64 {
    omega
        .iter()
        .enumerate()
        .filter(|&(i, _)| state.is_excited(i))
        .map(|(_, w)| w)
        .sum()
}

/// Calls `f(target, coupling)` for every state reached from `state` by moving
/// one excitation from an occupied site to an empty one.
fn for_each_hop(couplings: &CouplingMatrix, state: BasisState, mut f: impl FnMut(BasisState, f64)) {
    let n = couplings.n();
    for i in (0..n).filter(|&i| state.is_excited(i)) {
        for j in (0..n).filter(|&j| !state.is_excited(j)) {
            let value = couplings.get(i, j);
            if value != 0.0 {
                f(BasisState(state.0 ^ (1 << i) ^ (1 << j)), value);
            }
        }
    }
}

/// Hamiltonian block of the `k`-excitation sector.
pub fn build_sector_block(couplings: &CouplingMatrix, omega: &[f64], k: usize) -> Result<SectorBlock> {
    check_inputs(couplings, omega)?;
    let states = enumerate_sector(couplings.n(), k)?;
    let dim = states.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (a, &state) in states.iter().enumerate() {
        matrix[(a, a)] = site_energy(omega, state);
        for_each_hop(couplings, state, |target, value| {
            let b = states
                .binary_search(&target)
                .expect("hopping conserves the excitation count");
            matrix[(b, a)] = value;
        });
    }
    Ok(SectorBlock {
        excitations: k,
        states,
        matrix,
    })
}

/// Builds the Hamiltonian for per-site frequencies `omega` (units of the
/// reference coupling).
pub fn build_hamiltonian(
    couplings: &CouplingMatrix,
    omega: &[f64],
    layout: Layout,
) -> Result<HamiltonianMatrix> {
    check_inputs(couplings, omega)?;
    let n = couplings.n();
    let blocked = match layout {
        Layout::Auto => n >= AUTO_BLOCKED_FROM,
        Layout::Dense => false,
        Layout::Blocked => true,
    };

    let representation = if blocked {
        let blocks = (0..=n)
            .into_par_iter()
            .map(|k| build_sector_block(couplings, omega, k))
            .collect::<Result<Vec<_>>>()?;
        Representation::Blocked(blocks)
    } else {
        if n > DENSE_MAX_DIPOLES {
            return Err(Error::SizeLimit {
                requested: n,
                limit: DENSE_MAX_DIPOLES,
            });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::zeros(dim, dim);
        for a in 0..dim {
            let state = BasisState(a as u64);
            m[(a, a)] = site_energy(omega, state);
            for_each_hop(couplings, state, |target, value| {
                m[(target.index(), a)] = value;
            });
        }
        Representation::Dense(m)
    };

    Ok(HamiltonianMatrix {
        n_dipoles: n,
        omega: omega.to_vec(),
        representation,
    })
}

/// Same as [`build_hamiltonian`] with every site at frequency `omega`.
pub fn build_uniform(couplings: &CouplingMatrix, omega: f64, layout: Layout) -> Result<HamiltonianMatrix> {
    build_hamiltonian(couplings, &vec![omega; couplings.n()], layout)
}
