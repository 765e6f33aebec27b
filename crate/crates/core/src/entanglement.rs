//! Two-qubit reduced density matrices and Wootters concurrence.
//!
//! For a two-qubit density matrix `ρ` the concurrence is
//!
//! ```text
//! C(ρ) = max{0, λ₁ − λ₂ − λ₃ − λ₄}
//! ```
//!
//! with `λ₁ ≥ … ≥ λ₄` the eigenvalues of `R = √(√ρ ρ̃ √ρ)` and
//! `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)` the spin-flipped state. Only `√ρ` needs a
//! Hermitian eigendecomposition: `√ρ̃` follows from it by the same flip, and
//! since `√ρ ρ̃ √ρ = M†M` with `M = √ρ̃ √ρ`, the `λ`s are the singular values of
//! `M`. Taking them directly avoids square-rooting roundoff in the vanishing
//! eigenvalues of `√ρ ρ̃ √ρ`, which would otherwise leave noise near `1e-8`.

use nalgebra::{Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::BasisState;
use crate::spectral::{Eigenvector, ThermalState};

/// Hermiticity and trace tolerance of a two-qubit density matrix.
pub const DENSITY_TOL: f64 = 1e-12;

/// Eigenvalues of `ρ` in `[−CLAMP_TOL, 0)` are treated as zero; anything more
/// negative is rejected.
pub const CLAMP_TOL: f64 = 1e-10;

/// Gibbs weights below this fraction of the largest weight are skipped when
/// reducing a thermal state.
pub const WEIGHT_CUTOFF: f64 = 1e-16;

const PURE_NORM_TOL: f64 = 1e-10;

/// Reduced state of two dipoles in the basis `|00⟩, |01⟩, |10⟩, |11⟩`. The
/// first slot belongs to the first index of `pair`; pairs produced by sweeps
/// always list the lower-indexed dipole first.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensity {
    rho: Matrix4<Complex64>,
    pair: (usize, usize),
}

impl TwoQubitDensity {
    /// Validates Hermiticity and unit trace.
    pub fn new(rho: Matrix4<Complex64>, pair: (usize, usize)) -> Result<Self> {
        let asym = (rho - rho.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if asym > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {asym:e})"
            )));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > DENSITY_TOL || trace.im.abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace is {trace}")));
        }
        Ok(TwoQubitDensity { rho, pair })
    }

    pub fn from_real(rho: Matrix4<f64>, pair: (usize, usize)) -> Result<Self> {
        Self::new(rho.map(|x| Complex64::new(x, 0.0)), pair)
    }

    /// `|ψ⟩⟨ψ|` for a normalized two-qubit state.
    pub fn from_pure(amplitudes: [Complex64; 4]) -> Result<Self> {
        let psi = nalgebra::Vector4::from(amplitudes);
        let norm = psi.norm();
        if (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::InvalidInput(format!("state has norm {norm}")));
        }
        Self::new(psi * psi.adjoint(), (0, 1))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn pair(&self) -> (usize, usize) {
        self.pair
    }
}

/// `σ_y ⊗ σ_y` in the standard basis.
fn sigma_yy() -> Matrix4<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    Matrix4::new(
        zero, zero, zero, -one, //
        zero, zero, one, zero, //
        zero, one, zero, zero, //
        -one, zero, zero, zero,
    )
}

/// `ρ̃ = (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
pub fn spin_flip(rho: &TwoQubitDensity) -> TwoQubitDensity {
    let yy = sigma_yy();
    TwoQubitDensity {
        rho: yy * rho.rho.conjugate() * yy,
        pair: rho.pair,
    }
}

fn hermitian_eigen(m: Matrix4<Complex64>) -> SymmetricEigen<Complex64, nalgebra::U4> {
    // Symmetrize away roundoff so the solver sees an exactly Hermitian input.
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    SymmetricEigen::new(h)
}

/// `√ρ`, with eigenvalues in `[−CLAMP_TOL, 0)` clamped to zero.
fn sqrt_psd(rho: &TwoQubitDensity) -> Result<Matrix4<Complex64>> {
    let eig = hermitian_eigen(rho.rho);
    let min = eig.eigenvalues.min();
    if min < -CLAMP_TOL {
        return Err(Error::InvalidDensity(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    let roots = eig.eigenvalues.map(|v| Complex64::new(v.max(0.0).sqrt(), 0.0));
    let v = eig.eigenvectors;
    Ok(v * Matrix4::from_diagonal(&roots) * v.adjoint())
}

/// The four `λ`s of the concurrence formula in decreasing order.
pub fn concurrence_spectrum(rho: &TwoQubitDensity) -> Result<[f64; 4]> {
    let root = sqrt_psd(rho)?;
    let yy = sigma_yy();
    let flipped_root = yy * root.conjugate() * yy;
    let sv = (flipped_root * root).singular_values();
    let mut lambdas: [f64; 4] = std::array::from_fn(|k| sv[k]);
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok(lambdas)
}

/// Wootters concurrence, in `[0, 1]`.
pub fn concurrence(rho: &TwoQubitDensity) -> Result<f64> {
    let l = concurrence_spectrum(rho)?;
    Ok((l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0))
}

/// A full-system state to be reduced onto a pair of dipoles.
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Thermal(&'a ThermalState<'a>),
    /// Real amplitudes over all `2^N` basis states.
    Pure(&'a [f64]),
}

impl<'a> From<&'a ThermalState<'a>> for StateRef<'a> {
    fn from(state: &'a ThermalState<'a>) -> Self {
        StateRef::Thermal(state)
    }
}

impl<'a> From<&'a [f64]> for StateRef<'a> {
    fn from(state: &'a [f64]) -> Self {
        StateRef::Pure(state)
    }
}

trait Amplitudes {
    fn support(&self) -> impl Iterator<Item = (BasisState, f64)>;
    fn amplitude(&self, state: BasisState) -> f64;
}

impl Amplitudes for Eigenvector<'_> {
    fn support(&self) -> impl Iterator<Item = (BasisState, f64)> {
        self.iter()
    }

    fn amplitude(&self, state: BasisState) -> f64 {
        Eigenvector::amplitude(self, state)
    }
}

struct DenseAmplitudes<'a>(&'a [f64]);

impl Amplitudes for DenseAmplitudes<'_> {
    fn support(&self) -> impl Iterator<Item = (BasisState, f64)> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &a)| (BasisState(i as u64), a))
    }

    fn amplitude(&self, state: BasisState) -> f64 {
        self.0.get(state.index()).copied().unwrap_or(0.0)
    }
}

/// Adds `weight · Tr_rest |ψ⟩⟨ψ|` for sites `(i, j)` into `acc`.
fn accumulate_pair(psi: &impl Amplitudes, i: usize, j: usize, weight: f64, acc: &mut Matrix4<f64>) {
    let pair_mask = (1u64 << i) | (1u64 << j);
    for (state, a) in psi.support() {
        if a == 0.0 {
            continue;
        }
        let rest = state.mask() & !pair_mask;
        let row = (usize::from(state.is_excited(i)) << 1) | usize::from(state.is_excited(j));
        for col in 0..4 {
            let partner = rest | (((col >> 1) as u64) << i) | (((col & 1) as u64) << j);
            let b = psi.amplitude(BasisState(partner));
            if b != 0.0 {
                acc[(row, col)] += weight * a * b;
            }
        }
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    if i == j || i >= n || j >= n {
        return Err(Error::InvalidPair(i + 1, j + 1));
    }
    Ok(())
}

/// Reduced density matrix of dipoles `(i, j)` (0-based).
pub fn reduce_to_pair<'a>(state: impl Into<StateRef<'a>>, i: usize, j: usize) -> Result<TwoQubitDensity> {
    let mut acc = Matrix4::<f64>::zeros();
    match state.into() {
        StateRef::Thermal(thermal) => {
            let spec = thermal.decomposition();
            check_pair(spec.n_dipoles(), i, j)?;
            let weights = thermal.weights();
            let max = weights.iter().copied().fold(0.0, f64::max);
            for (k, &w) in weights.iter().enumerate() {
                if w > 0.0 && w >= WEIGHT_CUTOFF * max {
                    accumulate_pair(&spec.eigenvector(k), i, j, w, &mut acc);
                }
            }
            // Renormalize over the retained weights.
            acc /= acc.trace();
        }
        StateRef::Pure(psi) => {
            if !psi.len().is_power_of_two() {
                return Err(Error::InvalidInput(format!(
                    "state length {} is not a power of two",
                    psi.len()
                )));
            }
            let norm = psi.iter().map(|a| a * a).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > PURE_NORM_TOL {
                return Err(Error::InvalidInput(format!("state has norm {norm}")));
            }
            check_pair(psi.len().trailing_zeros() as usize, i, j)?;
            accumulate_pair(&DenseAmplitudes(psi), i, j, 1.0, &mut acc);
        }
    }
    // Exact symmetrization: the two triangles are sums of the same products
    // taken in different orders.
    let acc = (acc + acc.transpose()) * 0.5;
    TwoQubitDensity::from_real(acc, (i, j))
}
