//! Exact diagonalization, partition function and Gibbs weights.
//!
//! Eigenvectors are kept per sector block rather than embedded into dense
//! `2^N`-length columns, so a decomposition of a blocked Hamiltonian costs
//! only `Σ_k C(N,k)²` storage. The thermal density matrix is never formed at
//! full size; it is represented by the decomposition plus one Gibbs weight
//! per eigenstate.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{BasisState, HamiltonianMatrix, Representation};

/// Largest allowed asymmetry `|A_ij − A_ji|` accepted by the eigensolver.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Components below this magnitude are skipped when fixing eigenvector signs.
const SIGN_EPS: f64 = 1e-10;

/// Relative tolerance under which two eigenvalues count as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// Eigenvalues in ascending order and orthonormal eigenvectors (columns) of a
/// real symmetric matrix.
///
/// Ties are broken by the solver's output order, which is deterministic for
/// identical input. Every eigenvector is scaled so its first component of
/// magnitude above `1e-10` is positive.
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    for i in 0..n {
        for j in 0..i {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL {
                return Err(Error::InvalidInput(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }

    let eig = matrix.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut column = eig.eigenvectors.column(src).into_owned();
        if let Some(first) = column.iter().find(|c| c.abs() > SIGN_EPS) {
            if *first < 0.0 {
                column.neg_mut();
            }
        }
        vectors.set_column(dst, &column);
    }
    Ok((values, vectors))
}

/// Eigenpairs of one diagonal block, with the basis states it spans.
#[derive(Debug, Clone, PartialEq)]
struct EigenBlock {
    states: Vec<BasisState>,
    /// `None` for a dense block spanning every sector.
    excitations: Option<usize>,
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenBlock {
    fn column(&self, c: usize) -> &[f64] {
        let dim = self.states.len();
        &self.vectors.as_slice()[c * dim..(c + 1) * dim]
    }

    fn position(&self, state: BasisState) -> Option<usize> {
        if self.excitations.is_none() {
            // Dense block: states are 0..2^N in order.
            return Some(state.index()).filter(|&p| p < self.states.len());
        }
        self.states.binary_search(&state).ok()
    }
}

/// Full eigensystem of a Hamiltonian, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    n_dipoles: usize,
    blocks: Vec<EigenBlock>,
    /// `(block, column)` of each eigenpair, in ascending eigenvalue order.
    order: Vec<(usize, usize)>,
    eigenvalues: Vec<f64>,
    sector_labels: Vec<Option<usize>>,
}

/// Borrowed view of one eigenvector, restricted to the basis states of the
/// block it lives in. Amplitudes outside that support are zero.
#[derive(Debug, Clone, Copy)]
pub struct Eigenvector<'a> {
    block: &'a EigenBlock,
    column: usize,
}

impl<'a> Eigenvector<'a> {
    pub fn states(&self) -> &'a [BasisState] {
        &self.block.states
    }

    pub fn amplitudes(&self) -> &'a [f64] {
        self.block.column(self.column)
    }

    /// Amplitude on `state`, zero outside the support.
    pub fn amplitude(&self, state: BasisState) -> f64 {
        self.block
            .position(state)
            .map_or(0.0, |p| self.amplitudes()[p])
    }

    /// Iterator of `(state, amplitude)` over the support.
    pub fn iter(&self) -> impl Iterator<Item = (BasisState, f64)> + 'a {
        self.states()
            .iter()
            .copied()
            .zip(self.amplitudes().iter().copied())
    }

    pub fn to_full(&self, n_dipoles: usize) -> DVector<f64> {
        let mut v = DVector::zeros(1 << n_dipoles);
        for (s, a) in self.iter() {
            v[s.index()] = a;
        }
        v
    }

    /// Inner product with another eigenvector of the same system.
    pub fn dot(&self, other: &Eigenvector<'_>) -> f64 {
        if self.states().len() <= other.states().len() {
            self.iter().map(|(s, a)| a * other.amplitude(s)).sum()
        } else {
            other.dot(self)
        }
    }
}

fn sector_label(states: &[BasisState], column: &[f64]) -> Option<usize> {
    let n_bits = states.last().map_or(0, |s| 64 - s.mask().leading_zeros() as usize);
    let mut weight = vec![0.0; n_bits + 1];
    for (s, a) in states.iter().zip(column) {
        weight[s.excitations()] += a * a;
    }
    weight.iter().position(|&w| w > 1.0 - 1e-10)
}

impl SpectralDecomposition {
    pub fn n_dipoles(&self) -> usize {
        self.n_dipoles
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvalues in ascending order, units of the reference coupling.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Excitation count of each eigenpair, `None` where a dense
    /// diagonalization mixed sectors (only possible across degeneracies).
    pub fn sector_labels(&self) -> &[Option<usize>] {
        &self.sector_labels
    }

    pub fn eigenvector(&self, i: usize) -> Eigenvector<'_> {
        let (block, column) = self.order[i];
        Eigenvector {
            block: &self.blocks[block],
            column,
        }
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Absolute tolerance for degeneracy with the ground level.
    pub fn degeneracy_tol(&self) -> f64 {
        DEGENERACY_RTOL * self.ground_energy().abs().max(1.0)
    }

    /// Indices of all eigenstates degenerate with the ground state.
    pub fn ground_indices(&self) -> std::ops::Range<usize> {
        let cut = self.ground_energy() + self.degeneracy_tol();
        0..self.eigenvalues.partition_point(|&e| e < cut)
    }

    /// Lowest eigenvalue within a sector, if the decomposition is blocked and
    /// the sector is present.
    pub fn sector_ground_energy(&self, k: usize) -> Option<f64> {
        self.eigenvalues
            .iter()
            .zip(&self.sector_labels)
            .find(|(_, label)| **label == Some(k))
            .map(|(e, _)| *e)
    }
}

/// Diagonalizes every block of `h` and merges the eigenpairs into one
/// ascending list.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<SpectralDecomposition> {
    let n = h.n_dipoles();
    let blocks: Vec<EigenBlock> = match h.representation() {
        Representation::Dense(m) => {
            let (values, vectors) = symmetric_eigen(m)?;
            let states = (0..m.nrows() as u64).map(BasisState).collect();
            vec![EigenBlock {
                states,
                excitations: None,
                values,
                vectors,
            }]
        }
        Representation::Blocked(blocks) => blocks
            .par_iter()
            .map(|b| {
                let (values, vectors) = symmetric_eigen(b.matrix())?;
                Ok(EigenBlock {
                    states: b.states().to_vec(),
                    excitations: Some(b.excitations()),
                    values,
                    vectors,
                })
            })
            .collect::<Result<_>>()?,
    };

    let mut order: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, block)| (0..block.values.len()).map(move |c| (b, c)))
        .collect();
    // Stable sort: ties keep block-then-column order.
    order.sort_by(|&(ba, ca), &(bb, cb)| blocks[ba].values[ca].total_cmp(&blocks[bb].values[cb]));

    let eigenvalues = order.iter().map(|&(b, c)| blocks[b].values[c]).collect();
    let sector_labels = order
        .iter()
        .map(|&(b, c)| {
            let block = &blocks[b];
            block
                .excitations
                .or_else(|| sector_label(&block.states, block.column(c)))
        })
        .collect();

    Ok(SpectralDecomposition {
        n_dipoles: n,
        blocks,
        order,
        eigenvalues,
        sector_labels,
    })
}

/// Inverse temperature `β = 1/kT` in units of `1/(ħΩ)`. `+∞` is the
/// zero-temperature limit and is handled exactly.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Beta(f64);

impl Beta {
    pub const ZERO_TEMPERATURE: Beta = Beta(f64::INFINITY);
    pub const INFINITE_TEMPERATURE: Beta = Beta(0.0);

    pub fn new(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "inverse temperature must be nonnegative, got {beta}"
            )));
        }
        Ok(Beta(beta))
    }

    /// From a temperature `kT` in units of `ħΩ`; `kT = 0` gives `β = ∞` and
    /// `kT = ∞` gives `β = 0`.
    pub fn from_kt(kt: f64) -> Result<Self> {
        if !(kt >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "temperature must be nonnegative, got {kt}"
            )));
        }
        Ok(Beta(1.0 / kt))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero_temperature(self) -> bool {
        self.0.is_infinite()
    }
}

/// `Z` evaluated relative to the ground energy: `Z = shifted · e^{−β·shift}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionFunction {
    pub shifted: f64,
    pub shift: f64,
    pub beta: Beta,
}

impl PartitionFunction {
    /// `ln Z` for finite `β`. At `β = ∞` this is `−∞`, `+∞` or `ln g`
    /// depending on the sign of the ground energy.
    pub fn log_z(&self) -> f64 {
        let b = self.beta.value();
        if self.shift == 0.0 {
            self.shifted.ln()
        } else {
            self.shifted.ln() - b * self.shift
        }
    }
}

fn boltzmann_factors(spec: &SpectralDecomposition, beta: Beta) -> Vec<f64> {
    let ground = spec.ground_energy();
    if beta.is_zero_temperature() {
        let ground_count = spec.ground_indices().end;
        (0..spec.len())
            .map(|i| if i < ground_count { 1.0 } else { 0.0 })
            .collect()
    } else {
        spec.eigenvalues
            .iter()
            .map(|&e| (-beta.value() * (e - ground)).exp())
            .collect()
    }
}

/// `Z = Σ_i e^{−β(λ_i − λ_min)}`. Degenerate levels enter once per
/// eigenstate, which accounts for their degeneracy factor.
pub fn partition_function(spec: &SpectralDecomposition, beta: Beta) -> PartitionFunction {
    PartitionFunction {
        shifted: boltzmann_factors(spec, beta).iter().sum(),
        shift: spec.ground_energy(),
        beta,
    }
}

/// Gibbs state in spectral form.
#[derive(Debug, Clone)]
pub struct ThermalState<'a> {
    decomposition: &'a SpectralDecomposition,
    beta: Beta,
    weights: Vec<f64>,
    partition: PartitionFunction,
}

impl<'a> ThermalState<'a> {
    pub fn decomposition(&self) -> &'a SpectralDecomposition {
        self.decomposition
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    /// Occupation probability of each eigenstate, aligned with the ascending
    /// eigenvalue order.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn partition_function(&self) -> PartitionFunction {
        self.partition
    }

    /// `Σ_i w_i λ_i`.
    pub fn mean_energy(&self) -> f64 {
        self.weights
            .iter()
            .zip(self.decomposition.eigenvalues())
            .map(|(w, e)| w * e)
            .sum()
    }

    /// Dense `2^N × 2^N` density matrix. Only for small systems and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.decomposition.n_dipoles();
        let dim = 1 << n;
        let mut rho = DMatrix::zeros(dim, dim);
        for (i, &w) in self.weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let v = self.decomposition.eigenvector(i).to_full(n);
            rho += w * &v * v.transpose();
        }
        rho
    }
}

pub fn thermal_state(spec: &SpectralDecomposition, beta: Beta) -> ThermalState<'_> {
    let mut weights = boltzmann_factors(spec, beta);
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }
    ThermalState {
        decomposition: spec,
        beta,
        weights,
        partition: PartitionFunction {
            shifted: z,
            shift: spec.ground_energy(),
            beta,
        },
    }
}

/// Ground-state vectors in the full standard basis: every eigenvector within
/// the degeneracy tolerance of the lowest level, sign-normalized.
pub fn ground_state(spec: &SpectralDecomposition) -> Vec<DVector<f64>> {
    spec.ground_indices()
        .map(|i| spec.eigenvector(i).to_full(spec.n_dipoles()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_geometry, coupling_matrix, CouplingMatrix, GeometryKind};
    use crate::hamiltonian::{build_sector_block, build_uniform, Layout};
    use nalgebra::Vector3;

    fn pair() -> CouplingMatrix {
        CouplingMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), (0, 1))
            .unwrap()
    }

    fn chain(n: usize) -> CouplingMatrix {
        coupling_matrix(&build_geometry(GeometryKind::Chain, &[n], Vector3::z()).unwrap()).unwrap()
    }

    #[test]
    fn two_dipole_spectrum_at_half() {
        let h = build_uniform(&pair(), 0.5, Layout::Dense).unwrap();
        let spec = diagonalize(&h).unwrap();
        let expected = [-0.5, 0.0, 1.0, 1.5];
        for (e, x) in spec.eigenvalues().iter().zip(expected) {
            assert!((e - x).abs() < 1e-14);
        }
        assert_eq!(spec.sector_labels(), &[Some(1), Some(0), Some(2), Some(1)]);
    }

    #[test]
    fn diagonal_matrix_gives_axes() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let (values, vectors) = symmetric_eigen(&m).unwrap();
        assert_eq!(values, vec![-1.0, 2.0, 3.0]);
        for (col, axis) in [1, 2, 0].into_iter().enumerate() {
            for row in 0..3 {
                let expected = if row == axis { 1.0 } else { 0.0 };
                assert!((vectors[(row, col)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0 + 1e-9, 0.0]);
        assert!(matches!(symmetric_eigen(&m), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sign_convention_first_nonzero_positive() {
        let h = build_uniform(&chain(5), 0.8, Layout::Dense).unwrap();
        let spec = diagonalize(&h).unwrap();
        for i in 0..spec.len() {
            let v = spec.eigenvector(i);
            let first = v.amplitudes().iter().find(|a| a.abs() > SIGN_EPS).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn three_site_sector_matches_dense_restriction() {
        let c = chain(3);
        let w = 0.45;
        let block = build_sector_block(&c, &[w; 3], 1).unwrap();
        let (block_values, _) = symmetric_eigen(block.matrix()).unwrap();
        let dense = diagonalize(&build_uniform(&c, w, Layout::Dense).unwrap()).unwrap();
        let dense_sector: Vec<f64> = dense
            .eigenvalues()
            .iter()
            .zip(dense.sector_labels())
            .filter(|(_, l)| **l == Some(1))
            .map(|(e, _)| *e)
            .collect();
        assert_eq!(dense_sector.len(), 3);
        for (a, b) in block_values.iter().zip(&dense_sector) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_function_limits() {
        let spec = diagonalize(&build_uniform(&chain(4), 0.7, Layout::Dense).unwrap()).unwrap();
        assert_eq!(partition_function(&spec, Beta::INFINITE_TEMPERATURE).shifted, 16.0);
        assert_eq!(partition_function(&spec, Beta::ZERO_TEMPERATURE).shifted, 1.0);
    }

    #[test]
    fn partition_function_two_dipoles_hand_sum() {
        let spec = diagonalize(&build_uniform(&pair(), 0.5, Layout::Dense).unwrap()).unwrap();
        let beta = Beta::from_kt(0.1).unwrap();
        let z = partition_function(&spec, beta);
        // Levels {−0.5, 0, 1, 1.5} shifted by +0.5: exponents 0, −5, −15, −20.
        let hand = 1.0 + (-5.0f64).exp() + (-15.0f64).exp() + (-20.0f64).exp();
        assert!((z.shifted - hand).abs() < 1e-15);
        assert_eq!(z.shift, -0.5);
        let unshifted: f64 = [-0.5f64, 0.0, 1.0, 1.5].iter().map(|e| (-10.0 * e).exp()).sum();
        assert!((z.log_z() - unshifted.ln()).abs() < 1e-13);
    }

    #[test]
    fn thermal_weights_limits() {
        let spec = diagonalize(&build_uniform(&pair(), 0.5, Layout::Dense).unwrap()).unwrap();
        let cold = thermal_state(&spec, Beta::ZERO_TEMPERATURE);
        assert_eq!(cold.weights(), &[1.0, 0.0, 0.0, 0.0]);
        let hot = thermal_state(&spec, Beta::INFINITE_TEMPERATURE);
        assert_eq!(hot.weights(), &[0.25; 4]);
        let near_zero = thermal_state(&spec, Beta::from_kt(1e-4).unwrap());
        assert!(near_zero.weights()[0] >= 1.0 - 1e-15);
    }

    #[test]
    fn degenerate_ground_is_uniform_mixture_at_zero_temperature() {
        // ω = Ω: |00⟩ and the singlet cross at zero energy.
        let spec = diagonalize(&build_uniform(&pair(), 1.0, Layout::Dense).unwrap()).unwrap();
        assert_eq!(spec.ground_indices(), 0..2);
        let cold = thermal_state(&spec, Beta::ZERO_TEMPERATURE);
        assert_eq!(&cold.weights()[..2], &[0.5, 0.5]);
        assert_eq!(ground_state(&spec).len(), 2);
    }

    #[test]
    fn singlet_ground_state() {
        let spec = diagonalize(&build_uniform(&pair(), 0.3, Layout::Dense).unwrap()).unwrap();
        let g = ground_state(&spec);
        assert_eq!(g.len(), 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = DVector::from_vec(vec![0.0, s, -s, 0.0]);
        assert!((&g[0] - &expected).amax() < 1e-14);
    }

    #[test]
    fn beta_validation() {
        assert!(Beta::new(-1.0).is_err());
        assert!(Beta::new(f64::NAN).is_err());
        assert!(Beta::from_kt(0.0).unwrap().is_zero_temperature());
        assert_eq!(Beta::from_kt(f64::INFINITY).unwrap().value(), 0.0);
    }

    #[test]
    fn dense_density_matrix_has_unit_trace() {
        let spec = diagonalize(&build_uniform(&chain(3), 0.6, Layout::Dense).unwrap()).unwrap();
        let rho = thermal_state(&spec, Beta::from_kt(0.5).unwrap()).to_dense();
        assert!((rho.trace() - 1.0).abs() < 1e-13);
    }
}
