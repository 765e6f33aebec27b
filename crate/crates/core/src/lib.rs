//! Exact-diagonalization toolkit for arrays of interacting electric dipoles.
//!
//! Each dipole is a two-level system, aligned with (`|0⟩`) or against (`|1⟩`)
//! an external field. Excitations hop between sites through the
//! dipole-dipole interaction, so tuning the ratio of site splitting `ω` to
//! nearest-neighbour coupling `Ω` switches the ground state between
//! excitation sectors, and with it the pairwise entanglement.
//!
//! The modules follow the pipeline:
//!
//! - [`geometry`]: site positions, the coupling matrix, and unit conversion
//!   from laboratory parameters.
//! - [`hamiltonian`]: the bitmask basis and the (optionally sector-blocked)
//!   Hamiltonian matrix.
//! - [`spectral`]: diagonalization, partition function and Gibbs weights.
//! - [`entanglement`]: partial traces onto dipole pairs and concurrence.
//! - [`sweep`]: scans over `ω/Ω` and temperature, switching-point detection
//!   and CSV output.
//!
//! ```
//! use dipole_switch::prelude::*;
//!
//! let geometry = build_geometry(GeometryKind::Chain, &[2], Vector3::z())?;
//! let couplings = coupling_matrix(&geometry)?;
//! let h = build_uniform(&couplings, 0.5, Layout::Dense)?;
//! let spectrum = diagonalize(&h)?;
//! assert_eq!(spectrum.eigenvalues().len(), 4);
//!
//! let state = thermal_state(&spectrum, Beta::from_kt(1e-4)?);
//! let rho = reduce_to_pair(&state, 0, 1)?;
//! assert!(concurrence(&rho)? > 0.999);
//! # Ok::<(), dipole_switch::Error>(())
//! ```

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod entanglement;
mod error;
pub mod geometry;
pub mod hamiltonian;
pub mod spectral;
pub mod sweep;

pub use error::{Error, Result};

/// Everything needed for typical use.
pub mod prelude {
    pub use crate::entanglement::{concurrence, reduce_to_pair, spin_flip, TwoQubitDensity};
    pub use crate::geometry::{
        build_geometry, coupling_matrix, coupling_matrix_with, physical_to_model, CouplingMatrix,
        CouplingOptions, DipoleGeometry, GeometryKind, PhysicalParams,
    };
    pub use crate::hamiltonian::{build_hamiltonian, build_uniform, enumerate_sector, BasisState, Layout};
    pub use crate::spectral::{
        diagonalize, ground_state, partition_function, thermal_state, Beta, SpectralDecomposition,
        ThermalState,
    };
    pub use crate::sweep::{
        detect_transitions, emit_csv, run_sweep, GeometrySpec, PairSelection, SweepConfig,
        SweepResult, XRange,
    };
    pub use crate::{Error, Result};
    pub use nalgebra::Vector3;
}

// Runs the guide's code blocks as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/hamiltonian.md")]
    mod hamiltonian {}
    #[doc = include_str!("../../../book/src/spectra.md")]
    mod spectra {}
    #[doc = include_str!("../../../book/src/concurrence.md")]
    mod concurrence {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
