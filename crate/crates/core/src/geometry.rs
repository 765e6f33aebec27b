//! Dipole-array geometries and the dipole-dipole coupling matrix.
//!
//! Positions are measured in units of the lattice constant. The coupling
//! between dipoles `i` and `j` has the angular structure
//!
//! ```text
//! Ω_ij ∝ (1 − 3 cos²θ_ij) / |r_ij|³
//! ```
//!
//! where `θ_ij` is the angle between the separation vector and the external
//! field. The matrix is normalized so that a reference pair (by default the
//! lowest-indexed nearest-neighbour pair) has coupling of magnitude one; all
//! energies in the model are then expressed in units of that coupling.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};

/// Default upper bound on the number of dipoles a generated geometry may hold.
pub const DEFAULT_MAX_DIPOLES: usize = 14;

const UNIT_NORM_TOL: f64 = 1e-12;
const MAGIC_ANGLE_TOL: f64 = 1e-12;

/// Regular arrangement families, plus user-supplied positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeometryKind {
    Chain,
    Rectangular,
    Cubic,
    Custom,
}

impl GeometryKind {
    /// Number of extents a regular kind expects.
    pub fn dimensions(self) -> Option<usize> {
        match self {
            GeometryKind::Chain => Some(1),
            GeometryKind::Rectangular => Some(2),
            GeometryKind::Cubic => Some(3),
            GeometryKind::Custom => None,
        }
    }
}

/// A set of dipole sites together with the direction of the external field.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleGeometry {
    kind: GeometryKind,
    extents: Vec<usize>,
    positions: Vec<Vector3<f64>>,
    field_direction: Vector3<f64>,
}

impl DipoleGeometry {
    /// Arbitrary positions. The field direction is normalized; positions must
    /// be pairwise distinct.
    pub fn custom(positions: Vec<Vector3<f64>>, field_direction: Vector3<f64>) -> Result<Self> {
        let field_direction = normalize_field(field_direction)?;
        check_distinct(&positions)?;
        let n = positions.len();
        Ok(DipoleGeometry {
            kind: GeometryKind::Custom,
            extents: vec![n],
            positions,
            field_direction,
        })
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn field_direction(&self) -> &Vector3<f64> {
        &self.field_direction
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Smallest distance between any two sites, `None` for fewer than two.
    pub fn min_distance(&self) -> Option<f64> {
        pair_distances(&self.positions).map(|(_, _, d)| d).reduce(f64::min)
    }
}

fn pair_distances(positions: &[Vector3<f64>]) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    (0..positions.len()).flat_map(move |i| {
        ((i + 1)..positions.len()).map(move |j| (i, j, (positions[j] - positions[i]).norm()))
    })
}

fn normalize_field(field: Vector3<f64>) -> Result<Vector3<f64>> {
    let norm = field.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::InvalidInput(
            "field direction must be a nonzero finite vector".into(),
        ));
    }
    let unit = field / norm;
    debug_assert!((unit.norm() - 1.0).abs() < UNIT_NORM_TOL);
    Ok(unit)
}

fn check_distinct(positions: &[Vector3<f64>]) -> Result<()> {
    if let Some((i, j, _)) = pair_distances(positions).find(|&(_, _, d)| !(d > 0.0)) {
        return Err(Error::InvalidGeometry(format!(
            "sites {} and {} coincide",
            i + 1,
            j + 1
        )));
    }
    Ok(())
}

/// Lays out a regular array on the unit-spaced integer lattice.
///
/// Extents are given as `[nx]`, `[nx, ny]` or `[nx, ny, nz]` for chains,
/// rectangles and cubic blocks respectively. Sites are ordered
/// lexicographically by `(z, y, x)`, so `x` varies fastest and the first two
/// sites are always neighbours along `x`.
pub fn build_geometry(
    kind: GeometryKind,
    extents: &[usize],
    field_direction: Vector3<f64>,
) -> Result<DipoleGeometry> {
    build_geometry_with_limit(kind, extents, field_direction, DEFAULT_MAX_DIPOLES)
}

/// [`build_geometry`] with an explicit dipole-count limit.
pub fn build_geometry_with_limit(
    kind: GeometryKind,
    extents: &[usize],
    field_direction: Vector3<f64>,
    max_dipoles: usize,
) -> Result<DipoleGeometry> {
    let dims = kind.dimensions().ok_or_else(|| {
        Error::InvalidInput("custom geometries are built with DipoleGeometry::custom".into())
    })?;
    if extents.len() != dims {
        return Err(Error::InvalidInput(format!(
            "{kind:?} geometry needs {dims} extent(s), got {}",
            extents.len()
        )));
    }
    if extents.contains(&0) {
        return Err(Error::InvalidInput("extents must be positive".into()));
    }
    let field_direction = normalize_field(field_direction)?;

    let requested = extents
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .unwrap_or(usize::MAX);
    if requested > max_dipoles {
        return Err(Error::SizeLimit {
            requested,
            limit: max_dipoles,
        });
    }

    let nx = extents[0];
    let ny = extents.get(1).copied().unwrap_or(1);
    let nz = extents.get(2).copied().unwrap_or(1);
    let mut positions = Vec::with_capacity(requested);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                positions.push(Vector3::new(x as f64, y as f64, z as f64));
            }
        }
    }

    Ok(DipoleGeometry {
        kind,
        extents: extents.to_vec(),
        positions,
        field_direction,
    })
}

/// Options controlling how the coupling matrix is assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOptions {
    /// Pair (0-based) whose coupling magnitude defines the energy unit.
    /// `None` selects the lowest-indexed pair at the minimum separation.
    pub reference_pair: Option<(usize, usize)>,
    /// Pairs farther apart than this are dropped. Infinite by default.
    pub cutoff: f64,
}

impl Default for CouplingOptions {
    fn default() -> Self {
        CouplingOptions {
            reference_pair: None,
            cutoff: f64::INFINITY,
        }
    }
}

/// Symmetric matrix of dimensionless couplings, in units of the reference
/// coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    values: DMatrix<f64>,
    reference_pair: Option<(usize, usize)>,
    reference_raw: f64,
}

impl CouplingMatrix {
    /// Wraps an explicit coupling matrix. The matrix must be exactly
    /// symmetric with a zero diagonal and the reference entry must have unit
    /// magnitude.
    pub fn from_matrix(values: DMatrix<f64>, reference_pair: (usize, usize)) -> Result<Self> {
        let n = values.nrows();
        if values.ncols() != n {
            return Err(Error::InvalidInput("coupling matrix must be square".into()));
        }
        let (a, b) = reference_pair;
        if a == b || a >= n || b >= n {
            return Err(Error::InvalidPair(a + 1, b + 1));
        }
        for i in 0..n {
            if values[(i, i)] != 0.0 {
                return Err(Error::InvalidInput("coupling diagonal must be zero".into()));
            }
            for j in 0..i {
                if values[(i, j)] != values[(j, i)] {
                    return Err(Error::InvalidInput("coupling matrix must be symmetric".into()));
                }
            }
        }
        if (values[(a, b)].abs() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(
                "reference coupling must have unit magnitude".into(),
            ));
        }
        Ok(CouplingMatrix {
            values,
            reference_pair: Some(reference_pair),
            reference_raw: 1.0,
        })
    }

    /// `n` dipoles with every coupling zero. Such a matrix has no reference
    /// pair; it exists for single-dipole systems and decoupled limits.
    pub fn uncoupled(n: usize) -> Self {
        CouplingMatrix {
            values: DMatrix::zeros(n, n),
            reference_pair: None,
            reference_raw: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// 0-based indices of the pair that defines the energy unit.
    pub fn reference_pair(&self) -> Option<(usize, usize)> {
        self.reference_pair
    }

    /// Signed raw coupling `(1 − 3cos²θ)/r³` of the reference pair.
    pub fn reference_raw(&self) -> f64 {
        self.reference_raw
    }
}

/// Raw angular/distance factors `(1 − 3cos²θ_ij)/|r_ij|³`, before any
/// normalization or cutoff.
pub fn raw_couplings(geometry: &DipoleGeometry) -> Result<DMatrix<f64>> {
    let positions = geometry.positions();
    let field = geometry.field_direction();
    let n = positions.len();
    let mut raw = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = positions[j] - positions[i];
            let dist = r.norm();
            if !(dist > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "sites {} and {} coincide",
                    i + 1,
                    j + 1
                )));
            }
            let cos = r.dot(field) / dist;
            let value = (1.0 - 3.0 * cos * cos) / (dist * dist * dist);
            raw[(i, j)] = value;
            raw[(j, i)] = value;
        }
    }
    Ok(raw)
}

/// Coupling matrix with default options: all pairs, reference pair chosen
/// as the lowest-indexed nearest neighbours.
pub fn coupling_matrix(geometry: &DipoleGeometry) -> Result<CouplingMatrix> {
    coupling_matrix_with(geometry, &CouplingOptions::default())
}

pub fn coupling_matrix_with(
    geometry: &DipoleGeometry,
    options: &CouplingOptions,
) -> Result<CouplingMatrix> {
    let n = geometry.len();
    if n < 2 {
        return Err(Error::InvalidGeometry(
            "at least two dipoles are needed for couplings".into(),
        ));
    }
    let mut raw = raw_couplings(geometry)?;

    let reference_pair = match options.reference_pair {
        Some((a, b)) => {
            if a == b || a >= n || b >= n {
                return Err(Error::InvalidPair(a + 1, b + 1));
            }
            (a.min(b), a.max(b))
        }
        None => nearest_pair(geometry),
    };
    let reference_raw = raw[reference_pair];
    let reference_dist = (geometry.positions()[reference_pair.1] - geometry.positions()[reference_pair.0]).norm();
    // Compare the angular factor alone; at the magic angle it is a rounding residue.
    if (reference_raw * reference_dist.powi(3)).abs() < MAGIC_ANGLE_TOL {
        return Err(Error::DegenerateReference(
            reference_pair.0 + 1,
            reference_pair.1 + 1,
        ));
    }

    let positions = geometry.positions();
    let scale = reference_raw.abs();
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (positions[j] - positions[i]).norm();
            let value = if dist > options.cutoff {
                0.0
            } else {
                raw[(i, j)] / scale
            };
            raw[(i, j)] = value;
            raw[(j, i)] = value;
        }
    }

    Ok(CouplingMatrix {
        values: raw,
        reference_pair: Some(reference_pair),
        reference_raw,
    })
}

fn nearest_pair(geometry: &DipoleGeometry) -> (usize, usize) {
    let min = geometry.min_distance().unwrap_or(0.0);
    // Lattice distances are exact, but custom positions may carry rounding.
    let tol = 1e-12 * min.max(1.0);
    pair_distances(geometry.positions())
        .find(|&(_, _, d)| d <= min + tol)
        .map(|(i, j, _)| (i, j))
        .unwrap_or((0, 1))
}

/// Debye in coulomb-metres.
pub const DEBYE: f64 = 3.335_640_952e-30;
/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_818_8e-12;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Laboratory parameters of a dipole array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    dipole_moment_debye: f64,
    field_v_per_m: f64,
    spacing_m: f64,
}

impl PhysicalParams {
    pub fn new(dipole_moment_debye: f64, field_v_per_m: f64, spacing_m: f64) -> Result<Self> {
        for (name, v) in [
            ("dipole moment", dipole_moment_debye),
            ("field magnitude", field_v_per_m),
            ("spacing", spacing_m),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(PhysicalParams {
            dipole_moment_debye,
            field_v_per_m,
            spacing_m,
        })
    }

    pub fn dipole_moment_debye(&self) -> f64 {
        self.dipole_moment_debye
    }

    pub fn field_v_per_m(&self) -> f64 {
        self.field_v_per_m
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }
}

/// An energy expressed in joules and as an equivalent temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energy {
    pub joules: f64,
    pub kelvin: f64,
}

impl Energy {
    fn from_joules(joules: f64) -> Self {
        Energy {
            joules,
            kelvin: joules / BOLTZMANN,
        }
    }
}

/// Site splitting and nearest-neighbour coupling of a physical array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelScales {
    /// `ħω = p·E`.
    pub omega: Energy,
    /// Angular transition frequency `ω`, rad/s.
    pub omega_angular: f64,
    /// `ħΩ = p² / (4πε₀ d³)`.
    pub coupling: Energy,
    /// Dimensionless switch parameter `ω/Ω`.
    pub ratio: f64,
}

/// Converts laboratory parameters into the model's energy scales (SI units,
/// dipole aligned with the field).
pub fn physical_to_model(params: &PhysicalParams) -> ModelScales {
    let p = params.dipole_moment_debye * DEBYE;
    let omega = p * params.field_v_per_m;
    let d = params.spacing_m;
    let coupling = p * p / (4.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * d * d * d);
    ModelScales {
        omega: Energy::from_joules(omega),
        omega_angular: omega / HBAR,
        coupling: Energy::from_joules(coupling),
        ratio: omega / coupling,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ez() -> Vector3<f64> {
        Vector3::z()
    }

    #[test]
    fn nine_site_chain_is_collinear_and_unit_spaced() {
        let g = build_geometry(GeometryKind::Chain, &[9], ez()).unwrap();
        assert_eq!(g.len(), 9);
        for (i, p) in g.positions().iter().enumerate() {
            assert_eq!(*p, Vector3::new(i as f64, 0.0, 0.0));
        }
    }

    #[test]
    fn single_site_chain_has_no_couplings() {
        let g = build_geometry(GeometryKind::Chain, &[1], Vector3::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.min_distance().is_none());
        assert!(matches!(coupling_matrix(&g), Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn cube_corners_in_zyx_order() {
        let g = build_geometry(GeometryKind::Cubic, &[2, 2, 2], ez()).unwrap();
        let expected: Vec<_> = [
            (0, 0, 0),
            (1, 0, 0),
            (0, 1, 0),
            (1, 1, 0),
            (0, 0, 1),
            (1, 0, 1),
            (0, 1, 1),
            (1, 1, 1),
        ]
        .iter()
        .map(|&(x, y, z)| Vector3::new(x as f64, y as f64, z as f64))
        .collect();
        assert_eq!(g.positions(), &expected[..]);
    }

    #[test]
    fn field_direction_is_normalized() {
        let g = build_geometry(GeometryKind::Chain, &[3], Vector3::new(0.0, 3.0, 4.0)).unwrap();
        assert!((g.field_direction().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_zero_field_and_oversized_arrays() {
        assert!(matches!(
            build_geometry(GeometryKind::Chain, &[4], Vector3::zeros()),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            build_geometry(GeometryKind::Rectangular, &[4, 4], ez()),
            Err(Error::SizeLimit {
                requested: 16,
                limit: 14
            })
        ));
        assert!(build_geometry(GeometryKind::Chain, &[0], ez()).is_err());
        assert!(build_geometry(GeometryKind::Cubic, &[2, 2], ez()).is_err());
    }

    #[test]
    fn coincident_custom_sites_are_rejected() {
        let p = vec![Vector3::zeros(), Vector3::x(), Vector3::zeros()];
        assert!(matches!(
            DipoleGeometry::custom(p, ez()),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn pair_along_field_has_raw_factor_minus_two() {
        let g = DipoleGeometry::custom(vec![Vector3::zeros(), Vector3::z()], ez()).unwrap();
        let raw = raw_couplings(&g).unwrap();
        assert_eq!(raw[(0, 1)], -2.0);
        let c = coupling_matrix(&g).unwrap();
        assert_eq!(c.get(0, 1), -1.0);
        assert_eq!(c.reference_raw(), -2.0);
    }

    #[test]
    fn magic_angle_zeroes_coupling() {
        let cos = 1.0 / 3f64.sqrt();
        let sin = (1.0 - cos * cos).sqrt();
        let g = DipoleGeometry::custom(
            vec![Vector3::zeros(), Vector3::new(sin, 0.0, cos), Vector3::new(5.0, 0.0, 0.0)],
            ez(),
        )
        .unwrap();
        let raw = raw_couplings(&g).unwrap();
        assert!(raw[(0, 1)].abs() < 1e-15);

        let opts = CouplingOptions {
            reference_pair: Some((0, 1)),
            ..Default::default()
        };
        assert!(matches!(
            coupling_matrix_with(&g, &opts),
            Err(Error::DegenerateReference(1, 2))
        ));
    }

    #[test]
    fn chain_perpendicular_to_field_decays_as_inverse_cube() {
        let g = build_geometry(GeometryKind::Chain, &[6], ez()).unwrap();
        let c = coupling_matrix(&g).unwrap();
        assert_eq!(c.reference_pair(), Some((0, 1)));
        for i in 0..6 {
            assert_eq!(c.get(i, i), 0.0);
            for j in 0..6 {
                if i != j {
                    let d = (i as f64 - j as f64).abs();
                    assert!((c.get(i, j) - 1.0 / (d * d * d)).abs() < 1e-15);
                }
            }
        }
        assert_eq!(c.get(0, 2), c.get(0, 1) / 8.0);
    }

    #[test]
    fn square_lattice_with_perpendicular_field_is_all_positive() {
        let g = build_geometry(GeometryKind::Rectangular, &[3, 3], ez()).unwrap();
        let c = coupling_matrix(&g).unwrap();
        let pos = g.positions();
        for i in 0..9 {
            for j in (i + 1)..9 {
                let r = (pos[j] - pos[i]).norm();
                assert!(c.get(i, j) > 0.0);
                assert!((c.get(i, j) - 1.0 / (r * r * r)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cutoff_drops_distant_pairs() {
        let g = build_geometry(GeometryKind::Chain, &[4], ez()).unwrap();
        let opts = CouplingOptions {
            cutoff: 1.5,
            ..Default::default()
        };
        let c = coupling_matrix_with(&g, &opts).unwrap();
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(0, 2), 0.0);
        assert_eq!(c.get(0, 3), 0.0);
    }

    #[test]
    fn from_matrix_validates() {
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        assert!(CouplingMatrix::from_matrix(m.clone(), (0, 1)).is_ok());
        m[(0, 2)] = 0.5;
        assert!(CouplingMatrix::from_matrix(m.clone(), (0, 1)).is_err());
        assert!(CouplingMatrix::from_matrix(DMatrix::zeros(2, 2), (0, 1)).is_err());
    }

    #[test]
    fn feasibility_numbers() {
        // Ω/k_B = p² / (4πε₀ d³ k_B) with p = 3 D, d = 10 nm, evaluated by hand:
        // p = 1.000692e-29 C·m, p² = 1.001385e-58, 4πε₀ = 1.112650e-10,
        // d³ = 1e-24  →  Ω = 9.000000e-25 J  →  0.0651867 K.
        let params = PhysicalParams::new(3.0, 1e5, 10e-9).unwrap();
        let s = physical_to_model(&params);
        assert!((s.coupling.kelvin - 0.065_186_7).abs() < 1e-6, "{s:?}");
        // ω = pE = 1.000692e-24 J  →  ratio 1.111880.
        assert!((s.ratio - 1.111_88).abs() < 1e-4, "{s:?}");
        assert!((s.omega.kelvin - 0.072_480).abs() < 1e-5, "{s:?}");
    }

    #[test]
    fn doubling_spacing_multiplies_ratio_by_eight() {
        let a = physical_to_model(&PhysicalParams::new(2.0, 3e5, 7e-9).unwrap());
        let b = physical_to_model(&PhysicalParams::new(2.0, 3e5, 14e-9).unwrap());
        assert!((b.ratio / a.ratio - 8.0).abs() < 1e-12);
    }

    #[test]
    fn physical_params_must_be_positive() {
        assert!(PhysicalParams::new(0.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, f64::NAN).is_err());
    }
}
