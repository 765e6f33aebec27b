//! Parameter sweeps over `x = ω/Ω` and temperature.
//!
//! Each grid point is diagonalized once; the spectrum is then reused for
//! every requested temperature. Grid points run in parallel and results are
//! gathered by index, so output order never depends on scheduling.
//!
//! Switching points are located from the ground state alone: adjacent grid
//! points whose ground states have overlap below a fidelity threshold
//! bracket a transition, which is then refined by bisection on which level
//! is lowest.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::entanglement::{concurrence, reduce_to_pair};
use crate::error::{Error, Result};
use crate::geometry::{build_geometry, coupling_matrix, CouplingMatrix, DipoleGeometry, GeometryKind};
use crate::hamiltonian::{build_uniform, BasisState, Layout};
use crate::spectral::{diagonalize, thermal_state, Beta, SpectralDecomposition};

/// Default ground-state fidelity below which adjacent grid points are taken
/// to straddle a transition.
pub const DEFAULT_FIDELITY_THRESHOLD: f64 = 0.5;

/// Width of the bracket at which bisection stops.
pub const BISECTION_TOL: f64 = 1e-7;

/// Adjacent-point concurrence change reported as a `jump` annotation.
pub const JUMP_THRESHOLD: f64 = 0.05;

/// Geometry parameters of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySpec {
    pub kind: GeometryKind,
    pub extents: Vec<usize>,
    pub field_direction: Vector3<f64>,
}

impl GeometrySpec {
    /// Chain along `x` with the field along `z`, perpendicular to the chain.
    pub fn chain(n: usize) -> Self {
        GeometrySpec {
            kind: GeometryKind::Chain,
            extents: vec![n],
            field_direction: Vector3::z(),
        }
    }

    pub fn build(&self) -> Result<DipoleGeometry> {
        build_geometry(self.kind, &self.extents, self.field_direction)
    }
}

/// Evenly spaced grid `start, start + step, …` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XRange {
    start: f64,
    stop: f64,
    step: f64,
}

impl XRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(Error::InvalidConfig("x range must be finite".into()));
        }
        if !(step > 0.0) {
            return Err(Error::InvalidConfig(format!("x step must be positive, got {step}")));
        }
        if !(start < stop) {
            return Err(Error::InvalidConfig(format!(
                "x range start {start} must be below stop {stop}"
            )));
        }
        Ok(XRange { start, stop, step })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        // The small slack keeps `stop` on the grid despite rounding in the division.
        ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid points, computed as `start + k·step` to avoid accumulated drift.
    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.start + k as f64 * self.step).collect()
    }
}

impl Default for XRange {
    fn default() -> Self {
        XRange {
            start: 0.0,
            stop: 2.0,
            step: 1e-3,
        }
    }
}

/// Dipole pairs (0-based) whose concurrence is recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSelection {
    All,
    List(Vec<(usize, usize)>),
}

impl PairSelection {
    /// Concrete pairs for an `n`-dipole array, each with the lower index first.
    pub fn resolve(&self, n: usize) -> Result<Vec<(usize, usize)>> {
        let pairs: Vec<_> = match self {
            PairSelection::All => (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .collect(),
            PairSelection::List(list) => {
                for &(i, j) in list {
                    if i == j || i >= n || j >= n {
                        return Err(Error::InvalidPair(i + 1, j + 1));
                    }
                }
                list.iter().map(|&(i, j)| (i.min(j), i.max(j))).collect()
            }
        };
        if pairs.is_empty() {
            return Err(Error::InvalidConfig("no dipole pairs selected".into()));
        }
        Ok(pairs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub geometry: GeometrySpec,
    pub x_range: XRange,
    /// Temperatures `kT` in units of `ħΩ`; `0` and `∞` are allowed.
    pub temperatures: Vec<f64>,
    pub pairs: PairSelection,
    /// Fidelity threshold for transition detection; `None` disables it.
    pub transition_detection: Option<f64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() {
            return Err(Error::InvalidConfig("no temperatures given".into()));
        }
        if let Some(&kt) = self.temperatures.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "temperatures must be nonnegative, got {kt}"
            )));
        }
        if let Some(threshold) = self.transition_detection {
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "fidelity threshold must lie in (0, 1], got {threshold}"
                )));
            }
        }
        if let PairSelection::List(list) = &self.pairs {
            if list.is_empty() {
                return Err(Error::InvalidConfig("no dipole pairs selected".into()));
            }
        }
        Ok(())
    }
}

/// One concurrence sample; `i < j` are 0-based dipole indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub kt: f64,
    pub i: usize,
    pub j: usize,
    pub concurrence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransitionKind {
    /// The lowest level changes excitation sector.
    Crossing,
    /// Ground state changes character within one sector.
    Avoided,
    /// Ground space stays degenerate over an interval; `x*` is its start.
    Degenerate,
    /// Concurrence changes by more than [`JUMP_THRESHOLD`] between adjacent
    /// grid points with no detected level change in between.
    Jump,
}

impl fmt::Display for TransitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransitionKind::Crossing => "crossing",
            TransitionKind::Avoided => "avoided",
            TransitionKind::Degenerate => "degenerate",
            TransitionKind::Jump => "jump",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub x_star: f64,
    pub kt: f64,
    pub kind: TransitionKind,
    /// End of the interval for [`TransitionKind::Degenerate`].
    pub x_end: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    /// Sorted by `(kT, x, i, j)`.
    pub rows: Vec<SweepRow>,
    /// Sorted by `(kT, x*)`.
    pub transitions: Vec<Transition>,
}

/// Spectrum of the uniform Hamiltonian at `x = ω/Ω`, always sector-blocked.
pub fn spectrum_at(couplings: &CouplingMatrix, x: f64) -> Result<SpectralDecomposition> {
    diagonalize(&build_uniform(couplings, x, Layout::Blocked)?)
}

/// Concurrences for every `(temperature, pair)` at a single `x`, indexed
/// `[temperature][pair]`. The spectrum is computed once.
pub fn evaluate_point(
    couplings: &CouplingMatrix,
    x: f64,
    betas: &[Beta],
    pairs: &[(usize, usize)],
) -> Result<Vec<Vec<f64>>> {
    let spec = spectrum_at(couplings, x)?;
    betas
        .iter()
        .map(|&beta| {
            let state = thermal_state(&spec, beta);
            pairs
                .iter()
                .map(|&(i, j)| concurrence(&reduce_to_pair(&state, i, j)?))
                .collect()
        })
        .collect()
}

fn sorted_temperatures(temperatures: &[f64]) -> Result<Vec<(f64, Beta)>> {
    let mut kts = temperatures.to_vec();
    kts.sort_by(f64::total_cmp);
    kts.into_iter().map(|kt| Ok((kt, Beta::from_kt(kt)?))).collect()
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let geometry = config.geometry.build()?;
    let couplings = coupling_matrix(&geometry)?;
    let pairs = config.pairs.resolve(geometry.len())?;
    let temps = sorted_temperatures(&config.temperatures)?;
    let betas: Vec<Beta> = temps.iter().map(|&(_, b)| b).collect();
    let xs = config.x_range.points();

    let per_x: Vec<Vec<Vec<f64>>> = xs
        .par_iter()
        .map(|&x| evaluate_point(&couplings, x, &betas, &pairs))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(xs.len() * temps.len() * pairs.len());
    for (t, &(kt, _)) in temps.iter().enumerate() {
        for (xi, &x) in xs.iter().enumerate() {
            for (p, &(i, j)) in pairs.iter().enumerate() {
                rows.push(SweepRow {
                    x,
                    kt,
                    i,
                    j,
                    concurrence: per_x[xi][t][p],
                });
            }
        }
    }

    let mut transitions = Vec::new();
    if let Some(threshold) = config.transition_detection {
        let levels = detect_on_couplings(&couplings, &config.x_range, threshold)?;
        for (t, &(kt, _)) in temps.iter().enumerate() {
            let mut here: Vec<Transition> = levels.iter().map(|tr| Transition { kt, ..*tr }).collect();
            for k in 0..xs.len().saturating_sub(1) {
                let (a, b) = (xs[k], xs[k + 1]);
                let jumped = (0..pairs.len())
                    .any(|p| (per_x[k + 1][t][p] - per_x[k][t][p]).abs() > JUMP_THRESHOLD);
                let explained = levels.iter().any(|tr| {
                    let end = tr.x_end.unwrap_or(tr.x_star);
                    end >= a && tr.x_star <= b
                });
                if jumped && !explained {
                    here.push(Transition {
                        x_star: 0.5 * (a + b),
                        kt,
                        kind: TransitionKind::Jump,
                        x_end: None,
                    });
                }
            }
            here.sort_by(|p, q| p.x_star.total_cmp(&q.x_star));
            transitions.extend(here);
        }
    }

    Ok(SweepResult { rows, transitions })
}

/// Ground-state data at one `x`: the first ground vector (sparse, ascending
/// states) and the sector labels of the whole ground space.
#[derive(Debug, Clone)]
struct GroundSample {
    x: f64,
    sectors: Vec<Option<usize>>,
    states: Vec<BasisState>,
    amplitudes: Vec<f64>,
}

impl GroundSample {
    fn at(couplings: &CouplingMatrix, x: f64) -> Result<Self> {
        let spec = spectrum_at(couplings, x)?;
        let ground = spec.ground_indices();
        let sectors = spec.sector_labels()[ground].to_vec();
        let v = spec.eigenvector(0);
        Ok(GroundSample {
            x,
            sectors,
            states: v.states().to_vec(),
            amplitudes: v.amplitudes().to_vec(),
        })
    }

    fn degenerate(&self) -> bool {
        self.sectors.len() > 1
    }

    fn sector(&self) -> Option<usize> {
        if self.degenerate() {
            None
        } else {
            self.sectors[0]
        }
    }

    fn fidelity(&self, other: &GroundSample) -> f64 {
        if let (Some(a), Some(b)) = (self.sector(), other.sector()) {
            if a != b {
                return 0.0;
            }
        }
        let (mut p, mut q, mut dot) = (0, 0, 0.0);
        while p < self.states.len() && q < other.states.len() {
            match self.states[p].cmp(&other.states[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    dot += self.amplitudes[p] * other.amplitudes[q];
                    p += 1;
                    q += 1;
                }
            }
        }
        dot.abs()
    }
}

/// Locates ground-state switching points for the geometry's uniform chain
/// Hamiltonian over `x_range`. `kt` only labels the results; the ground state
/// does not depend on temperature.
///
/// Returns refined crossing abscissas (accurate to better than `1e-6`),
/// avoided-crossing midpoints, and flagged intervals where the ground space
/// stays degenerate over more than one grid point.
pub fn detect_transitions(
    geometry: &DipoleGeometry,
    kt: f64,
    x_range: &XRange,
    fidelity_threshold: f64,
) -> Result<Vec<Transition>> {
    let couplings = coupling_matrix(geometry)?;
    let mut found = detect_on_couplings(&couplings, x_range, fidelity_threshold)?;
    for t in &mut found {
        t.kt = kt;
    }
    Ok(found)
}

fn detect_on_couplings(
    couplings: &CouplingMatrix,
    x_range: &XRange,
    threshold: f64,
) -> Result<Vec<Transition>> {
    let samples: Vec<GroundSample> = x_range
        .points()
        .par_iter()
        .map(|&x| GroundSample::at(couplings, x))
        .collect::<Result<_>>()?;

    let mut found = Vec::new();
    let mut previous: Option<&GroundSample> = None;
    let mut k = 0;
    while k < samples.len() {
        let run_end = (k..samples.len())
            .find(|&e| !samples[e].degenerate())
            .unwrap_or(samples.len());
        if run_end - k >= 2 {
            found.push(Transition {
                x_star: samples[k].x,
                kt: 0.0,
                kind: TransitionKind::Degenerate,
                x_end: Some(samples[run_end - 1].x),
            });
            // Do not compare across a degenerate interval.
            previous = None;
        }
        if run_end == samples.len() {
            break;
        }
        let current = &samples[run_end];
        if let Some(prev) = previous {
            if prev.fidelity(current) < threshold {
                refine(couplings, prev.clone(), current.clone(), threshold, &mut found)?;
            }
        }
        previous = Some(current);
        k = run_end + 1;
    }

    found.sort_by(|a, b| a.x_star.total_cmp(&b.x_star));
    found.dedup_by(|b, a| {
        a.kind == b.kind && a.x_end.is_none() && b.x_end.is_none() && (a.x_star - b.x_star).abs() < 1e-6
    });
    Ok(found)
}

/// Bisects `[a, b]`, whose ends have different ground states, down to
/// [`BISECTION_TOL`]. A midpoint that belongs to neither end splits the
/// search in two.
fn refine(
    couplings: &CouplingMatrix,
    a: GroundSample,
    b: GroundSample,
    threshold: f64,
    found: &mut Vec<Transition>,
) -> Result<()> {
    if b.x - a.x < BISECTION_TOL {
        let kind = match (a.sector(), b.sector()) {
            (Some(p), Some(q)) if p != q => TransitionKind::Crossing,
            _ => TransitionKind::Avoided,
        };
        found.push(Transition {
            x_star: 0.5 * (a.x + b.x),
            kt: 0.0,
            kind,
            x_end: None,
        });
        return Ok(());
    }

    let m = GroundSample::at(couplings, 0.5 * (a.x + b.x))?;
    if m.degenerate() {
        let touches = |s: &GroundSample| s.sector().is_some_and(|k| m.sectors.contains(&Some(k)));
        if touches(&a) && touches(&b) {
            found.push(Transition {
                x_star: m.x,
                kt: 0.0,
                kind: TransitionKind::Crossing,
                x_end: None,
            });
            return Ok(());
        }
    }

    let left = a.fidelity(&m);
    let right = m.fidelity(&b);
    let go_left = left < threshold;
    let go_right = right < threshold;
    match (go_left, go_right) {
        (true, true) => {
            refine(couplings, a, m.clone(), threshold, found)?;
            refine(couplings, m, b, threshold, found)
        }
        (true, false) => refine(couplings, a, m, threshold, found),
        (false, true) => refine(couplings, m, b, threshold, found),
        // Smooth rotation: follow the half that changes more.
        (false, false) if left <= right => refine(couplings, a, m, threshold, found),
        (false, false) => refine(couplings, m, b, threshold, found),
    }
}

/// Formats like C's `%.9g`: nine significant digits, trailing zeros
/// removed, exponent form outside `[1e-4, 1e9)`. Negative zero prints as `0`.
pub fn format_sig9(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, v);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const ROWS_HEADER: &str = "x,kT,i,j,concurrence";
pub const TRANSITIONS_HEADER: &str = "x_star,kT,kind";

/// Writes the concurrence table; dipole indices are 1-based.
pub fn write_rows<W: Write>(result: &SweepResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{ROWS_HEADER}")?;
    for r in &result.rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_sig9(r.x),
            format_sig9(r.kt),
            r.i + 1,
            r.j + 1,
            format_sig9(r.concurrence)
        )?;
    }
    out.flush()
}

pub fn write_transitions<W: Write>(result: &SweepResult, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRANSITIONS_HEADER}")?;
    for t in &result.transitions {
        writeln!(out, "{},{},{}", format_sig9(t.x_star), format_sig9(t.kt), t.kind)?;
    }
    out.flush()
}

/// `fig1.csv` → `fig1.transitions.csv`.
pub fn transitions_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.transitions.csv"))
}

/// Writes `contents` to `path` through a temporary sibling and a rename, so
/// a failure never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let name = path
        .file_name()
        .ok_or_else(|| io_err(io::Error::new(io::ErrorKind::InvalidInput, "not a file path")))?;
    let tmp = path.with_file_name(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let written = fs::write(&tmp, contents).and_then(|()| fs::rename(&tmp, path));
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

/// Writes the concurrence table to `path` and, when the result carries
/// transitions, the transition table to [`transitions_path`]. Both files are
/// written atomically.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let mut rows = Vec::new();
    write_rows(result, &mut rows).expect("writing to memory");
    let mut transitions = Vec::new();
    write_transitions(result, &mut transitions).expect("writing to memory");
    write_atomic(path, &rows)?;
    if !result.transitions.is_empty() {
        write_atomic(&transitions_path(path), &transitions)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(result: &SweepResult) -> String {
        let mut buf = Vec::new();
        write_rows(result, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.5), "0.5");
        assert_eq!(format_sig9(1e-4), "0.0001");
        assert_eq!(format_sig9(1e-5), "1e-05");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.1 + 0.2), "0.3");
        assert_eq!(format_sig9(0.6000000000000001), "0.6");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(123456789.4), "123456789");
        assert_eq!(format_sig9(1234567891.0), "1.23456789e+09");
        assert_eq!(format_sig9(0.99999999996), "1");
        assert_eq!(format_sig9(-2.5e-12), "-2.5e-12");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(f64::INFINITY), "inf");
    }

    #[test]
    fn empty_result_is_header_only() {
        assert_eq!(csv(&SweepResult::default()), "x,kT,i,j,concurrence\n");
    }

    #[test]
    fn single_row() {
        let result = SweepResult {
            rows: vec![SweepRow {
                x: 0.5,
                kt: 1e-4,
                i: 0,
                j: 1,
                concurrence: 1.0,
            }],
            transitions: vec![],
        };
        assert_eq!(csv(&result), "x,kT,i,j,concurrence\n0.5,0.0001,1,2,1\n");
    }

    #[test]
    fn x_range_grid() {
        let r = XRange::default();
        assert_eq!(r.len(), 2001);
        let p = r.points();
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1000], 1.0);
        assert_eq!(*p.last().unwrap(), 2.0);
        assert_eq!(XRange::new(0.0, 1.0, 0.3).unwrap().len(), 4);
        assert!(XRange::new(0.0, 1.0, -1.0).is_err());
        assert!(XRange::new(0.0, 1.0, 0.0).is_err());
        assert!(XRange::new(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn pair_selection() {
        assert_eq!(PairSelection::All.resolve(3).unwrap(), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(PairSelection::List(vec![(2, 0)]).resolve(3).unwrap(), vec![(0, 2)]);
        assert!(matches!(PairSelection::List(vec![]).resolve(3), Err(Error::InvalidConfig(_))));
        assert!(matches!(PairSelection::All.resolve(1), Err(Error::InvalidConfig(_))));
        assert!(matches!(PairSelection::List(vec![(0, 3)]).resolve(3), Err(Error::InvalidPair(1, 4))));
    }

    #[test]
    fn config_validation() {
        let mut config = SweepConfig {
            geometry: GeometrySpec::chain(2),
            x_range: XRange::new(0.0, 1.0, 0.5).unwrap(),
            temperatures: vec![1e-4],
            pairs: PairSelection::List(vec![]),
            transition_detection: None,
        };
        assert!(matches!(run_sweep(&config), Err(Error::InvalidConfig(_))));
        config.pairs = PairSelection::All;
        config.temperatures = vec![-1.0];
        assert!(run_sweep(&config).is_err());
        config.temperatures = vec![];
        assert!(run_sweep(&config).is_err());
        config.temperatures = vec![0.1];
        config.transition_detection = Some(1.5);
        assert!(run_sweep(&config).is_err());
    }

    #[test]
    fn two_dipole_switch() {
        let config = SweepConfig {
            geometry: GeometrySpec::chain(2),
            x_range: XRange::new(0.0, 2.0, 0.01).unwrap(),
            temperatures: vec![1e-4],
            pairs: PairSelection::All,
            transition_detection: Some(DEFAULT_FIDELITY_THRESHOLD),
        };
        let result = run_sweep(&config).unwrap();
        assert_eq!(result.rows.len(), 201);
        for r in &result.rows {
            if r.x < 0.995 {
                assert!(r.concurrence > 0.999, "{r:?}");
            } else if r.x > 1.005 {
                assert!(r.concurrence < 1e-9, "{r:?}");
            }
        }
        let crossings: Vec<_> = result
            .transitions
            .iter()
            .filter(|t| t.kind == TransitionKind::Crossing)
            .collect();
        assert_eq!(crossings.len(), 1, "{:?}", result.transitions);
        assert!((crossings[0].x_star - 1.0).abs() < 1e-6);
    }

    #[test]
    fn infinite_temperature_has_no_entanglement() {
        let config = SweepConfig {
            geometry: GeometrySpec::chain(4),
            x_range: XRange::new(0.0, 2.0, 0.25).unwrap(),
            temperatures: vec![f64::INFINITY],
            pairs: PairSelection::All,
            transition_detection: None,
        };
        for r in run_sweep(&config).unwrap().rows {
            assert_eq!(r.concurrence, 0.0);
        }
    }

    #[test]
    fn rows_sorted_by_temperature_then_x_then_pair() {
        let config = SweepConfig {
            geometry: GeometrySpec::chain(3),
            x_range: XRange::new(0.0, 1.0, 0.5).unwrap(),
            temperatures: vec![0.1, 1e-4],
            pairs: PairSelection::All,
            transition_detection: None,
        };
        let rows = run_sweep(&config).unwrap().rows;
        assert_eq!(rows.len(), 2 * 3 * 3);
        let keys: Vec<_> = rows.iter().map(|r| (r.kt, r.x, r.i, r.j)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
    }

    #[test]
    fn spectra_are_bit_identical_on_recompute() {
        let c = coupling_matrix(&GeometrySpec::chain(6).build().unwrap()).unwrap();
        assert_eq!(spectrum_at(&c, 0.731).unwrap(), spectrum_at(&c, 0.731).unwrap());
    }

    #[test]
    fn frustrated_triangle_flags_degenerate_region() {
        // Equilateral triangle, field normal to its plane: the one-excitation
        // hopping matrix has eigenvalues {2, −1, −1}, so for 0 < x < 1 the
        // ground level x − 1 is doubly degenerate; above x = 1 |000⟩ wins.
        let h = 3f64.sqrt() / 2.0;
        let geometry = DipoleGeometry::custom(
            vec![Vector3::zeros(), Vector3::x(), Vector3::new(0.5, h, 0.0)],
            Vector3::z(),
        )
        .unwrap();
        let found =
            detect_transitions(&geometry, 0.0, &XRange::new(0.5, 1.5, 0.1).unwrap(), 0.5).unwrap();
        let region = found
            .iter()
            .find(|t| t.kind == TransitionKind::Degenerate)
            .expect("degenerate interval");
        assert!((region.x_star - 0.5).abs() < 1e-12);
        assert!((region.x_end.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transitions_sibling_path() {
        assert_eq!(
            transitions_path(Path::new("out/fig1.csv")),
            PathBuf::from("out/fig1.transitions.csv")
        );
    }

    #[test]
    fn atomic_write_to_missing_directory_fails_cleanly() {
        let dir = std::env::temp_dir().join(format!("dipswitch-missing-{}", std::process::id()));
        let err = emit_csv(&SweepResult::default(), &dir.join("sub").join("x.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("x.csv"));
    }
}
