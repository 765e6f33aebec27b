//! Argument parsing and dispatch for the `dipswitch` binary.
//!
//! Dipole indices are 1-based on the command line and 0-based everywhere else;
//! [`parse_args`] does the conversion.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dipole_switch::geometry::{coupling_matrix, physical_to_model, GeometryKind, PhysicalParams};
use dipole_switch::prelude::Vector3;
use dipole_switch::spectral::Beta;
use dipole_switch::sweep::{
    evaluate_point, format_sig9, run_sweep, spectrum_at, transitions_path, write_atomic,
    write_rows, write_transitions, GeometrySpec, PairSelection, SweepConfig, SweepResult,
    SweepRow, XRange, DEFAULT_FIDELITY_THRESHOLD,
};
use log::{debug, info};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad command line; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// `--help` or `--version` output; exit code 0.
    #[error("{0}")]
    Info(String),
    /// Computation or IO failure; exit code 1.
    #[error(transparent)]
    Compute(#[from] dipole_switch::Error),
    #[error("writing output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Info(_) => EXIT_OK,
            CliError::Compute(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for {flag}: {msg}"))
}

#[derive(Debug, Parser)]
#[command(name = "dipswitch", version, about = "Entanglement switching in arrays of polar molecules")]
struct Cli {
    /// Show debug output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Suppress progress output.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: RawCommand,
}

#[derive(Debug, Subcommand)]
enum RawCommand {
    /// Sweep ω/Ω and write pairwise concurrence to a CSV file.
    Sweep {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        x_min: f64,
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        x_max: f64,
        #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
        x_step: f64,
        /// Temperature kT in units of ħΩ; repeat for several.
        #[arg(long = "kt", default_values_t = [1e-4], allow_negative_numbers = true)]
        kt: Vec<f64>,
        /// `all` or a list like `1:2,1:3`.
        #[arg(long, default_value = "all")]
        pairs: String,
        /// Fidelity threshold below which adjacent ground states count as a transition.
        #[arg(long, default_value_t = DEFAULT_FIDELITY_THRESHOLD, allow_negative_numbers = true)]
        threshold: f64,
        /// Skip transition detection.
        #[arg(long)]
        no_transitions: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the energy spectrum at one value of ω/Ω.
    Spectrum {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
    },
    /// Print pairwise concurrence at one value of ω/Ω.
    Point {
        #[command(flatten)]
        geometry: GeometryArgs,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long = "kt", default_values_t = [1e-4], allow_negative_numbers = true)]
        kt: Vec<f64>,
        #[arg(long, default_value = "all")]
        pairs: String,
    },
    /// Convert laboratory parameters into ω, Ω and their ratio.
    Feasibility {
        /// Dipole moment in Debye.
        #[arg(long, allow_negative_numbers = true)]
        dipole: f64,
        /// Field magnitude in V/m.
        #[arg(long, allow_negative_numbers = true)]
        field: f64,
        /// Lattice spacing in metres.
        #[arg(long, allow_negative_numbers = true)]
        spacing: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GeometryArg {
    Chain,
    Rect,
    Cubic,
}

impl From<GeometryArg> for GeometryKind {
    fn from(g: GeometryArg) -> Self {
        match g {
            GeometryArg::Chain => GeometryKind::Chain,
            GeometryArg::Rect => GeometryKind::Rectangular,
            GeometryArg::Cubic => GeometryKind::Cubic,
        }
    }
}

#[derive(Debug, Args)]
struct GeometryArgs {
    #[arg(long, value_enum, default_value = "chain")]
    geometry: GeometryArg,
    /// Sites per axis, e.g. `9`, `2,4` or `2,2,2`.
    #[arg(long)]
    extents: String,
    /// Field direction `x,y,z`; defaults to `0,0,1`.
    #[arg(long, allow_hyphen_values = true)]
    field_dir: Option<String>,
}

/// A validated command line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliInvocation {
    pub command: Command,
    pub verbosity: Verbosity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verbosity {
    Quiet,
    Normal,
    Debug,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Sweep {
        config: SweepConfig,
        out: PathBuf,
    },
    Spectrum {
        geometry: GeometrySpec,
        x: f64,
    },
    Point {
        geometry: GeometrySpec,
        x: f64,
        temperatures: Vec<f64>,
        pairs: PairSelection,
    },
    Feasibility(PhysicalParams),
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| usage(flag, format!("cannot parse {part:?}")))
        })
        .collect()
}

fn geometry_spec(args: &GeometryArgs) -> Result<GeometrySpec, CliError> {
    let kind = GeometryKind::from(args.geometry);
    let extents: Vec<usize> = parse_list("--extents", &args.extents)?;
    let expected = kind.dimensions().unwrap_or(extents.len());
    if extents.len() != expected {
        return Err(usage(
            "--extents",
            format!("{:?} geometry takes {expected} extent(s), got {}", args.geometry, extents.len()),
        ));
    }
    let field_direction = match &args.field_dir {
        None => Vector3::z(),
        Some(s) => {
            let v: Vec<f64> = parse_list("--field-dir", s)?;
            if v.len() != 3 {
                return Err(usage("--field-dir", "expected three components x,y,z"));
            }
            let v = Vector3::new(v[0], v[1], v[2]);
            if !(v.norm() > 0.0 && v.norm().is_finite()) {
                return Err(usage("--field-dir", "direction must be a finite nonzero vector"));
            }
            v
        }
    };
    let spec = GeometrySpec {
        kind,
        extents,
        field_direction,
    };
    spec.build().map_err(|e| usage("--extents", e))?;
    Ok(spec)
}

/// Parses `1:2,3:4` into 0-based pairs.
fn parse_pairs(s: &str, n: usize) -> Result<PairSelection, CliError> {
    if s.trim() == "all" {
        return Ok(PairSelection::All);
    }
    let mut pairs = Vec::new();
    for part in s.split(',') {
        let (a, b) = part
            .split_once(':')
            .ok_or_else(|| usage("--pairs", format!("expected i:j, got {part:?}")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&i| (1..=n).contains(&i))
                .ok_or_else(|| usage("--pairs", format!("index {t:?} is not in 1..={n}")))
        };
        let (i, j) = (parse(a)?, parse(b)?);
        if i == j {
            return Err(usage("--pairs", format!("pair {part:?} repeats a dipole")));
        }
        pairs.push((i - 1, j - 1));
    }
    Ok(PairSelection::List(pairs))
}

fn check_temperatures(kt: &[f64]) -> Result<(), CliError> {
    match kt.iter().find(|t| t.is_nan() || **t < 0.0) {
        Some(t) => Err(usage("--kt", format!("temperature must be nonnegative, got {t}"))),
        None => Ok(()),
    }
}

fn check_finite(flag: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(usage(flag, format!("expected a finite number, got {v}")))
    }
}

/// Parses and validates a full argument vector, program name included.
pub fn parse_args<I, T>(argv: I) -> Result<CliInvocation, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            CliError::Info(e.render().to_string())
        }
        _ => CliError::Usage(e.render().to_string()),
    })?;
    let verbosity = match (cli.quiet, cli.verbose) {
        (true, _) => Verbosity::Quiet,
        (false, 0) => Verbosity::Normal,
        (false, _) => Verbosity::Debug,
    };

    let command = match cli.command {
        RawCommand::Sweep {
            geometry,
            x_min,
            x_max,
            x_step,
            kt,
            pairs,
            threshold,
            no_transitions,
            out,
        } => {
            let geometry = geometry_spec(&geometry)?;
            let n = geometry.extents.iter().product();
            check_finite("--x-min", x_min)?;
            check_finite("--x-max", x_max)?;
            if !(x_step > 0.0 && x_step.is_finite()) {
                return Err(usage("--x-step", format!("step must be positive, got {x_step}")));
            }
            let x_range = XRange::new(x_min, x_max, x_step).map_err(|e| usage("--x-max", e))?;
            check_temperatures(&kt)?;
            if !(threshold > 0.0 && threshold <= 1.0) {
                return Err(usage("--threshold", format!("must lie in (0, 1], got {threshold}")));
            }
            let config = SweepConfig {
                pairs: parse_pairs(&pairs, n)?,
                geometry,
                x_range,
                temperatures: kt,
                transition_detection: (!no_transitions).then_some(threshold),
            };
            config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
            Command::Sweep { config, out }
        }
        RawCommand::Spectrum { geometry, x } => {
            check_finite("--x", x)?;
            Command::Spectrum {
                geometry: geometry_spec(&geometry)?,
                x,
            }
        }
        RawCommand::Point {
            geometry,
            x,
            kt,
            pairs,
        } => {
            let geometry = geometry_spec(&geometry)?;
            let n = geometry.extents.iter().product();
            check_finite("--x", x)?;
            check_temperatures(&kt)?;
            Command::Point {
                pairs: parse_pairs(&pairs, n)?,
                geometry,
                x,
                temperatures: kt,
            }
        }
        RawCommand::Feasibility {
            dipole,
            field,
            spacing,
        } => {
            for (flag, v) in [("--dipole", dipole), ("--field", field), ("--spacing", spacing)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(usage(flag, format!("must be positive, got {v}")));
                }
            }
            Command::Feasibility(PhysicalParams::new(dipole, field, spacing)?)
        }
    };
    Ok(CliInvocation { command, verbosity })
}

/// Runs a validated invocation, writing data to `out`.
pub fn execute<W: Write>(invocation: &CliInvocation, out: &mut W) -> Result<(), CliError> {
    match &invocation.command {
        Command::Sweep { config, out: path } => {
            info!(
                "sweeping {} points x {} temperature(s)",
                config.x_range.len(),
                config.temperatures.len()
            );
            let start = Instant::now();
            let result = run_sweep(config)?;
            debug!("sweep finished in {:.2?}", start.elapsed());
            let mut rows = Vec::new();
            write_rows(&result, &mut rows)?;
            write_atomic(path, &rows)?;
            info!("wrote {} rows to {}", result.rows.len(), path.display());
            if config.transition_detection.is_some() {
                let mut transitions = Vec::new();
                write_transitions(&result, &mut transitions)?;
                let tpath = transitions_path(path);
                write_atomic(&tpath, &transitions)?;
                info!("wrote {} transitions to {}", result.transitions.len(), tpath.display());
            }
        }
        Command::Spectrum { geometry, x } => {
            let couplings = coupling_matrix(&geometry.build()?)?;
            let spec = spectrum_at(&couplings, *x)?;
            writeln!(out, "energy,excitations")?;
            for (e, k) in spec.eigenvalues().iter().zip(spec.sector_labels()) {
                let k = k.map(|k| k.to_string()).unwrap_or_default();
                writeln!(out, "{},{k}", format_sig9(*e))?;
            }
        }
        Command::Point {
            geometry,
            x,
            temperatures,
            pairs,
        } => {
            let built = geometry.build()?;
            let couplings = coupling_matrix(&built)?;
            let pairs = pairs.resolve(built.len())?;
            let betas = temperatures
                .iter()
                .map(|&kt| Beta::from_kt(kt))
                .collect::<Result<Vec<_>, _>>()?;
            let values = evaluate_point(&couplings, *x, &betas, &pairs)?;
            let rows = temperatures
                .iter()
                .zip(values)
                .flat_map(|(&kt, per_pair)| {
                    pairs.iter().zip(per_pair).map(move |(&(i, j), concurrence)| SweepRow {
                        x: *x,
                        kt,
                        i,
                        j,
                        concurrence,
                    })
                })
                .collect();
            let result = SweepResult {
                rows,
                transitions: Vec::new(),
            };
            write_rows(&result, &mut *out)?;
        }
        Command::Feasibility(params) => {
            let s = physical_to_model(params);
            writeln!(out, "quantity,value,unit")?;
            for (name, value, unit) in [
                ("hbar_omega", s.omega.joules, "J"),
                ("omega_temperature", s.omega.kelvin, "K"),
                ("omega_angular", s.omega_angular, "rad/s"),
                ("hbar_Omega", s.coupling.joules, "J"),
                ("Omega_temperature", s.coupling.kelvin, "K"),
                ("ratio", s.ratio, "1"),
            ] {
                writeln!(out, "{name},{},{unit}", format_sig9(value))?;
            }
        }
    }
    Ok(())
}

/// Runs an invocation against standard output and returns the exit code.
pub fn run(invocation: &CliInvocation) -> i32 {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(invocation, &mut lock).and_then(|()| lock.flush().map_err(CliError::from)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
