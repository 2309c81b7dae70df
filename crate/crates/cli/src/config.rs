use clap::{Args, Parser, Subcommand, ValueEnum};
use necklace::Symmetry;
use serde::Serialize;

use crate::CliError;

/// Standing waves of the cubic NLS equation on a necklace graph.
///
/// Lengths are decimal radians: pi/2 = 1.5707963267948966, pi = 3.141592653589793.
#[derive(Debug, Parser)]
#[command(name = "necklace", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band structure, flat bands and the trace table.
    Bands(BandsArgs),
    /// Iterates the period map from a scaled starting point.
    Map(MapArgs),
    /// Homoclinic orbits of the period map.
    Homoclinic(HomoclinicArgs),
    /// Bound-state profiles on the graph.
    Boundstate(BoundStateArgs),
    /// Runs the invariant checklist and reports pass/fail.
    Verify(VerifyArgs),
    /// Bound-state observables over a grid of (L, eps, symmetry).
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryArg {
    Link,
    Ring,
    Both,
}

impl SymmetryArg {
    pub fn expand(self) -> Vec<Symmetry> {
        match self {
            SymmetryArg::Link => vec![Symmetry::LinkCentered],
            SymmetryArg::Ring => vec![Symmetry::RingCentered],
            SymmetryArg::Both => Symmetry::BOTH.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Orbit,
    Shooting,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Output {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Amplitude {
    /// Decay rate eps > 0.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "lambda")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Spectral parameter lambda = -eps^2 < 0.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl Amplitude {
    pub fn resolve(&self) -> Result<f64, CliError> {
        match (self.eps, self.lambda) {
            (Some(e), None) if e > 0.0 && e.is_finite() => Ok(e),
            (Some(e), None) => Err(CliError::Usage(format!("--eps must be positive, got {e}"))),
            (None, Some(l)) if l < 0.0 && l.is_finite() => Ok((-l).sqrt()),
            (None, Some(l)) => Err(CliError::Usage(format!("--lambda must be negative, got {l}"))),
            (None, None) => Err(CliError::Usage("one of --eps or --lambda is required".into())),
            (Some(_), Some(_)) => Err(CliError::Usage("--eps and --lambda are mutually exclusive".into())),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BandsArgs {
    /// Link length.
    #[arg(long = "L", allow_hyphen_values = true)]
    #[serde(rename = "L")]
    pub l: f64,
    #[arg(long, default_value_t = 6.0)]
    pub omega_max: f64,
    /// Grid intervals for the band scan and the trace table.
    #[arg(long, default_value_t = 4000)]
    pub grid: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MapArgs {
    #[arg(long = "L", allow_hyphen_values = true)]
    #[serde(rename = "L")]
    pub l: f64,
    #[command(flatten)]
    pub amplitude: Amplitude,
    /// Scaled starting value alpha.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub alpha: f64,
    /// Scaled starting slope beta.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Iterate the inverse map instead.
    #[arg(long)]
    pub inverse: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HomoclinicArgs {
    #[arg(long = "L", allow_hyphen_values = true)]
    #[serde(rename = "L")]
    pub l: f64,
    #[command(flatten)]
    pub amplitude: Amplitude,
    #[arg(long, value_enum, default_value_t = SymmetryArg::Both)]
    pub symmetry: SymmetryArg,
    /// Points in the symmetry-curve and unstable-line tables.
    #[arg(long, default_value_t = 201)]
    pub curve_points: usize,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundStateArgs {
    #[arg(long = "L", allow_hyphen_values = true)]
    #[serde(rename = "L")]
    pub l: f64,
    #[command(flatten)]
    pub amplitude: Amplitude,
    #[arg(long, value_enum, default_value_t = SymmetryArg::Link)]
    pub symmetry: SymmetryArg,
    #[arg(long, value_enum, default_value_t = Method::Shooting)]
    pub method: Method,
    #[arg(long, default_value_t = 64)]
    pub samples_per_edge: usize,
    /// Cells on each side of the center for shooting.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Comma-separated eps values for the order checks, halving from the first.
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.02,0.01")]
    pub eps: Vec<f64>,
    /// Link length for the map and orbit checks.
    #[arg(long = "L", allow_hyphen_values = true, default_value_t = std::f64::consts::FRAC_PI_2)]
    #[serde(rename = "L")]
    pub l: f64,
    /// Negative control: flux factor used when assembling profiles.
    #[arg(long, hide = true, default_value_t = 2.0)]
    pub kirchhoff_factor: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Comma-separated link lengths.
    #[arg(long = "L", value_delimiter = ',', default_value = "1.5707963267948966")]
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    /// Comma-separated eps values.
    #[arg(long, value_delimiter = ',', default_value = "0.08,0.04,0.02")]
    pub eps: Vec<f64>,
    #[arg(long, value_enum, default_value_t = SymmetryArg::Both)]
    pub symmetry: SymmetryArg,
    #[arg(long, default_value_t = 64)]
    pub samples_per_edge: usize,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub jobs: usize,
    #[command(flatten)]
    pub output: Output,
}

pub fn check_link(l: f64) -> Result<(), CliError> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--L must be positive, got {l}")))
    }
}
