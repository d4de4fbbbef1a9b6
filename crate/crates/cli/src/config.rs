//! Run configuration: a sectioned TOML file merged with command-line flags.
//!
//! Every key in the file has a flag of the same name; flags win.
//!
//! ```toml
//! [surface]
//! surface = "cylinder"   # cylinder | cusp | genus2
//! eta = 1.0
//! alpha = 0.0
//!
//! [level]
//! k = 3
//!
//! [points]
//! t = [0.0, 0.2]
//! tau = [-1.0]
//! point = ["0,0", "0.1,-0.2"]
//! grid = 5
//!
//! [numerics]
//! method = "both"        # modes | trace | both
//! cutoff = 40.0
//! rel_tol = 1e-13
//! abs_tol = 1e-15
//! nodes = 8
//! u_max = 1.0
//! step = 0.02
//! l_prime = 12.0
//! max_elements = 2000000
//!
//! [output]
//! format = "csv"         # csv | json
//! output = "rho.csv"
//! cache_dir = ".cache"
//! require_certified = true
//! ```

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Surface {
    Cylinder,
    Cusp,
    Genus2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Modes,
    Trace,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Flags shared by every subcommand. All optional so that the config file can
/// supply them.
#[derive(Debug, Clone, Default, Args)]
pub struct Keys {
    /// Declarative config file (TOML with sections).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub surface: Option<Surface>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,

    #[arg(long)]
    pub k: Option<u32>,

    /// Cylinder coordinates t = log|z| (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Option<Vec<f64>>,
    /// Cusp coordinates τ = log|w| < 0 (comma separated).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub tau: Option<Vec<f64>>,
    /// Disk point "x,y"; repeat for several.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<Vec<String>>,
    /// Points per side of a scan or off-diagonal grid.
    #[arg(long)]
    pub grid: Option<usize>,

    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Loop cutoff R.
    #[arg(long, visible_alias = "R")]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    /// Quadrature nodes per direction (dimcheck).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub u_max: Option<f64>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub l_prime: Option<f64>,
    /// Element budget for orbit enumeration; a capped ball is uncertified.
    #[arg(long)]
    pub max_elements: Option<usize>,

    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Exit with status 3 when any result is not certified.
    #[arg(long)]
    pub require_certified: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceSection {
    surface: Option<Surface>,
    eta: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelSection {
    k: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointsSection {
    t: Option<Vec<f64>>,
    tau: Option<Vec<f64>>,
    point: Option<Vec<String>>,
    grid: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsSection {
    method: Option<Method>,
    cutoff: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    nodes: Option<usize>,
    u_max: Option<f64>,
    step: Option<f64>,
    l_prime: Option<f64>,
    max_elements: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    format: Option<Format>,
    output: Option<PathBuf>,
    cache_dir: Option<PathBuf>,
    require_certified: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    surface: SurfaceSection,
    #[serde(default)]
    level: LevelSection,
    #[serde(default)]
    points: PointsSection,
    #[serde(default)]
    numerics: NumericsSection,
    #[serde(default)]
    output: OutputSection,
}

/// Fully merged configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub surface: Option<Surface>,
    pub eta: Option<f64>,
    pub alpha: f64,
    pub k: Option<u32>,
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub point: Vec<String>,
    pub grid: Option<usize>,
    pub method: Method,
    pub cutoff: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub nodes: Option<usize>,
    pub u_max: Option<f64>,
    pub step: Option<f64>,
    pub l_prime: Option<f64>,
    pub max_elements: Option<usize>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub require_certified: bool,
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn resolve(keys: &Keys) -> Result<Self, CliError> {
        let file = match &keys.config {
            Some(p) => read_file(p)?,
            None => FileConfig::default(),
        };
        let k = keys.clone();
        Ok(RunConfig {
            surface: k.surface.or(file.surface.surface),
            eta: k.eta.or(file.surface.eta),
            alpha: k.alpha.or(file.surface.alpha).unwrap_or(0.0),
            k: k.k.or(file.level.k),
            t: k.t.or(file.points.t).unwrap_or_default(),
            tau: k.tau.or(file.points.tau).unwrap_or_default(),
            point: k.point.or(file.points.point).unwrap_or_default(),
            grid: k.grid.or(file.points.grid),
            method: k.method.or(file.numerics.method).unwrap_or(Method::Both),
            cutoff: k.cutoff.or(file.numerics.cutoff),
            rel_tol: k.rel_tol.or(file.numerics.rel_tol),
            abs_tol: k.abs_tol.or(file.numerics.abs_tol),
            nodes: k.nodes.or(file.numerics.nodes),
            u_max: k.u_max.or(file.numerics.u_max),
            step: k.step.or(file.numerics.step),
            l_prime: k.l_prime.or(file.numerics.l_prime),
            max_elements: k.max_elements.or(file.numerics.max_elements),
            format: k.format.or(file.output.format).unwrap_or(Format::Csv),
            output: k.output.or(file.output.output),
            cache_dir: k.cache_dir.or(file.output.cache_dir),
            require_certified: k.require_certified
                || file.output.require_certified.unwrap_or(false),
        })
    }

    pub fn surface(&self) -> Result<Surface, CliError> {
        self.surface
            .ok_or_else(|| CliError::Config("missing --surface".into()))
    }

    pub fn level(&self) -> Result<u32, CliError> {
        self.k.ok_or_else(|| CliError::Config("missing --k".into()))
    }

    pub fn eta(&self) -> Result<f64, CliError> {
        self.eta
            .ok_or_else(|| CliError::Config("missing --eta".into()))
    }

    pub fn series_ctl(&self) -> Result<hyperbergman::modesum::SeriesCtl, CliError> {
        let d = hyperbergman::modesum::SeriesCtl::default();
        Ok(hyperbergman::modesum::SeriesCtl::new(
            self.rel_tol.unwrap_or(d.rel_tol),
            self.abs_tol.unwrap_or(d.abs_tol),
            d.max_terms,
        )?)
    }

    /// Disk points parsed from "x,y".
    pub fn disk_points(&self) -> Result<Vec<num_complex::Complex64>, CliError> {
        self.point
            .iter()
            .map(|s| {
                let mut it = s.split(',').map(|p| p.trim().parse::<f64>());
                match (it.next(), it.next(), it.next()) {
                    (Some(Ok(x)), Some(Ok(y)), None) => Ok(num_complex::Complex64::new(x, y)),
                    _ => Err(CliError::Config(format!(
                        "point {s:?} is not of the form x,y"
                    ))),
                }
            })
            .collect()
    }
}
