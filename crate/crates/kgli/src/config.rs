//! JSON run configurations. Unknown keys are rejected so typos fail loudly
//! at exit code 2.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use kgli_core::solver::{Potentials, SpatialGrid1D};
use kgli_core::spacetime::PhysicalParams;

use crate::error::CliError;

pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub points: usize,
    pub length: f64,
    #[serde(default)]
    pub origin: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<SpatialGrid1D, CliError> {
        SpatialGrid1D::new(self.points, self.length, self.origin).map_err(|e| {
            CliError::usage(format!("bad grid: {e}"))
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub c: f64,
    pub hbar: f64,
    pub m: f64,
    pub q: f64,
}

impl ParamsConfig {
    pub fn build(&self) -> Result<PhysicalParams, CliError> {
        PhysicalParams::new(self.c, self.hbar, self.m, self.q)
            .map_err(|e| CliError::usage(format!("bad params: {e}")))
    }
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            c: 1.0,
            hbar: 1.0,
            m: 1.0,
            q: 0.0,
        }
    }
}

/// One scalar potential profile sampled on the spatial grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant { value: f64 },
    /// `amplitude * cos(2π mode x / L + phase)`
    Cosine {
        amplitude: f64,
        mode: i32,
        #[serde(default)]
        phase: f64,
    },
    /// A real field file; must match the run grid point count.
    File { path: PathBuf },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Zero
    }
}

impl PotentialSpec {
    pub fn sample(&self, grid: &SpatialGrid1D) -> Result<Vec<f64>, CliError> {
        match self {
            PotentialSpec::Zero => Ok(vec![0.0; grid.points]),
            PotentialSpec::Constant { value } => Ok(vec![*value; grid.points]),
            PotentialSpec::Cosine {
                amplitude,
                mode,
                phase,
            } => {
                let k = 2.0 * std::f64::consts::PI * *mode as f64 / grid.length();
                Ok((0..grid.points)
                    .map(|j| amplitude * (k * grid.coordinate(j) + phase).cos())
                    .collect())
            }
            PotentialSpec::File { path } => {
                let field = kgli_core::io::read_scalar_field(path)?;
                let values = field.values();
                if values.len() == grid.points {
                    Ok(values.to_vec())
                } else if field.grid().points().len() == 2
                    && field.grid().points()[1] == grid.points
                {
                    // a space-time field: take the first time row
                    Ok(values[..grid.points].to_vec())
                } else {
                    Err(CliError::usage(format!(
                        "potential file {} has {} values for a grid of {} points",
                        path.display(),
                        values.len(),
                        grid.points
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialsConfig {
    #[serde(default)]
    pub phi: PotentialSpec,
    #[serde(default)]
    pub ax: PotentialSpec,
}

impl PotentialsConfig {
    pub fn build(&self, grid: &SpatialGrid1D) -> Result<Potentials, CliError> {
        Ok(Potentials {
            phi: self.phi.sample(grid)?,
            ax: self.ax.sample(grid)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Exact plane wave with `k = 2π mode / L`.
    PlaneWave { mode: i32 },
    /// Gaussian packet on a carrier, synthesized as an exact free solution.
    Packet {
        carrier_mode: i32,
        sigma: f64,
        center: f64,
    },
    /// Superposition of exact single modes; `branch` -1 selects the
    /// negative-frequency solution.
    Modes { components: Vec<ModeComponent> },
    /// Two explicit complex field levels.
    File { level0: PathBuf, level1: PathBuf },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeComponent {
    pub amplitude: f64,
    pub mode: i32,
    #[serde(default = "default_branch")]
    pub branch: i8,
}

fn default_branch() -> i8 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub potentials: PotentialsConfig,
    pub initial: InitialSpec,
    pub steps: u64,
    /// Explicit time step; mutually exclusive with `cfl`.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Fraction of the stability bound used as the time step (default 0.9).
    #[serde(default)]
    pub cfl: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: u64,
    /// Write one field file per recorded level in addition to the assembled
    /// history (default true).
    #[serde(default = "default_true")]
    pub write_levels: bool,
}

fn default_record_every() -> u64 {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub field: PathBuf,
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
    /// Speed of light used to convert the grid's `x^0 = ct` axis into the
    /// detector's temporal resolution.
    #[serde(default = "default_c")]
    pub c: f64,
}

fn default_c() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Cyclic time-shift family of a reference density field.
    TimeShift {
        density: PathBuf,
        #[serde(default)]
        theta0: f64,
    },
    /// `P = (θ, 1-θ)`.
    TwoBin,
    /// `P_j ∝ exp(a_j + b_j θ + c_j θ²)`.
    ExpFamily {
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// A dataset file (with its sidecar), or raw events plus a detector.
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub events: Option<PathBuf>,
    /// Bin-box geometry, required with `events`.
    #[serde(default)]
    pub detector: Option<kgli_core::experiment::DetectorConfig>,
    pub model: ModelSpec,
    pub theta: f64,
    pub epsilons: Vec<f64>,
    /// Replace the observed counts by the robust assignment `N P(j|θ)`.
    #[serde(default)]
    pub robust: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub suite: String,
    #[serde(default = "default_verify_grid")]
    pub grid: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_verify_grid() -> usize {
    32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeConfig {
    #[serde(default = "default_verify_grid")]
    pub grid: usize,
    pub lambda: f64,
    #[serde(default = "default_spatial_mode")]
    pub spatial_mode: usize,
    /// Relative amplitude of the seeded perturbation of the exact start.
    #[serde(default)]
    pub perturbation: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
    /// Target band relative to the initial |F|; omit for gradient-only
    /// stopping.
    #[serde(default)]
    pub f_target_rel: Option<f64>,
}

fn default_spatial_mode() -> usize {
    1
}

fn default_max_iters() -> usize {
    60_000
}

fn default_grad_tol() -> f64 {
    1e-12
}
