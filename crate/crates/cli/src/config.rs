//! On-disk run configuration: one JSON document selects a command and carries
//! the grids, data, solver knobs, and per-command sections it needs.  Unknown
//! keys are rejected everywhere so a typo cannot silently fall back to a
//! default.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use gkdv_core::duhamel::SolverControls;
use gkdv_core::estimates::{CheckRequest, EnsembleSpec, LabGrid};
use gkdv_core::extension::ExtensionStrategy;
use gkdv_core::linear::QuadratureSpec;
use gkdv_core::presets::Preset;
use gkdv_core::{SpatialGrid, TimeGrid};

use crate::Failure;

/// The one config layout this binary understands.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SolveLinear,
    Solve,
    VerifyEstimates,
    ConvergenceStudy,
    SmoothingStudy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveLinear => "solve-linear",
            Command::Solve => "solve",
            Command::VerifyEstimates => "verify-estimates",
            Command::ConvergenceStudy => "convergence-study",
            Command::SmoothingStudy => "smoothing-study",
        }
    }
}

/// Initial data: either a named analytic preset or a previously written
/// field file whose first time slice is taken as the profile.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum DataSpec {
    Preset(Preset),
    File(FileData),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FileData {
    File { path: PathBuf },
}

/// Discretization of the computational window.  The time window must contain
/// `[-2T, 2T]` for the configured solver horizon `T`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub n: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_t: usize,
}

impl GridConfig {
    pub fn spatial(&self) -> Result<SpatialGrid, Failure> {
        SpatialGrid::new(self.half_width, self.n).map_err(Failure::from_core)
    }

    pub fn time(&self) -> Result<TimeGrid, Failure> {
        TimeGrid::new(self.t_min, self.t_max, self.n_t).map_err(Failure::from_core)
    }

    /// Same window at `factor` times the resolution (domain unchanged).
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: self.n * factor,
            n_t: self.n_t * factor,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Existence time `T`: the solution is physical on `[0, T]`.
    pub horizon: f64,
    /// Sobolev index for the iteration's step norms.
    pub smoothness: f64,
    pub max_iterations: usize,
    pub step_tolerance: f64,
    /// How half-line data is extended to the full grid.
    pub extension: ExtensionStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let c = SolverControls::default();
        Self {
            horizon: 0.2,
            smoothness: c.smoothness,
            max_iterations: c.max_iterations,
            step_tolerance: c.step_tolerance,
            extension: ExtensionStrategy::Zero,
        }
    }
}

impl SolverConfig {
    pub fn controls(&self) -> SolverControls {
        SolverControls {
            smoothness: self.smoothness,
            max_iterations: self.max_iterations,
            step_tolerance: self.step_tolerance,
        }
    }
}

/// Section for `verify-estimates`.  An empty `checks` list means the pinned
/// regression suite; explicit requests skip the pin comparison.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesConfig {
    pub lab: LabGrid,
    pub ensemble: EnsembleSpec,
    pub checks: Vec<CheckRequest>,
    /// Fail the run (exit 3) when a pinned constant drifts out of band.
    pub enforce_pins: bool,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        Self {
            lab: LabGrid::default(),
            ensemble: EnsembleSpec::default(),
            checks: Vec::new(),
            enforce_pins: true,
        }
    }
}

/// Section for `convergence-study`: a soliton tracked over one solver window
/// at successively doubled resolutions, starting from the `grid` section.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceConfig {
    /// Number of resolutions; each level doubles `n` and `n_t`.
    pub levels: usize,
    /// The run fails (exit 3) if the fitted order drops below this.
    pub min_order: f64,
    pub speed: f64,
    pub offset: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            min_order: 2.0,
            speed: 1.0,
            offset: 18.0,
        }
    }
}

/// Section for `smoothing-study`: rough seeded data solved per seed, with
/// spectral tail exponents of the solution and its nonlinear correction
/// fitted on `band`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingConfig {
    /// Regularity of the random data.
    pub s: f64,
    pub amplitude: f64,
    /// Explicit seeds; empty means `run seed + 1 ..= run seed + count`.
    pub seeds: Vec<u64>,
    pub count: usize,
    /// Frequency band `lo <= |xi| <= hi` for the tail fits.
    pub band: (f64, f64),
    /// Smallest acceptable exponent gain; violation exits 3.
    pub min_gain: Option<f64>,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            s: 0.0,
            amplitude: 0.25,
            seeds: Vec::new(),
            count: 5,
            band: (3.0, 10.0),
            min_gain: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub data: Option<DataSpec>,
    /// Boundary trace `g`; absent means the data preset's own trace (zero
    /// for file data), present means this preset's trace replaces it.
    #[serde(default)]
    pub boundary: Option<Preset>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub estimates: Option<EstimatesConfig>,
    #[serde(default)]
    pub convergence: Option<ConvergenceConfig>,
    #[serde(default)]
    pub smoothing: Option<SmoothingConfig>,
}

impl RunConfig {
    /// Parses and structurally validates a config document.
    pub fn from_slice(bytes: &[u8], origin: &str) -> Result<Self, Failure> {
        let cfg: RunConfig = serde_json::from_slice(bytes)
            .map_err(|e| Failure::Config(format!("{origin}: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Failure::Config(format!(
                "{origin}: unsupported schema_version {} (this build reads {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        cfg.check_sections()?;
        Ok(cfg)
    }

    /// The field-producing commands need a grid and data; section-driven
    /// commands must not carry stale sections of the wrong kind.
    fn check_sections(&self) -> Result<(), Failure> {
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(Failure::Config(format!(
                    "command {:?} requires the `{what}` section",
                    self.command.name()
                )))
            }
        };
        match self.command {
            Command::SolveLinear | Command::Solve => {
                need(self.grid.is_some(), "grid")?;
                need(self.data.is_some(), "data")
            }
            Command::VerifyEstimates => Ok(()),
            Command::ConvergenceStudy => need(self.grid.is_some(), "grid"),
            Command::SmoothingStudy => need(self.grid.is_some(), "grid"),
        }
    }
}
