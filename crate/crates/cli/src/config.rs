//! TOML configuration schema and validation.
//!
//! A configuration file declares the equation branch, grid, dissipation
//! operator, and time stepping for a run, plus optional sections consumed by
//! the sweep, stability, and verify subcommands. Every section rejects
//! unknown keys so a typo surfaces as a parse error naming the key instead of
//! silently falling back to a default.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hypervisc::{AmplitudeEnvelope, Grid, OperatorSpec, OperatorVariant, SolverSettings, TimeStep};

/// Top-level configuration file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub equation: EquationSection,
    pub grid: GridSection,
    pub operator: OperatorSection,
    pub time: TimeSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<FieldSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blow_up_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySection>,
}

/// Which system of equations a run integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchKind {
    /// Incompressible flow, three velocity components.
    Ns,
    /// Hydrostatic flow, two horizontal velocity components.
    Pe,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSection {
    pub branch: BranchKind,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Mode counts per axis; each must be even and at least 4.
    pub n: [usize; 3],
}

impl GridSection {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.n[0], self.n[1], self.n[2]).context("grid.n")
    }
}

/// Dissipation operator keys, validated on build rather than on parse so the
/// error can name the offending section.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub variant: OperatorVariant,
    pub nu: f64,
    pub eps: f64,
    pub l: f64,
}

impl OperatorSection {
    pub fn build(&self) -> Result<OperatorSpec> {
        OperatorSpec::new(self.variant, self.nu, self.eps, self.l).context("operator")
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub t_final: f64,
    /// Fixed step size; mutually exclusive with `cfl_number`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Advective CFL number; requires `cfl_dt_max`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl_number: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cfl_dt_max: Option<f64>,
    /// Keep every k-th state snapshot and ledger row (default 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
}

impl TimeSection {
    pub fn time_step(&self) -> Result<TimeStep> {
        match (self.dt, self.cfl_number) {
            (Some(dt), None) => Ok(TimeStep::Fixed { dt }),
            (None, Some(number)) => {
                let dt_max = self
                    .cfl_dt_max
                    .context("time.cfl_dt_max is required alongside time.cfl_number")?;
                Ok(TimeStep::Cfl { number, dt_max })
            }
            (Some(_), Some(_)) => bail!("time.dt and time.cfl_number are mutually exclusive"),
            (None, None) => bail!("one of time.dt or time.cfl_number is required"),
        }
    }
}

/// Closed-form or sampled field constructions shared by `initial` and
/// `forcing.field`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldSection {
    /// Curl eigenfield concentrated on one wavevector pair; the advective
    /// term vanishes on it identically.
    Beltrami { mode: [i64; 3], amplitude: f64 },
    /// Depth-independent cellular flow `(sin cos, -cos sin)`; the horizontal
    /// advective term vanishes on it identically.
    TaylorGreen { amplitude: f64 },
    /// A single coefficient pair on one component.
    SingleMode {
        component: usize,
        mode: [i64; 3],
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// Seeded random admissible field with a power-law spectrum.
    Random {
        seed: u64,
        #[serde(default = "default_profile")]
        spectrum_profile: f64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
    /// Load a stored snapshot.
    Checkpoint { path: String, stem: String },
}

fn default_profile() -> f64 {
    1.5
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingSection {
    pub field: FieldSection,
    /// Time envelope multiplying the forcing shape (default: constant 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<AmplitudeEnvelope>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Perturbation strengths to ladder through; sorted descending, and the
    /// exact value 0 is allowed as an explicit self-check row.
    pub epsilons: Vec<f64>,
    /// Regularity offsets `delta` in (0, 1]; errors are measured in the
    /// Sobolev norm of order `1 - delta`. Default `[1.0]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    /// Initial-data perturbation magnitudes; 0 degenerates to a determinism
    /// check of the integrator.
    pub perturbation_sizes: Vec<f64>,
    /// Seed for the shared unit perturbation direction.
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum_profile: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    /// Ensemble size for the randomized ratio reports.
    pub count: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum_profile: Option<f64>,
    /// Operator for the incompressible nonlinearity ratio report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ns_operator: Option<OperatorSection>,
    /// Operator for the hydrostatic nonlinearity ratio report.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pe_operator: Option<OperatorSection>,
    /// Operator for the exhaustive mixed-derivative mode sweep.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixed_operator: Option<OperatorSection>,
    /// Grid for the mixed-derivative sweep (default: the main grid).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixed_grid: Option<[usize; 3]>,
}

/// Resolved ingredients of a single integration.
#[derive(Clone, Debug)]
pub struct RunSetup {
    pub branch: BranchKind,
    pub grid: Grid,
    pub operator: OperatorSpec,
    pub settings: SolverSettings,
    pub initial: FieldSection,
    pub forcing: Option<ForcingSection>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ConfigFile = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        Ok(cfg)
    }

    /// Validate and assemble everything a single run needs.
    pub fn run_setup(&self) -> Result<RunSetup> {
        let grid = self.grid.build()?;
        let operator = self.operator.build()?;
        let time_step = self.time.time_step()?;
        let mut settings = SolverSettings::new(operator, 1.0, self.time.t_final);
        settings.time_step = time_step;
        if let Some(every) = self.time.record_every {
            settings.record_every = every;
        }
        if let Some(on) = self.nonlinearity {
            settings.nonlinearity = on;
        }
        if let Some(factor) = self.blow_up_factor {
            settings.blow_up_factor = factor;
        }
        settings.validate().context("time")?;
        let initial = self
            .initial
            .clone()
            .context("an [initial] section is required")?;
        Ok(RunSetup {
            branch: self.equation.branch,
            grid,
            operator,
            settings,
            initial,
            forcing: self.forcing.clone(),
        })
    }
}
