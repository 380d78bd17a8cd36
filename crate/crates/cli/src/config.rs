//! Scenario config grammar and loading.
//!
//! A scenario is one TOML file. Referenced files (coupling matrix, initial
//! positions) are resolved relative to the config's directory. Every random
//! choice needs an explicit seed in the file; there is no fallback seeding.
//!
//! ```toml
//! n_agents = 10
//! dimension = 2
//!
//! [kernel]
//! type = "gaussian"      # or "general" with name/a/b
//! a = 1.0
//! b = 20.0
//! c = 0.2
//!
//! [coupling]             # matrix_file = "w.txt", or generator params:
//! density = 0.5
//! weight_scale = 1.0     # optional, default 1.0
//! seed = 7
//!
//! [initial]              # positions_file = "x0.txt", or a sampling box:
//! box_min = -5.0
//! box_max = 5.0
//! seed = 11
//!
//! [integration]          # optional section, these are the defaults
//! dt = 0.001
//! t_end = 30.0
//! record_stride = 10
//! method = "rk4"         # or "euler"
//!
//! [analysis]             # optional section, these are the defaults
//! t_hold = 10.0
//! assert_contained = false
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use swarm_core::coupling::CouplingMatrix;
use swarm_core::dynamics::SwarmState;
use swarm_core::integrator::{IntegrationConfig, Method};
use swarm_core::kernel::{GaussianKernel, GeneralKernel, InteractionKernel};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    pub dimension: usize,
    pub kernel: KernelConfig,
    pub coupling: CouplingConfig,
    pub initial: InitialConfig,
    #[serde(default)]
    pub integration: IntegrationSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

/// `type = "gaussian"` takes a/b/c; `type = "general"` takes name/a/b.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(rename = "type")]
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub a: f64,
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
}

/// Either an explicit matrix file or generator parameters, never both.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Either an explicit positions file or a sampling box, never both.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_record_stride")]
    pub record_stride: usize,
    #[serde(default)]
    pub method: MethodConfig,
}

fn default_dt() -> f64 {
    1e-3
}

fn default_t_end() -> f64 {
    30.0
}

fn default_record_stride() -> usize {
    10
}

impl Default for IntegrationSection {
    fn default() -> Self {
        IntegrationSection {
            dt: default_dt(),
            t_end: default_t_end(),
            record_stride: default_record_stride(),
            method: MethodConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodConfig {
    #[default]
    Rk4,
    Euler,
}

impl MethodConfig {
    fn to_core(self) -> Method {
        match self {
            MethodConfig::Rk4 => Method::Rk4,
            MethodConfig::Euler => Method::Euler,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default = "default_t_hold")]
    pub t_hold: f64,
    #[serde(default)]
    pub assert_contained: bool,
}

fn default_t_hold() -> f64 {
    10.0
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            t_hold: default_t_hold(),
            assert_contained: false,
        }
    }
}

/// The kernel in both the form the integrator consumes and the concrete
/// family the bound formulas need.
#[derive(Debug, Clone)]
pub enum KernelInstance {
    Gaussian(GaussianKernel),
    /// Clones share the clamp counter, so evaluations through the
    /// integration kernel show up on this handle too.
    General(GeneralKernel),
}

impl KernelInstance {
    pub fn interaction(&self) -> InteractionKernel {
        match self {
            KernelInstance::Gaussian(k) => (*k).into(),
            KernelInstance::General(k) => k.clone().into(),
        }
    }
}

/// A fully resolved scenario: config plus the core objects built from it.
#[derive(Debug)]
pub struct Scenario {
    pub name: String,
    pub config: ScenarioConfig,
    pub kernel: KernelInstance,
    pub coupling: CouplingMatrix,
    pub initial: SwarmState,
    pub integration: IntegrationConfig,
}

impl Scenario {
    /// Parses the file at `path` and builds every object the run needs.
    /// Nothing is written anywhere; callers create artifacts only after
    /// this succeeds.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: ScenarioConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("scenario")
            .to_string();
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::build(name, config, base)
    }

    fn build(name: String, config: ScenarioConfig, base: &Path) -> Result<Self> {
        if config.n_agents == 0 {
            return Err(CliError::Config("n_agents must be positive".into()));
        }
        if config.dimension == 0 {
            return Err(CliError::Config("dimension must be positive".into()));
        }

        let kernel = build_kernel(&config.kernel)?;
        let coupling = build_coupling(&config.coupling, config.n_agents, base)?;
        let initial = build_initial(
            &config.initial,
            config.n_agents,
            config.dimension,
            base,
        )?;

        let integration = IntegrationConfig {
            dt: config.integration.dt,
            t_end: config.integration.t_end,
            record_stride: config.integration.record_stride,
            method: config.integration.method.to_core(),
        };
        integration.validate().map_err(CliError::from)?;

        if config.analysis.t_hold < 0.0 || !config.analysis.t_hold.is_finite() {
            return Err(CliError::Config(format!(
                "analysis.t_hold must be finite and nonnegative, got {}",
                config.analysis.t_hold
            )));
        }

        Ok(Scenario {
            name,
            config,
            kernel,
            coupling,
            initial,
            integration,
        })
    }
}

fn build_kernel(config: &KernelConfig) -> Result<KernelInstance> {
    match config.family.as_str() {
        "gaussian" => {
            if config.name.is_some() {
                return Err(CliError::Config(
                    "kernel: name only applies to type = \"general\"".into(),
                ));
            }
            let c = config.c.ok_or_else(|| {
                CliError::Config("kernel: gaussian kernel needs c".into())
            })?;
            Ok(KernelInstance::Gaussian(
                GaussianKernel::new(config.a, config.b, c).map_err(CliError::from)?,
            ))
        }
        "general" => {
            if config.c.is_some() {
                return Err(CliError::Config(
                    "kernel: c only applies to type = \"gaussian\"".into(),
                ));
            }
            let name = config.name.as_deref().ok_or_else(|| {
                CliError::Config("kernel: general kernel needs a registered name".into())
            })?;
            Ok(KernelInstance::General(
                GeneralKernel::by_name(name, config.a, config.b).map_err(CliError::from)?,
            ))
        }
        other => Err(CliError::Config(format!(
            "kernel: unknown type {other:?} (expected \"gaussian\" or \"general\")"
        ))),
    }
}

fn build_coupling(config: &CouplingConfig, n_agents: usize, base: &Path) -> Result<CouplingMatrix> {
    match (&config.matrix_file, config.density) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "coupling: matrix_file and generator parameters are mutually exclusive".into(),
        )),
        (Some(file), None) => {
            for (key, set) in [
                ("weight_scale", config.weight_scale.is_some()),
                ("seed", config.seed.is_some()),
            ] {
                if set {
                    return Err(CliError::Config(format!(
                        "coupling: {key} only applies to generated coupling"
                    )));
                }
            }
            let path = base.join(file);
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let matrix = CouplingMatrix::parse_text(&text).map_err(CliError::from)?;
            if matrix.n_agents() != n_agents {
                return Err(CliError::Config(format!(
                    "coupling matrix is {0}x{0} but n_agents = {1}",
                    matrix.n_agents(),
                    n_agents
                )));
            }
            Ok(matrix)
        }
        (None, Some(density)) => {
            let seed = config.seed.ok_or_else(|| {
                CliError::Config("coupling: generated coupling needs an explicit seed".into())
            })?;
            let scale = config.weight_scale.unwrap_or(1.0);
            CouplingMatrix::generate_balanced(n_agents, density, scale, seed)
                .map_err(CliError::from)
        }
        (None, None) => Err(CliError::Config(
            "coupling: set either matrix_file or density + seed".into(),
        )),
    }
}

fn build_initial(
    config: &InitialConfig,
    n_agents: usize,
    dimension: usize,
    base: &Path,
) -> Result<SwarmState> {
    let box_params = match (config.box_min, config.box_max) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => {
            return Err(CliError::Config(
                "initial: box_min and box_max must be set together".into(),
            ))
        }
    };
    match (&config.positions_file, box_params) {
        (Some(_), Some(_)) => Err(CliError::Config(
            "initial: positions_file and box sampling are mutually exclusive".into(),
        )),
        (Some(file), None) => {
            if config.seed.is_some() {
                return Err(CliError::Config(
                    "initial: seed only applies to box sampling".into(),
                ));
            }
            let path = base.join(file);
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let state = SwarmState::parse_text(&text).map_err(CliError::from)?;
            let (rows, cols) = (state.positions().nrows(), state.positions().ncols());
            if rows != n_agents || cols != dimension {
                return Err(CliError::Config(format!(
                    "initial positions are {rows}x{cols} but scenario declares {n_agents}x{dimension}"
                )));
            }
            Ok(state)
        }
        (None, Some((lo, hi))) => {
            let seed = config.seed.ok_or_else(|| {
                CliError::Config("initial: box sampling needs an explicit seed".into())
            })?;
            SwarmState::sample_box(n_agents, dimension, lo, hi, seed).map_err(CliError::from)
        }
        (None, None) => Err(CliError::Config(
            "initial: set either positions_file or box_min/box_max + seed".into(),
        )),
    }
}
