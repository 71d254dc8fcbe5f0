//! Experiment configuration: a versioned TOML document whose omitted keys
//! take the reference parameter values.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::{Algorithm, SolverParams};
use crate::error::{Error, Result};
use crate::oracle::HostScope;
use crate::requests::WorkloadParams;
use crate::scenario::{CloudParams, CoverageParams, Scenario};
use crate::topology::ConstellationParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Static,
    Dynamic,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentParams {
    pub mode: Mode,
    pub algorithms: Vec<Algorithm>,
    /// Batch sizes for static runs.
    pub m_values: Vec<usize>,
    /// Mean arrivals per slot for dynamic runs.
    pub lambda_values: Vec<f64>,
    pub slots: u64,
    pub repetitions: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Record wall-clock time; makes the `wall_ms` column non-reproducible.
    pub timing: bool,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            mode: Mode::Static,
            algorithms: Algorithm::ALL.to_vec(),
            m_values: (10..=590).step_by(20).collect(),
            lambda_values: (10..=310).step_by(20).map(|l| l as f64).collect(),
            slots: 50,
            repetitions: 30,
            seed: 1,
            out_dir: PathBuf::from("results"),
            timing: false,
        }
    }
}

/// Settings of the `oracle-check` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub instances: u64,
    pub d: usize,
    pub beam_width: usize,
    /// Scope used for the reported path-restriction gap.
    pub host_scope: HostScope,
}

impl Default for OracleParams {
    fn default() -> Self {
        OracleParams { instances: 100, d: 4, beam_width: 10_000, host_scope: HostScope::AllSatellites }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub topology: ConstellationParams,
    pub coverage: CoverageParams,
    pub cloud: CloudParams,
    pub workload: WorkloadParams,
    pub solver: SolverParams,
    pub experiment: ExperimentParams,
    pub oracle: OracleParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            topology: ConstellationParams::default(),
            coverage: CoverageParams::default(),
            cloud: CloudParams::default(),
            workload: WorkloadParams::default(),
            solver: SolverParams::default(),
            experiment: ExperimentParams::default(),
            oracle: OracleParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: PathBuf::from("<string>"),
            message: e.message().to_string() + &span_hint(text, e.span()),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every range the types do not enforce.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        self.solver.validate()?;
        self.workload.validate()?;
        let e = &self.experiment;
        if e.algorithms.is_empty() {
            return Err(Error::invalid("experiment.algorithms", "must name at least one algorithm"));
        }
        if e.algorithms.iter().collect::<BTreeSet<_>>().len() != e.algorithms.len() {
            return Err(Error::invalid("experiment.algorithms", "duplicate entries"));
        }
        if e.repetitions == 0 {
            return Err(Error::invalid("experiment.repetitions", "must be >= 1"));
        }
        match e.mode {
            Mode::Static if e.m_values.is_empty() => {
                return Err(Error::invalid("experiment.m_values", "must not be empty"));
            }
            Mode::Dynamic if e.lambda_values.is_empty() => {
                return Err(Error::invalid("experiment.lambda_values", "must not be empty"));
            }
            Mode::Dynamic if e.slots == 0 => {
                return Err(Error::invalid("experiment.slots", "must be >= 1"));
            }
            _ => {}
        }
        if let Some(l) = e.lambda_values.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
            return Err(Error::invalid("experiment.lambda_values", format!("{l} is not a finite rate >= 0")));
        }
        if self.oracle.d == 0 || self.oracle.beam_width == 0 {
            return Err(Error::invalid("oracle", "d and beam_width must be >= 1"));
        }
        self.scenario().map(|_| ())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::build(&self.topology, &self.coverage, &self.cloud, self.solver.d)
    }

    /// Sweep values of the configured mode as floats.
    pub fn cells(&self) -> Vec<f64> {
        match self.experiment.mode {
            Mode::Static => self.experiment.m_values.iter().map(|&m| m as f64).collect(),
            Mode::Dynamic => self.experiment.lambda_values.clone(),
        }
    }
}

fn span_hint(text: &str, span: Option<std::ops::Range<usize>>) -> String {
    let Some(span) = span else { return String::new() };
    let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
    format!(" (line {line})")
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    ExperimentConfig::from_toml_str(&text).map_err(|e| match e {
        Error::Config { message, .. } => Error::Config { path: path.to_path_buf(), message },
        Error::InvalidParameter { field, reason } => {
            Error::Config { path: path.to_path_buf(), message: format!("`{field}`: {reason}") }
        }
        other => other,
    })
}
