use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::OptimizerSettings;
use crate::models::{compatible, ModelKind, ModelSpec, SectorKind};

/// The system whose energy is being bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Heisenberg {
        length: usize,
        #[serde(default)]
        disorder: f64,
    },
    Ising {
        length: usize,
        #[serde(default)]
        disorder: f64,
        coupling: Option<f64>,
        alpha: Option<f64>,
        field: Option<f64>,
    },
    Xy {
        length: usize,
        coupling: Option<f64>,
        alpha: Option<f64>,
        field: Option<f64>,
    },
    Pxp {
        length: usize,
        omega: Option<f64>,
    },
    /// A target that is diagonal in the computational basis with the given
    /// eigenvalues.
    Diagonal {
        energies: Vec<f64>,
    },
}

impl ModelConfig {
    /// The chain model, or `None` for a diagonal target.
    pub fn spec(&self, disorder_seed: u64) -> Option<ModelSpec> {
        let spec = match *self {
            ModelConfig::Heisenberg { length, disorder } => {
                ModelSpec::heisenberg(length, disorder, disorder_seed)
            }
            ModelConfig::Ising {
                length,
                disorder,
                coupling,
                alpha,
                field,
            } => ModelSpec {
                coupling,
                alpha,
                field,
                ..ModelSpec::ising(length, disorder, disorder_seed)
            },
            ModelConfig::Xy {
                length,
                coupling,
                alpha,
                field,
            } => ModelSpec {
                coupling,
                alpha,
                field,
                ..ModelSpec::xy(length)
            },
            ModelConfig::Pxp { length, omega } => ModelSpec {
                omega,
                ..ModelSpec::pxp(length)
            },
            ModelConfig::Diagonal { .. } => return None,
        };
        Some(spec.with_defaults())
    }

    pub fn kind(&self) -> Option<ModelKind> {
        match self {
            ModelConfig::Heisenberg { .. } => Some(ModelKind::Heisenberg),
            ModelConfig::Ising { .. } => Some(ModelKind::Ising),
            ModelConfig::Xy { .. } => Some(ModelKind::Xy),
            ModelConfig::Pxp { .. } => Some(ModelKind::Pxp),
            ModelConfig::Diagonal { .. } => None,
        }
    }

    pub fn length(&self) -> Option<usize> {
        match *self {
            ModelConfig::Heisenberg { length, .. }
            | ModelConfig::Ising { length, .. }
            | ModelConfig::Xy { length, .. }
            | ModelConfig::Pxp { length, .. } => Some(length),
            ModelConfig::Diagonal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateConfig {
    Ground {
        label: Option<String>,
    },
    /// `beta` defaults to `6 / (E_N - E_1)`.
    PureThermal {
        beta: Option<f64>,
        label: Option<String>,
    },
    /// `seed` defaults to the run's Haar seed plus the state's position
    /// among the Haar states.
    Haar {
        seed: Option<u64>,
        label: Option<String>,
    },
    /// `cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>` for two-level targets.
    Bloch {
        theta: f64,
        phi: f64,
        label: Option<String>,
    },
    /// Bloch states at `theta_i = i pi / (n_theta - 1)`,
    /// `phi_j = 2 pi j / n_phi`, theta outermost.
    BlochGrid {
        theta_points: usize,
        phi_points: usize,
    },
    /// Explicit amplitudes in the sector basis; normalized on use.
    Amplitudes {
        re: Vec<f64>,
        #[serde(default)]
        im: Vec<f64>,
        label: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasurementConfig {
    /// Local number basis.
    Computational {},
    /// Product of the local Schmidt bases of the ground state.
    GsOpt { k: usize },
    /// Eigenbasis of the block-truncated Hamiltonian.
    #[serde(rename = "obs-opt-1")]
    ObsOpt1 { k: usize },
    /// Product of the eigenbases of the block-reduced Hamiltonians.
    #[serde(rename = "obs-opt-2")]
    ObsOpt2 { k: usize },
    /// Energy bins of width `delta_e`.
    Coarse { delta_e: f64 },
    /// Every site in the `sigma^x` eigenbasis.
    XBasis {},
}

impl MeasurementConfig {
    pub fn label(&self) -> String {
        match self {
            MeasurementConfig::Computational {} => "computational".into(),
            MeasurementConfig::GsOpt { k } => format!("gs-opt(k={k})"),
            MeasurementConfig::ObsOpt1 { k } => format!("obs-opt-1(k={k})"),
            MeasurementConfig::ObsOpt2 { k } => format!("obs-opt-2(k={k})"),
            MeasurementConfig::Coarse { delta_e } => format!("coarse(delta_e={delta_e})"),
            MeasurementConfig::XBasis {} => "x-basis".into(),
        }
    }

    fn block(&self) -> Option<usize> {
        match *self {
            MeasurementConfig::GsOpt { k }
            | MeasurementConfig::ObsOpt1 { k }
            | MeasurementConfig::ObsOpt2 { k } => Some(k),
            _ => None,
        }
    }
}

/// How measurements are grouped into the sets each bound is computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetMode {
    /// The first one, the first two, ..., all of them.
    #[default]
    Cumulative,
    /// Each measurement on its own.
    Each,
    /// One set with every measurement.
    All,
}

impl SetMode {
    pub fn sets(self, count: usize) -> Vec<Vec<usize>> {
        match self {
            SetMode::Cumulative => (1..=count).map(|n| (0..n).collect()).collect(),
            SetMode::Each => (0..count).map(|m| vec![m]).collect(),
            SetMode::All if count > 0 => vec![(0..count).collect()],
            SetMode::All => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub total: f64,
    pub points: usize,
    pub include_end: bool,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            total: 160.0,
            points: 401,
            include_end: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub enabled: bool,
    pub constraint_tolerance: f64,
    pub objective_tolerance: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub include_quadratic: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let s = OptimizerSettings::default();
        Self {
            enabled: false,
            constraint_tolerance: s.constraint_tolerance,
            objective_tolerance: s.objective_tolerance,
            max_iterations: s.max_iterations,
            restarts: s.restarts,
            include_quadratic: s.include_quadratic,
        }
    }
}

impl EstimatorConfig {
    pub fn settings(&self, seed: u64) -> OptimizerSettings {
        OptimizerSettings {
            constraint_tolerance: self.constraint_tolerance,
            objective_tolerance: self.objective_tolerance,
            max_iterations: self.max_iterations,
            restarts: self.restarts,
            include_quadratic: self.include_quadratic,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub disorder: u64,
    pub haar: u64,
    pub optimizer: u64,
}

fn full_sector() -> SectorKind {
    SectorKind::Full
}

fn first_moment() -> Vec<u32> {
    vec![1]
}

fn results_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Names the output subdirectory.
    pub name: String,
    pub model: ModelConfig,
    #[serde(default = "full_sector")]
    pub sector: SectorKind,
    pub states: Vec<StateConfig>,
    pub measurements: Vec<MeasurementConfig>,
    #[serde(default)]
    pub measurement_sets: SetMode,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default = "first_moment")]
    pub moments: Vec<u32>,
    #[serde(default)]
    pub seeds: Seeds,
    /// Not part of the recorded provenance, so moving the output does not
    /// change the results.
    #[serde(default = "results_dir", skip_serializing)]
    pub output_dir: PathBuf,
}

/// One violated rule, tied to the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigIssue {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Replaces one of the `disorder`, `haar` or `optimizer` seeds.
    pub fn override_seed(&mut self, name: &str, value: u64) -> Result<()> {
        let slot = match name {
            "disorder" => &mut self.seeds.disorder,
            "haar" => &mut self.seeds.haar,
            "optimizer" => &mut self.seeds.optimizer,
            other => {
                return Err(Error::Config(format!(
                    "unknown seed `{other}` (expected disorder, haar or optimizer)"
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Dimension of the space the target acts on, if the model is valid.
    pub fn dim(&self) -> Option<usize> {
        match (&self.model, self.sector) {
            (ModelConfig::Diagonal { energies }, _) => Some(energies.len()),
            (m, sector) => {
                let l = m.length()?;
                if !(2..=24).contains(&l) {
                    return None;
                }
                Some(match sector {
                    SectorKind::Full => 1 << l,
                    SectorKind::SpinZ { particles } if particles <= l => binomial(l, particles),
                    SectorKind::SpinZ { .. } => return None,
                    SectorKind::ParityEven => 1 << (l - 1),
                })
            }
        }
    }

    /// Every schema and cross-field violation; empty when the config can run.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut issue = |field: &str, message: String| {
            issues.push(ConfigIssue {
                field: field.into(),
                message,
            })
        };

        if self.name.is_empty()
            || self.name.contains(['/', '\\'])
            || self.name == "."
            || self.name == ".."
        {
            issue(
                "name",
                format!("`{}` is not usable as a directory name", self.name),
            );
        }

        let length = self.model.length();
        match &self.model {
            ModelConfig::Diagonal { energies } => {
                if energies.is_empty() {
                    issue("model.energies", "must list at least one eigenvalue".into());
                }
                if energies.iter().any(|e| !e.is_finite()) {
                    issue("model.energies", "eigenvalues must be finite".into());
                }
                if self.sector != SectorKind::Full {
                    issue(
                        "sector",
                        format!("a diagonal target has no {} sector", self.sector),
                    );
                }
            }
            m => {
                let spec = m.spec(self.seeds.disorder).expect("chain model");
                if let Err(e) = spec.validate() {
                    issue("model", e.to_string());
                }
                if !compatible(spec.kind, self.sector) {
                    issue(
                        "sector",
                        format!(
                            "incompatible sector {} for the {} model",
                            self.sector, spec.kind
                        ),
                    );
                }
                if let SectorKind::SpinZ { particles } = self.sector {
                    if particles > spec.length {
                        issue(
                            "sector.particles",
                            format!("{particles} particles on {} sites", spec.length),
                        );
                    }
                }
            }
        }
        let dim = self.dim();

        if self.states.is_empty() {
            issue("states", "at least one state is required".into());
        }
        let two_level = dim == Some(2);
        for (i, s) in self.states.iter().enumerate() {
            let field = format!("states[{i}]");
            match s {
                StateConfig::PureThermal { beta: Some(b), .. } if !(*b >= 0.0 && b.is_finite()) => {
                    issue(
                        &field,
                        format!("inverse temperature {b} must be finite and >= 0"),
                    );
                }
                StateConfig::Bloch { theta, phi, .. } => {
                    if !two_level {
                        issue(&field, "Bloch states need a two-level target".into());
                    }
                    if !theta.is_finite() || !phi.is_finite() {
                        issue(&field, "Bloch angles must be finite".into());
                    }
                }
                StateConfig::BlochGrid {
                    theta_points,
                    phi_points,
                } => {
                    if !two_level {
                        issue(&field, "Bloch states need a two-level target".into());
                    }
                    if *theta_points == 0 || *phi_points == 0 {
                        issue(&field, "grid needs at least one point per angle".into());
                    }
                }
                StateConfig::Amplitudes { re, im, .. } => {
                    if dim.is_some_and(|d| re.len() != d) {
                        issue(
                            &field,
                            format!("{} amplitudes for dimension {}", re.len(), dim.unwrap()),
                        );
                    }
                    if !im.is_empty() && im.len() != re.len() {
                        issue(
                            &field,
                            format!("{} imaginary parts for {} amplitudes", im.len(), re.len()),
                        );
                    }
                    let norm: f64 = re.iter().chain(im).map(|x| x * x).sum();
                    if !(norm > 0.0) || !norm.is_finite() {
                        issue(&field, "amplitudes must be finite and not all zero".into());
                    }
                }
                _ => {}
            }
        }

        if self.measurements.is_empty() {
            issue(
                "measurements",
                "at least one measurement is required".into(),
            );
        }
        for (i, m) in self.measurements.iter().enumerate() {
            let field = format!("measurements[{i}]");
            if let Some(k) = m.block() {
                match length {
                    None => issue(&field, format!("{} needs a chain model", m.label())),
                    Some(l) if k == 0 || l % k != 0 => issue(
                        &format!("{field}.k"),
                        format!("block size k={k} does not divide chain length L={l}"),
                    ),
                    _ => {}
                }
            }
            match m {
                MeasurementConfig::Coarse { delta_e }
                    if !(*delta_e > 0.0 && delta_e.is_finite()) =>
                {
                    issue(
                        &format!("{field}.delta_e"),
                        format!("energy resolution {delta_e} must be > 0"),
                    );
                }
                MeasurementConfig::XBasis {}
                    if length.is_none() && !dim.is_some_and(|d| d.is_power_of_two()) =>
                {
                    issue(&field, "x-basis needs a power-of-two dimension".into());
                }
                _ => {}
            }
        }

        if self.time.points == 0 {
            issue("time.points", "at least one time is required".into());
        }
        if !(self.time.total >= 0.0 && self.time.total.is_finite()) {
            issue(
                "time.total",
                format!("total time {} must be finite and >= 0", self.time.total),
            );
        }

        if self.moments.is_empty() {
            issue("moments", "at least one moment order is required".into());
        }
        if self.moments.contains(&0) {
            issue("moments", "moment orders start at 1".into());
        }

        if let Err(e) = self.estimator.settings(self.seeds.optimizer).validate() {
            issue("estimator", e.to_string());
        }
        if self.output_dir.as_os_str().is_empty() {
            issue("output_dir", "must not be empty".into());
        }
        issues
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
