//! Experiment configuration (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::fock::QuadratureScheme;
use crate::model::{ModelConfig, SpinBosonModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    WeakCouplingScaling,
    Relaxation,
    PhotonBound,
    VanhoveCrosscheck,
    ClusterDemo,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::WeakCouplingScaling => "weak_coupling_scaling",
            Self::Relaxation => "relaxation",
            Self::PhotonBound => "photon_bound",
            Self::VanhoveCrosscheck => "vanhove_crosscheck",
            Self::ClusterDemo => "cluster_demo",
        }
    }
}

/// A model file path, or the model tables inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Path(String),
    Inline(Box<ModelConfig>),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lambdas: Vec<f64>,
    /// Physical times t.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    /// Macroscopic times λ²t.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub macro_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    pub modes: usize,
    pub n_max: usize,
    #[serde(default = "default_scheme")]
    pub scheme: QuadratureScheme,
    /// Upper end of the discretized frequency window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
}

fn default_scheme() -> QuadratureScheme {
    QuadratureScheme::Midpoint
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            modes: 16,
            n_max: 3,
            scheme: QuadratureScheme::Midpoint,
            window: None,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonConfig {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// System level of the initial product state.
    #[serde(default)]
    pub level: usize,
}

fn default_kappa() -> f64 {
    0.1
}

impl Default for PhotonConfig {
    fn default() -> Self {
        Self {
            kappa: 0.1,
            level: 0,
        }
    }
}

/// ψ_S ⊗ 𝓦(c·φ)Ω: a system level and an optional coherent amplitude c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    pub level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherent: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelaxationConfig {
    #[serde(default = "default_initial_states")]
    pub initial_states: Vec<InitialStateConfig>,
    /// c in the observed Weyl operator 𝓦(c·φ).
    #[serde(default = "default_observable")]
    pub observable: [f64; 2],
}

fn default_initial_states() -> Vec<InitialStateConfig> {
    vec![
        InitialStateConfig {
            level: 1,
            coherent: None,
        },
        InitialStateConfig {
            level: 0,
            coherent: Some([0.0, 0.3]),
        },
    ]
}

fn default_observable() -> [f64; 2] {
    [0.3, 0.0]
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self {
            initial_states: default_initial_states(),
            observable: default_observable(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanhoveConfig {
    /// c in the test profile c·φ.
    #[serde(default = "default_profile")]
    pub profile: [f64; 2],
}

fn default_profile() -> [f64; 2] {
    [0.0, 0.3]
}

impl Default for VanhoveConfig {
    fn default() -> Self {
        Self {
            profile: default_profile(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterFamily {
    /// w({τ, τ+ℓ}) = amplitude·ℓ^{−power} for 1 ≤ ℓ ≤ max_range.
    PairPower,
    /// Random complex weights of modulus ≤ amplitude on subsets of span ≤ 3.
    RandomLocal,
    /// Weights from a JSON table.
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub family: ClusterFamily,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default = "default_max_range")]
    pub max_range: usize,
    /// Horizons n compared against brute force.
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_size_cap")]
    pub size_cap: usize,
    #[serde(default = "default_diameter_cap")]
    pub diameter_cap: usize,
    #[serde(default = "default_gap")]
    pub adjacency_gap: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
}

fn default_amplitude() -> f64 {
    0.01
}
fn default_power() -> f64 {
    3.0
}
fn default_max_range() -> usize {
    12
}
fn default_horizons() -> Vec<usize> {
    vec![4, 6, 8]
}
fn default_size_cap() -> usize {
    crate::polymer::DEFAULT_CLUSTER_SIZE_CAP
}
fn default_diameter_cap() -> usize {
    crate::polymer::DEFAULT_DIAMETER_CAP
}
fn default_gap() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSource>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub fock: FockConfig,
    #[serde(default)]
    pub photon: PhotonConfig,
    #[serde(default)]
    pub relaxation: RelaxationConfig,
    #[serde(default)]
    pub vanhove: VanhoveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<ClusterConfig>,
    /// Directory against which relative paths resolve; not serialized.
    #[serde(skip, default = "default_base_dir")]
    pub base_dir: PathBuf,
}

fn default_base_dir() -> PathBuf {
    PathBuf::from(".")
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            output: None,
            seed: 0,
            model: None,
            grids: Grids::default(),
            fock: FockConfig::default(),
            photon: PhotonConfig::default(),
            relaxation: RelaxationConfig::default(),
            vanhove: VanhoveConfig::default(),
            cluster: None,
            base_dir: default_base_dir(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    /// SHA-256 of the serialized configuration.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grids;
        let need = |v: &Vec<f64>, name: &str| {
            if v.is_empty() {
                Err(LabError::Config(format!("grid '{name}' must be nonempty")))
            } else if v.iter().any(|x| !x.is_finite()) {
                Err(LabError::Config(format!(
                    "grid '{name}' has non-finite entries"
                )))
            } else {
                Ok(())
            }
        };
        match self.experiment {
            ExperimentKind::WeakCouplingScaling | ExperimentKind::Relaxation => {
                need(&g.lambdas, "lambdas")?;
                need(&g.macro_times, "macro_times")?;
            }
            ExperimentKind::PhotonBound | ExperimentKind::VanhoveCrosscheck => {
                need(&g.lambdas, "lambdas")?;
                need(&g.times, "times")?;
            }
            ExperimentKind::ClusterDemo => {
                let c = self.cluster.as_ref().ok_or_else(|| {
                    LabError::Config("cluster_demo needs a [cluster] table".into())
                })?;
                if c.horizons.is_empty() {
                    return Err(LabError::Config("cluster horizons must be nonempty".into()));
                }
            }
        }
        if g.lambdas.contains(&0.0) {
            return Err(LabError::Config("lambda values must be nonzero".into()));
        }
        if self.experiment != ExperimentKind::ClusterDemo && self.model.is_none() {
            return Err(LabError::Config("a model is required".into()));
        }
        if self.experiment == ExperimentKind::PhotonBound && self.photon.kappa.abs() > 0.2 {
            return Err(LabError::Config(format!(
                "photon kappa must satisfy |kappa| <= 0.2, got {}",
                self.photon.kappa
            )));
        }
        if self.fock.modes == 0 {
            return Err(LabError::Config("fock.modes must be positive".into()));
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<SpinBosonModel> {
        match &self.model {
            Some(ModelSource::Path(p)) => crate::model::load_model(&self.base_dir.join(p)),
            Some(ModelSource::Inline(cfg)) => cfg.build(&self.base_dir),
            None => Err(LabError::Config("a model is required".into())),
        }
    }

    /// Serialized model, for the configuration hash.
    pub fn model_text(&self) -> Result<String> {
        match &self.model {
            Some(ModelSource::Path(p)) => Ok(std::fs::read_to_string(self.base_dir.join(p))?),
            Some(ModelSource::Inline(cfg)) => cfg.to_toml(),
            None => Ok(String::new()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
experiment = "weak_coupling_scaling"
seed = 3

[grids]
lambdas = [0.4, 0.2, 0.1]
macro_times = [1.0]

[fock]
modes = 16
n_max = 3
scheme = "gauss_legendre"

[model.system]
eigenvalues = [0.0, 1.0]

[model.coupling]
matrix = "0,0,1,0\n1,0,0,0"

[model.density]
kind = "analytic"
gamma = 2.0
omega_c = 1.0
amplitude = 1.0

[model.dynamics]
lambda = 0.1
alpha = 1.0
"#;

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.fock.scheme, QuadratureScheme::GaussLegendre);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
        assert_eq!(cfg.build_model().unwrap().dim(), 2);
    }

    #[test]
    fn invalid_grids_rejected() {
        let zero = SAMPLE.replace("[0.4, 0.2, 0.1]", "[0.4, 0.0]");
        assert!(ExperimentConfig::from_toml(&zero).is_err());
        let empty = SAMPLE.replace("macro_times = [1.0]", "macro_times = []");
        assert!(ExperimentConfig::from_toml(&empty).is_err());
        let unknown = SAMPLE.replace("seed = 3", "seed = 3\nbogus = 1");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
    }
}
