use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::active::{DEFAULT_PADDING, DEFAULT_PER_FACE};
use crate::error::{Error, Result};
use crate::filter::{FilterParams, DEFAULT_INITIAL_COV_SCALE, DEFAULT_RHO};
use crate::gaussian::{Criterion, DEFAULT_RENYI_ALPHA};
use crate::par::Parallelism;

/// Where touches land.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneSource {
    /// Exact hits on the posed mesh plus per-touch Gaussian noise.
    #[default]
    SurfaceSamples,
    /// Mesh vertices perturbed once per run; touches on the perturbed mesh
    /// carry no further noise.
    Vertices,
}

/// How the next touch is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    Gain(Criterion),
    /// Uniformly random candidate, as a baseline.
    Random,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Gain(c) => c.name(),
            Policy::Random => "random",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `"kl"`, `"all"`, or a list such as `["kl", "random"]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CriterionSpec {
    One(String),
    Many(Vec<String>),
}

impl Default for CriterionSpec {
    fn default() -> Self {
        CriterionSpec::One("all".into())
    }
}

impl CriterionSpec {
    pub fn policies(&self, alpha: f64) -> Result<Vec<Policy>> {
        let names: Vec<&str> = match self {
            CriterionSpec::One(s) => vec![s.as_str()],
            CriterionSpec::Many(v) => v.iter().map(String::as_str).collect(),
        };
        if names.is_empty() {
            return Err(Error::Config("criterion list is empty".into()));
        }
        let mut out = Vec::new();
        for name in names {
            match name {
                "all" => out.extend(Criterion::all(alpha).map(Policy::Gain)),
                "random" => out.push(Policy::Random),
                other => out.push(Policy::Gain(
                    Criterion::parse_with_alpha(other, alpha).map_err(|e| Error::Config(e.to_string()))?,
                )),
            }
        }
        for (i, p) in out.iter().enumerate() {
            if out[..i].iter().any(|q| q.name() == p.name()) {
                return Err(Error::Config(format!("criterion '{}' listed twice", p.name())));
            }
        }
        Ok(out)
    }
}

/// Experiment parameters. Field names are the JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Mesh file (`.ply` or `.obj`), or `builtin:<name>`.
    pub mesh: String,
    /// Uniform scale applied to the mesh after loading.
    pub mesh_scale: f64,
    pub criterion: CriterionSpec,
    pub alpha: f64,
    /// Per-coordinate standard deviation of touch noise (m).
    pub noise_sigma: f64,
    /// Half-width of the uniform translation range (m).
    pub init_translation_range: f64,
    /// Half-width of the uniform Euler-angle range (degrees).
    pub init_rotation_range: f64,
    pub initial_cov_scale: f64,
    pub rho: f64,
    pub max_iterations: usize,
    pub rotation_tolerance: f64,
    pub translation_tolerance: f64,
    pub model_samples: usize,
    pub per_face: usize,
    pub padding: f64,
    pub max_touches: usize,
    pub runs: usize,
    pub seed: u64,
    pub scene_source: SceneSource,
    /// Log per-touch wall time. Off by default so that outputs are
    /// reproducible byte for byte.
    pub record_timing: bool,
    pub parallelism: Parallelism,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mesh: "builtin:blob".into(),
            mesh_scale: 1.0,
            criterion: CriterionSpec::default(),
            alpha: DEFAULT_RENYI_ALPHA,
            noise_sigma: 5e-3,
            init_translation_range: 0.05,
            init_rotation_range: 30.0,
            initial_cov_scale: DEFAULT_INITIAL_COV_SCALE,
            rho: DEFAULT_RHO,
            max_iterations: 50,
            rotation_tolerance: 1e-4,
            translation_tolerance: 1e-5,
            model_samples: 5000,
            per_face: DEFAULT_PER_FACE,
            padding: DEFAULT_PADDING,
            max_touches: 20,
            runs: 6,
            seed: 0,
            scene_source: SceneSource::default(),
            record_timing: false,
            parallelism: Parallelism::default(),
            csv_path: "touches.csv".into(),
            summary_path: "summary.json".into(),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file. Read failures are I/O errors,
    /// everything else is a config error.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        check(!self.mesh.is_empty(), || "mesh must be set".into())?;
        check(self.mesh_scale.is_finite() && self.mesh_scale > 0.0, || {
            format!("mesh_scale must be positive, got {}", self.mesh_scale)
        })?;
        check(finite_nonneg(self.noise_sigma), || {
            format!("noise_sigma must be >= 0, got {}", self.noise_sigma)
        })?;
        check(finite_nonneg(self.init_translation_range), || {
            format!("init_translation_range must be >= 0, got {}", self.init_translation_range)
        })?;
        check(finite_nonneg(self.init_rotation_range) && self.init_rotation_range <= 180.0, || {
            format!("init_rotation_range must be in [0, 180], got {}", self.init_rotation_range)
        })?;
        check(self.initial_cov_scale.is_finite() && self.initial_cov_scale > 0.0, || {
            format!("initial_cov_scale must be positive, got {}", self.initial_cov_scale)
        })?;
        check(self.rho.is_finite() && self.rho > 0.0, || format!("rho must be positive, got {}", self.rho))?;
        check(finite_nonneg(self.rotation_tolerance) && finite_nonneg(self.translation_tolerance), || {
            "convergence tolerances must be >= 0".into()
        })?;
        check(self.model_samples >= 1, || "model_samples must be >= 1".into())?;
        check(self.per_face >= 1, || "per_face must be >= 1".into())?;
        check(self.padding.is_finite() && self.padding >= 1.0, || {
            format!("padding must be >= 1, got {}", self.padding)
        })?;
        check(self.max_touches >= 4, || format!("max_touches must be >= 4, got {}", self.max_touches))?;
        check(self.runs >= 1, || "runs must be >= 1".into())?;
        self.policies()?;
        Ok(())
    }

    pub fn policies(&self) -> Result<Vec<Policy>> {
        self.criterion.policies(self.alpha)
    }

    pub fn filter_params(&self) -> FilterParams {
        FilterParams {
            rho: self.rho,
            max_iterations: self.max_iterations,
            rotation_tolerance: self.rotation_tolerance,
            translation_tolerance: self.translation_tolerance,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
