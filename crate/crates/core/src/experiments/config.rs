use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fibergen::FiberKind;
use crate::models::{PairPolicy, StructuralParams};
use crate::solver::{PatchShape, DEFAULT_MAX_FACTOR_ENTRIES};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    AssumptionScan,
    Heat,
    StructuralTensile,
    StructuralLateral,
    CdAnalysis,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::AssumptionScan => "assumption-scan",
            Self::Heat => "heat",
            Self::StructuralTensile => "structural-tensile",
            Self::StructuralLateral => "structural-lateral",
            Self::CdAnalysis => "cd-analysis",
        }
    }
}

/// A full experiment description, read from TOML.
///
/// ```toml
/// schema_version = 1
/// kind = "heat"
/// seed = 1
///
/// [[network]]
/// name = "grid"
/// source = { kind = "grid", points_per_side = 513 }
///
/// [[network]]
/// name = "fiber-weighted"
/// source = { kind = "fiber", preset = "uniform" }
/// conductivity = { kind = "uniform", low = 0.1, high = 1.0 }
///
/// [solver]
/// h_inverse = [4, 8, 16, 32]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Output directory; the command line may override it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default, rename = "network")]
    pub networks: Vec<NetworkSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub structural: StructuralConfig,
    #[serde(default)]
    pub cd: CdConfig,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub name: String,
    pub source: NetworkSource,
    #[serde(default)]
    pub conductivity: Conductivity,
    /// Overrides the experiment seed for this network.
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetworkSource {
    Grid {
        points_per_side: usize,
    },
    Fiber {
        preset: FiberKind,
        #[serde(default)]
        density: Option<f64>,
        #[serde(default)]
        fiber_length: Option<f64>,
    },
    File {
        path: PathBuf,
    },
}

/// Edge conductivities of the heat problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Conductivity {
    #[default]
    Unit,
    /// Independent draws from `U[low, high]`.
    Uniform { low: f64, high: f64 },
    /// The weights stored in the network file.
    EdgeWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub h_inverse: Vec<usize>,
    pub tol: f64,
    pub max_iterations: usize,
    pub patch_shape: PatchShape,
    /// Track `|u - u_l|_K` against a reference solution.
    pub reference: bool,
    pub max_factor_entries: usize,
    /// Lanczos steps for a spectrum estimate of `P`; 0 disables it.
    pub spectrum_steps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            h_inverse: vec![4, 8, 16, 32],
            tol: 1e-8,
            max_iterations: 1000,
            patch_shape: PatchShape::Open,
            reference: true,
            max_factor_entries: DEFAULT_MAX_FACTOR_ENTRIES,
            spectrum_steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub resolutions: Vec<usize>,
    pub dirichlet: bool,
    /// Defaults to the maximum edge length.
    pub r0: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { resolutions: vec![4, 8, 16, 32, 64], dirichlet: false, r0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructuralConfig {
    pub wire_radius: f64,
    pub youngs_modulus: f64,
    pub pair_policy: PairPolicy,
    /// Boundary stretch `g = [s x1, 0]` of the tensile test.
    pub tensile_strain: f64,
    /// Boundary stretch of the lateral test.
    pub lateral_strain: f64,
    /// Out-of-plane body force density of the lateral test.
    pub lateral_load: f64,
}

impl Default for StructuralConfig {
    fn default() -> Self {
        let p = StructuralParams::default();
        Self {
            wire_radius: p.wire_radius,
            youngs_modulus: p.youngs_modulus,
            pair_policy: p.pair_policy,
            tensile_strain: 0.2,
            lateral_strain: 0.1,
            lateral_load: -1e3,
        }
    }
}

impl StructuralConfig {
    pub fn params(&self) -> StructuralParams {
        StructuralParams { wire_radius: self.wire_radius, youngs_modulus: self.youngs_modulus, pair_policy: self.pair_policy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CdConfig {
    /// `C_d` used for the predicted rate.
    pub constant: f64,
}

impl Default for CdConfig {
    fn default() -> Self {
        Self { constant: 3.5 }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file. Relative network paths are resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for n in &mut cfg.networks {
            if let NetworkSource::File { path: p } = &mut n.source {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.networks.is_empty() {
            return Err(Error::Config("at least one [[network]] is required".into()));
        }
        let mut names: Vec<&str> = self.networks.iter().map(|n| n.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("network name '{}' is used twice", w[0])));
        }
        for n in &self.networks {
            if n.name.is_empty() || n.name.contains([',', '"', '\n']) {
                return Err(Error::Config(format!("invalid network name '{}'", n.name)));
            }
            match &n.source {
                NetworkSource::Grid { points_per_side } if *points_per_side < 2 => {
                    return Err(Error::Config(format!("network '{}': points_per_side must be at least 2", n.name)))
                }
                NetworkSource::File { path } if !path.is_file() => {
                    return Err(Error::Config(format!("network '{}': file {} does not exist", n.name, path.display())))
                }
                _ => {}
            }
            if let Conductivity::Uniform { low, high } = n.conductivity {
                if !(low > 0.0 && high >= low && high.is_finite()) {
                    return Err(Error::Config(format!("network '{}': need 0 < low <= high", n.name)));
                }
            }
        }
        let uses_solver = !matches!(self.kind, ExperimentKind::AssumptionScan);
        if uses_solver {
            if self.solver.h_inverse.is_empty() || self.solver.h_inverse.contains(&0) {
                return Err(Error::Config("solver.h_inverse must be a nonempty list of positive integers".into()));
            }
            if !(self.solver.tol > 0.0) || self.solver.max_iterations == 0 {
                return Err(Error::Config("solver.tol and solver.max_iterations must be positive".into()));
            }
        }
        let uses_analysis = matches!(self.kind, ExperimentKind::AssumptionScan | ExperimentKind::CdAnalysis);
        if uses_analysis && (self.analysis.resolutions.is_empty() || self.analysis.resolutions.contains(&0)) {
            return Err(Error::Config("analysis.resolutions must be a nonempty list of positive integers".into()));
        }
        if self.kind == ExperimentKind::CdAnalysis {
            if let Some(h) = self.solver.h_inverse.iter().find(|h| !self.analysis.resolutions.contains(h)) {
                return Err(Error::Config(format!(
                    "grid mismatch: H^-1 = {h} has no matching analysis resolution"
                )));
            }
            if !(self.cd.constant > 0.0) {
                return Err(Error::Config("cd.constant must be positive".into()));
            }
        }
        if matches!(self.kind, ExperimentKind::StructuralTensile | ExperimentKind::StructuralLateral) {
            self.structural.params().validate()?;
        }
        Ok(())
    }

    /// Built-in configurations for the standard studies.
    pub fn preset(kind: ExperimentKind, seed: u64) -> Self {
        let fiber = |name: &str, preset: FiberKind, density: Option<f64>| NetworkSpec {
            name: name.into(),
            source: NetworkSource::Fiber { preset, density, fiber_length: None },
            conductivity: Conductivity::Unit,
            seed: None,
        };
        let grid = NetworkSpec {
            name: "grid".into(),
            source: NetworkSource::Grid { points_per_side: 513 },
            conductivity: Conductivity::Unit,
            seed: None,
        };
        let networks = match kind {
            ExperimentKind::AssumptionScan => vec![
                fiber("uniform", FiberKind::Uniform, None),
                fiber("orient-bias", FiberKind::OrientBias, None),
                fiber("place-bias", FiberKind::PlaceBias, None),
            ],
            ExperimentKind::Heat => {
                let mut weighted = fiber("fiber-weighted", FiberKind::Uniform, None);
                weighted.conductivity = Conductivity::Uniform { low: 0.1, high: 1.0 };
                vec![grid, fiber("fiber", FiberKind::Uniform, None), weighted]
            }
            ExperimentKind::CdAnalysis => vec![grid, fiber("fiber", FiberKind::Uniform, None)],
            ExperimentKind::StructuralTensile => vec![fiber("orient-bias", FiberKind::OrientBias, None)],
            ExperimentKind::StructuralLateral => vec![fiber("place-bias", FiberKind::PlaceBias, Some(LATERAL_DENSITY))],
        };
        let analysis = match kind {
            ExperimentKind::CdAnalysis => AnalysisConfig { resolutions: vec![4, 8, 16, 32], ..Default::default() },
            _ => AnalysisConfig::default(),
        };
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            seed,
            output: None,
            networks,
            solver: SolverConfig::default(),
            analysis,
            structural: StructuralConfig::default(),
            cd: CdConfig::default(),
        }
    }
}

/// Fiber density of the lateral preset, chosen so that the local factors of
/// the three-component problem fit in about 4 GB.
pub const LATERAL_DENSITY: f64 = 600.0;
