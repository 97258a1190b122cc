//! TOML run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use twopoint_core::{ArrivalDist, ArrivalModel, JourneyDist, ModelSpec, SimConfig, SurveyWindows};

use crate::error::{CliError, CliResult};

/// Fallback output directory when neither the flag nor the config sets one.
pub const OUT_DIR_ENV: &str = "TWOPOINT_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub windows: SurveyWindows,
    /// `exp-uniform`, `exp-empirical`, `weibull-uniform` or `weibull-empirical`.
    #[serde(default = "default_model")]
    pub model: String,
    /// Bin width in hours for empirical arrival densities.
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapConfig {
    /// Zero disables bootstrap intervals.
    #[serde(default = "default_resamples")]
    pub resamples: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { resamples: default_resamples() }
    }
}

/// Journey law for simulation. Exponential is given by its mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimJourney {
    Exponential { mean: f64 },
    Weibull { shape: f64, scale: f64 },
}

impl SimJourney {
    pub fn build(&self) -> twopoint_core::Result<JourneyDist> {
        match *self {
            SimJourney::Exponential { mean } => JourneyDist::exponential_with_mean(mean),
            SimJourney::Weibull { shape, scale } => JourneyDist::weibull(shape, scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub journey: SimJourney,
    /// Vehicles arriving upstream during the upstream window.
    pub population: usize,
}

fn default_model() -> String {
    "exp-uniform".into()
}
fn default_bin_width() -> f64 {
    twopoint_core::distributions::DEFAULT_BIN_WIDTH
}
fn default_alpha() -> f64 {
    0.05
}
fn default_resamples() -> usize {
    1000
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    fn validate(&self) -> CliResult<()> {
        self.model_spec()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.bin_width > 0.0) {
            return Err(CliError::Usage(format!("bin_width must be positive, got {}", self.bin_width)));
        }
        let r = self.bootstrap.resamples;
        if r != 0 && r < twopoint_core::bootstrap::MIN_RESAMPLES {
            return Err(CliError::Usage(format!(
                "bootstrap.resamples must be 0 or at least {}, got {r}",
                twopoint_core::bootstrap::MIN_RESAMPLES
            )));
        }
        if let Some(sim) = &self.simulation {
            sim.journey.build()?;
        }
        Ok(())
    }

    pub fn model_spec(&self) -> CliResult<ModelSpec> {
        let mut spec: ModelSpec = self.model.parse()?;
        if let ArrivalModel::Empirical { bin_width } = &mut spec.arrival {
            *bin_width = self.bin_width;
        }
        Ok(spec)
    }

    /// Simulation settings with uniform arrivals over the upstream window.
    pub fn sim_config(&self) -> CliResult<SimConfig> {
        let sim = self.simulation.ok_or_else(|| CliError::Usage("config has no [simulation] section".into()))?;
        Ok(SimConfig {
            windows: self.windows,
            journey: sim.journey.build()?,
            arrival: ArrivalDist::uniform(self.windows.upstream_start, self.windows.upstream_end)?,
            population: sim.population,
            seed: self.seed,
        })
    }
}

/// Flag, then config, then the environment, then the working directory.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&RunConfig>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}
