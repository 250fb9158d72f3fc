//! TOML configuration: schema, defaults, merging and unit conversion.
//!
//! A config file is a set of nested sections (`[delays]`, `[stack]`,
//! `[profile]`, `[service]`, `[utility]`, `[resilience]`, `[controller]`,
//! `[sim]`) plus optional `[[experiment]]` entries. Every key has a
//! default matching the reference operating point, so a file only names
//! what it changes: the file is deep-merged over the defaults and the
//! result must deserialize with no unknown keys. Times are given in
//! milliseconds and link rates in Mbit/s; [`FileConfig::resolve`]
//! converts to the SI units the library works in.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{ControlPolicy, ControllerConfig, ControllerError};
use crate::protocol_delay::{DelayParams, ProtocolError, SecurityProtocol, IPV4_BYTES, IPV6_BYTES};
use crate::queueing::{service_rate, Architecture, QueueingError, ServiceModel};
use crate::resilience::{ResilienceError, ResilienceWeights, UtilityParams};
use crate::scenario::{ScenarioError, StormProfile};
use crate::sim::{SimConfig, SimError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config does not serialize: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("ip_version must be 4 or 6, got {0}")]
    BadIpVersion(u8),
    #[error("service rate override must be non-negative and finite, got {0} UEs/s")]
    BadRateOverride(f64),
    #[error("experiment name {0:?} appears more than once")]
    DuplicateExperiment(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Queueing(#[from] QueueingError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Resilience(#[from] ResilienceError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Experiment families the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Analytic load table: both deployments at four utilization levels.
    Table5,
    /// Analytic processing-time table at a fixed arrival rate.
    Table6,
    /// Storm resilience comparison of fixed and adaptive policies.
    Table7,
    /// Wire-size transmission delays across link rates.
    Fig4,
    /// Mean per-user delay as utilization approaches saturation.
    Fig5,
    /// One storm simulation of the configured scenario.
    StormFigs,
    /// Ad-hoc run of whatever the config describes.
    Custom,
}

impl ExperimentKind {
    /// The kind's config-file spelling.
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Table5 => "table5",
            ExperimentKind::Table6 => "table6",
            ExperimentKind::Table7 => "table7",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Fig5 => "fig5",
            ExperimentKind::StormFigs => "storm_figs",
            ExperimentKind::Custom => "custom",
        }
    }
}

/// A named, possibly customized run selectable from the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    /// Partial config deep-merged over the base config for this run.
    #[serde(default = "empty_table")]
    pub overrides: toml::Value,
}

fn empty_table() -> toml::Value {
    toml::Value::Table(toml::map::Map::new())
}

impl ExperimentSpec {
    pub fn plain(name: &str, kind: ExperimentKind) -> Self {
        Self {
            name: name.to_owned(),
            kind,
            overrides: empty_table(),
        }
    }
}

/// Link and processing delays. Times in milliseconds, rate in Mbit/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySection {
    pub transmission_rate_mbps: f64,
    pub link_distance_m: f64,
    pub propagation_speed_m_per_s: f64,
    pub per_message_processing_ms: Vec<f64>,
    pub d_ru_bbu_ms: f64,
    pub d_ru_cu_ms: f64,
    pub queuing_delay_ms: f64,
}

impl Default for DelaySection {
    fn default() -> Self {
        Self {
            transmission_rate_mbps: 1000.0,
            link_distance_m: 100.0,
            propagation_speed_m_per_s: 2.0e8,
            per_message_processing_ms: vec![10.0; 3],
            d_ru_bbu_ms: 0.25,
            d_ru_cu_ms: 1.75,
            queuing_delay_ms: 0.0,
        }
    }
}

impl DelaySection {
    pub fn to_params(&self) -> DelayParams {
        DelayParams {
            transmission_rate_bps: self.transmission_rate_mbps * 1e6,
            link_distance_m: self.link_distance_m,
            propagation_speed_mps: self.propagation_speed_m_per_s,
            per_message_processing_s: self
                .per_message_processing_ms
                .iter()
                .map(|ms| ms / 1e3)
                .collect(),
            d_ru_bbu_s: self.d_ru_bbu_ms / 1e3,
            d_ru_cu_s: self.d_ru_cu_ms / 1e3,
            queuing_delay_s: self.queuing_delay_ms / 1e3,
        }
    }
}

/// Wire-stack choices for the sizing experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackSection {
    pub security: SecurityProtocol,
    /// 4 or 6.
    pub ip_version: u8,
    /// Apply the per-message size calibration to raw header sums.
    pub calibrated: bool,
}

impl Default for StackSection {
    fn default() -> Self {
        Self {
            security: SecurityProtocol::None,
            ip_version: 4,
            calibrated: true,
        }
    }
}

impl StackSection {
    pub fn ip_bytes(&self) -> Result<u32, ConfigError> {
        match self.ip_version {
            4 => Ok(IPV4_BYTES),
            6 => Ok(IPV6_BYTES),
            v => Err(ConfigError::BadIpVersion(v)),
        }
    }
}

/// Service capacity. Rates in UEs/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSection {
    pub architecture: Architecture,
    pub servers: u32,
    /// Explicit per-server rate; 0 derives it from the delay model.
    pub mu_override_per_s: f64,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            architecture: Architecture::OpenRan,
            servers: 1,
            mu_override_per_s: 0.0,
        }
    }
}

/// Resilience phase weights. Times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResilienceSection {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub delta_t_des_ms: f64,
}

impl Default for ResilienceSection {
    fn default() -> Self {
        Self {
            w1: 0.4,
            w2: 0.4,
            w3: 0.2,
            delta_t_des_ms: 100_000.0, // 100 s recovery target
        }
    }
}

impl ResilienceSection {
    pub fn to_weights(&self) -> ResilienceWeights {
        ResilienceWeights {
            w1: self.w1,
            w2: self.w2,
            w3: self.w3,
            delta_t_des_s: self.delta_t_des_ms / 1e3,
        }
    }
}

/// Server-count policy and adaptive-controller weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    pub mode: ControlPolicy,
    pub v: f64,
    pub w: f64,
    pub c_max: u32,
}

impl Default for ControllerSection {
    fn default() -> Self {
        Self {
            mode: ControlPolicy::Fixed,
            v: 1.0,
            w: 1.0,
            c_max: 10,
        }
    }
}

/// Simulation stepping. Times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub step_ms: f64,
    pub seed: u64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            step_ms: 1000.0,
            seed: 1,
        }
    }
}

/// The complete config-file schema with every default filled in.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub delays: DelaySection,
    pub stack: StackSection,
    pub profile: StormProfile,
    pub service: ServiceSection,
    pub utility: UtilityParams,
    pub resilience: ResilienceSection,
    pub controller: ControllerSection,
    pub sim: SimSection,
    #[serde(default)]
    pub experiment: Vec<ExperimentSpec>,
}

/// A config resolved to SI units with the service rate derived.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub delay_params: DelayParams,
    pub security: SecurityProtocol,
    pub ip_bytes: u32,
    pub calibrated: bool,
    pub sim: SimConfig,
}

/// Recursively merges `overlay` into `base`. Tables merge key by key;
/// any other value, arrays included, replaces the base value outright.
pub fn deep_merge(base: &mut toml::Value, overlay: &toml::Value) {
    match (base, overlay) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (key, value) in o {
                match b.get_mut(key) {
                    Some(slot) => deep_merge(slot, value),
                    None => {
                        b.insert(key.clone(), value.clone());
                    }
                }
            }
        }
        (slot, value) => *slot = value.clone(),
    }
}

fn merge_into_defaults(overlay: &toml::Value) -> Result<FileConfig, ConfigError> {
    let mut base = toml::Value::try_from(FileConfig::default())?;
    deep_merge(&mut base, overlay);
    let cfg: FileConfig = base.try_into()?;
    cfg.check_experiment_names()?;
    Ok(cfg)
}

/// Parses a partial TOML document over the defaults.
pub fn from_toml_str(text: &str) -> Result<FileConfig, ConfigError> {
    let overlay: toml::Value = toml::from_str(text)?;
    merge_into_defaults(&overlay)
}

/// Loads a config file, or the pure defaults when no path is given.
pub fn load_or_default(path: Option<&Path>) -> Result<FileConfig, ConfigError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.to_owned(),
                source,
            })?;
            from_toml_str(&text)
        }
        None => Ok(FileConfig::default()),
    }
}

impl FileConfig {
    fn check_experiment_names(&self) -> Result<(), ConfigError> {
        let mut seen = HashSet::new();
        for spec in &self.experiment {
            if !seen.insert(spec.name.as_str()) {
                return Err(ConfigError::DuplicateExperiment(spec.name.clone()));
            }
        }
        Ok(())
    }

    /// Applies an experiment's partial overrides to this config. The
    /// experiment list itself is not inherited: the result describes a
    /// single run.
    pub fn with_overrides(&self, overrides: &toml::Value) -> Result<FileConfig, ConfigError> {
        let mut bare = self.clone();
        bare.experiment.clear();
        let mut base = toml::Value::try_from(&bare)?;
        deep_merge(&mut base, overrides);
        Ok(base.try_into()?)
    }

    /// The effective config as a reloadable TOML document.
    pub fn to_toml_string(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Converts to SI units, derives the service rate and validates
    /// everything.
    pub fn resolve(&self) -> Result<Settings, ConfigError> {
        let delay_params = self.delays.to_params();
        delay_params.validate()?;
        let ip_bytes = self.stack.ip_bytes()?;
        let override_mu = self.service.mu_override_per_s;
        if !(override_mu.is_finite() && override_mu >= 0.0) {
            return Err(ConfigError::BadRateOverride(override_mu));
        }
        let mu = if override_mu > 0.0 {
            override_mu
        } else {
            service_rate(&delay_params, self.service.architecture)?
        };
        let sim = SimConfig {
            profile: self.profile,
            service: ServiceModel {
                architecture: self.service.architecture,
                mu_per_server: mu,
                servers: self.service.servers,
            },
            policy: self.controller.mode,
            controller: ControllerConfig {
                v: self.controller.v,
                w: self.controller.w,
                c_max: self.controller.c_max,
            },
            utility: self.utility,
            resilience: self.resilience.to_weights(),
            step_s: self.sim.step_ms / 1e3,
            seed: self.sim.seed,
        };
        sim.validate()?;
        Ok(Settings {
            delay_params,
            security: self.stack.security,
            ip_bytes,
            calibrated: self.stack.calibrated,
            sim,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::config_hash;

    #[test]
    fn defaults_resolve_to_the_reference_operating_point() {
        let settings = FileConfig::default().resolve().unwrap();
        assert_eq!(settings.delay_params.transmission_rate_bps, 1.0e9);
        assert_eq!(settings.sim.service.architecture, Architecture::OpenRan);
        assert!((settings.sim.service.mu_per_server - 28.368794326241137).abs() < 1e-9);
        assert_eq!(settings.sim.profile.lambda_storm, 200.0);
        assert_eq!(settings.sim.step_s, 1.0);
        assert_eq!(settings.ip_bytes, IPV4_BYTES);
    }

    #[test]
    fn partial_file_changes_only_named_keys() {
        let cfg =
            from_toml_str("[service]\nservers = 4\n\n[profile]\nlambda_storm = 300.0\n").unwrap();
        assert_eq!(cfg.service.servers, 4);
        assert_eq!(cfg.profile.lambda_storm, 300.0);
        assert_eq!(cfg.profile.lambda_normal, 20.0);
        assert_eq!(cfg.delays, DelaySection::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            from_toml_str("[service]\nbogus = 1\n"),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            from_toml_str("[nonsense]\nx = 1\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn experiment_overrides_apply_to_a_bare_copy() {
        let cfg = from_toml_str(
            "[[experiment]]\nname = \"hot\"\nkind = \"storm_figs\"\n\
             [experiment.overrides.profile]\nlambda_storm = 500.0\n",
        )
        .unwrap();
        let spec = &cfg.experiment[0];
        assert_eq!(spec.kind, ExperimentKind::StormFigs);
        let effective = cfg.with_overrides(&spec.overrides).unwrap();
        assert_eq!(effective.profile.lambda_storm, 500.0);
        assert_eq!(effective.profile.lambda_normal, 20.0);
        assert!(effective.experiment.is_empty());
    }

    #[test]
    fn duplicate_experiment_names_are_rejected() {
        let text = "[[experiment]]\nname = \"a\"\nkind = \"custom\"\n\
                    [[experiment]]\nname = \"a\"\nkind = \"table5\"\n";
        assert!(matches!(
            from_toml_str(text),
            Err(ConfigError::DuplicateExperiment(_))
        ));
    }

    #[test]
    fn units_convert_to_si() {
        let cfg = from_toml_str(
            "[delays]\ntransmission_rate_mbps = 500.0\nd_ru_cu_ms = 2.5\n\
             [sim]\nstep_ms = 500.0\n\n[resilience]\ndelta_t_des_ms = 50000.0\n",
        )
        .unwrap();
        let settings = cfg.resolve().unwrap();
        assert_eq!(settings.delay_params.transmission_rate_bps, 5.0e8);
        assert_eq!(settings.delay_params.d_ru_cu_s, 2.5e-3);
        assert_eq!(settings.sim.step_s, 0.5);
        assert_eq!(settings.sim.resilience.delta_t_des_s, 50.0);
    }

    #[test]
    fn effective_config_round_trips() {
        let cfg = from_toml_str("[service]\narchitecture = \"monolithic\"\nservers = 2\n").unwrap();
        let text = cfg.to_toml_string().unwrap();
        let reloaded = from_toml_str(&text).unwrap();
        assert_eq!(cfg, reloaded);
        let a = config_hash(&cfg.resolve().unwrap().sim);
        let b = config_hash(&reloaded.resolve().unwrap().sim);
        assert_eq!(a, b);
    }

    #[test]
    fn rate_override_and_ip_version_paths() {
        let cfg = from_toml_str("[service]\nmu_override_per_s = 31.5\n").unwrap();
        let settings = cfg.resolve().unwrap();
        assert_eq!(settings.sim.service.mu_per_server, 31.5);

        let cfg = from_toml_str("[stack]\nip_version = 6\n").unwrap();
        assert_eq!(cfg.resolve().unwrap().ip_bytes, IPV6_BYTES);
        let cfg = from_toml_str("[stack]\nip_version = 5\n").unwrap();
        assert!(matches!(cfg.resolve(), Err(ConfigError::BadIpVersion(5))));

        let cfg = from_toml_str("[service]\nmu_override_per_s = -3.0\n").unwrap();
        assert!(matches!(
            cfg.resolve(),
            Err(ConfigError::BadRateOverride(_))
        ));
    }

    #[test]
    fn missing_file_reports_io_error() {
        let err = load_or_default(Some(Path::new("/nonexistent/config.toml"))).unwrap_err();
        assert!(matches!(err, ConfigError::Io { .. }));
    }
}
