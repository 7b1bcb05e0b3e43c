//! Scenario configuration files.
//!
//! A config is a flat TOML table. Frequencies are given as `f = omega / 2pi`
//! in keys ending `_over_2pi_hz` and converted to rad/s once, in
//! [`ScenarioConfig::resolve`]. Lengths are in metres, times in seconds.
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use septrap_core::constants::{angular, ATOMIC_MASS_UNIT, BE9_MASS_U, ELEMENTARY_CHARGE};
use septrap_core::coulomb::{IonSpecies, TrapPair};
use septrap_core::fockspace::Level;
use septrap_core::protocol::{LaserParams, Phases, ProtocolMode};
use septrap_core::sweep::{RampDirection, SweepSpec};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Pulse,
    Exchange,
    Sweep,
    Cnot,
    Chain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ClosedForm,
    FullNumeric,
}

impl From<Mode> for ProtocolMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::ClosedForm => ProtocolMode::ClosedForm,
            Mode::FullNumeric => ProtocolMode::FullNumeric,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Species {
    Be9,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialLevel {
    G,
    E,
}

/// Configuration of one scenario run.
///
/// | key | unit | used by |
/// |---|---|---|
/// | `name` | file stem of outputs | all |
/// | `scenario` | `pulse`, `exchange`, `sweep`, `cnot`, `chain` | all |
/// | `mode` | `closed-form` or `full-numeric` | pulse, exchange, sweep, cnot |
/// | `species`, `mass_u` | ion species, optional mass override in u | all |
/// | `nu1_over_2pi_hz`, `nu2_over_2pi_hz` | trap frequencies | all |
/// | `d` | trap separation, m | all |
/// | `coupling_over_2pi_hz` | optional fixed exchange coupling | exchange, cnot, chain |
/// | `rabi_over_2pi_hz`, `eta` | laser | pulse, cnot, chain |
/// | `sideband` | sideband order | pulse |
/// | `phases` | `[first, carrier, last]` pulse phases, rad | pulse (first only), cnot |
/// | `delta_over_2pi_hz`, `tau` | ramp detuning and duration | sweep, cnot, chain |
/// | `duration` | optional evolution time, s | pulse, exchange |
/// | `initial_level`, `initial_n` | initial ion level and phonon number | pulse, exchange, sweep |
/// | `n_max` | Fock cutoff per mode | all |
/// | `n_ions` | traps in the chain | chain |
/// | `samples` | CSV rows of time series | pulse, exchange, sweep |
/// | `cnot_tol` | carrier-duration solver tolerance | pulse, cnot, chain |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenario: Scenario,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_species")]
    pub species: Species,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_u: Option<f64>,
    pub nu1_over_2pi_hz: f64,
    pub nu2_over_2pi_hz: f64,
    pub d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling_over_2pi_hz: Option<f64>,
    #[serde(default = "default_rabi")]
    pub rabi_over_2pi_hz: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default = "default_sideband")]
    pub sideband: usize,
    #[serde(default = "default_phases")]
    pub phases: [f64; 3],
    #[serde(default = "default_delta")]
    pub delta_over_2pi_hz: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default = "default_level")]
    pub initial_level: InitialLevel,
    #[serde(default)]
    pub initial_n: usize,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_n_ions")]
    pub n_ions: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_cnot_tol")]
    pub cnot_tol: f64,
}

fn default_mode() -> Mode {
    Mode::ClosedForm
}
fn default_species() -> Species {
    Species::Be9
}
fn default_rabi() -> f64 {
    500e3
}
fn default_eta() -> f64 {
    0.33
}
fn default_sideband() -> usize {
    1
}
fn default_phases() -> [f64; 3] {
    let p = Phases::default();
    [p.first, p.carrier, p.last]
}
fn default_delta() -> f64 {
    1e5 / std::f64::consts::TAU
}
fn default_tau() -> f64 {
    9e-6
}
fn default_level() -> InitialLevel {
    InitialLevel::E
}
fn default_n_max() -> usize {
    10
}
fn default_n_ions() -> usize {
    2
}
fn default_samples() -> usize {
    101
}
fn default_cnot_tol() -> f64 {
    1e-2
}

/// A config that failed to load or validate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Offending key, or `config` for syntax errors.
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    fn new(field: &str, reason: impl Into<String>) -> Self {
        ConfigError { field: field.to_string(), reason: reason.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid `{}`: {}", self.field, self.reason)
    }
}

impl std::error::Error for ConfigError {}

/// Physical parameters in rad/s, ready for the simulator.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub pair: TrapPair,
    pub coupling: Option<f64>,
    pub laser: LaserParams,
    pub phases: Phases,
    pub ramp: SweepSpec,
    pub initial_level: Level,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::new("config", e.message()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::new(field, format!("must be positive, got {v}")))
            }
        };
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(ConfigError::new("name", "must be a non-empty file stem"));
        }
        if let Some(m) = self.mass_u {
            positive("mass_u", m)?;
        }
        positive("nu1_over_2pi_hz", self.nu1_over_2pi_hz)?;
        positive("nu2_over_2pi_hz", self.nu2_over_2pi_hz)?;
        positive("d", self.d)?;
        if let Some(g) = self.coupling_over_2pi_hz {
            positive("coupling_over_2pi_hz", g)?;
        }
        positive("rabi_over_2pi_hz", self.rabi_over_2pi_hz)?;
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(ConfigError::new("eta", "must be non-negative"));
        }
        if self.phases.iter().any(|p| !p.is_finite()) {
            return Err(ConfigError::new("phases", "must be finite"));
        }
        if !self.delta_over_2pi_hz.is_finite() {
            return Err(ConfigError::new("delta_over_2pi_hz", "must be finite"));
        }
        positive("tau", self.tau)?;
        if let Some(t) = self.duration {
            if !(t.is_finite() && t >= 0.0) {
                return Err(ConfigError::new("duration", "must be non-negative"));
            }
        }
        if self.n_max < 1 {
            return Err(ConfigError::new("n_max", "must be at least 1"));
        }
        if self.initial_n > self.n_max {
            return Err(ConfigError::new("initial_n", "exceeds n_max"));
        }
        if self.n_ions < 2 {
            return Err(ConfigError::new("n_ions", "a chain needs at least two traps"));
        }
        if self.samples < 2 {
            return Err(ConfigError::new("samples", "need at least two samples"));
        }
        positive("cnot_tol", self.cnot_tol)?;
        Ok(())
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        self.validate()?;
        let mass = self.mass_u.unwrap_or(match self.species {
            Species::Be9 => BE9_MASS_U,
        });
        let ion = IonSpecies::new(mass * ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE)
            .map_err(|e| ConfigError::new("mass_u", e.to_string()))?;
        let pair = TrapPair::new([ion; 2], [angular(self.nu1_over_2pi_hz), angular(self.nu2_over_2pi_hz)], self.d)
            .map_err(|e| ConfigError::new("d", e.to_string()))?;
        let ramp = SweepSpec::new(angular(self.delta_over_2pi_hz), self.tau, RampDirection::On)
            .map_err(|e| ConfigError::new("delta_over_2pi_hz", e.to_string()))?;
        Ok(Resolved {
            pair,
            coupling: self.coupling_over_2pi_hz.map(angular),
            laser: LaserParams { rabi: angular(self.rabi_over_2pi_hz), eta: self.eta },
            phases: Phases::new(self.phases[0], self.phases[1], self.phases[2]),
            ramp,
            initial_level: match self.initial_level {
                InitialLevel::G => Level::Ground,
                InitialLevel::E => Level::Excited,
            },
        })
    }
}

/// Rescales laser power by `power_factor` (Rabi frequency by its square
/// root) and moves the traps to `distance`. A fixed coupling is dropped so
/// that it is recomputed from the new distance.
pub fn scale_parameters(
    base: &ScenarioConfig,
    power_factor: f64,
    distance: f64,
) -> Result<ScenarioConfig, ConfigError> {
    if !(power_factor.is_finite() && power_factor > 0.0) {
        return Err(ConfigError::new("power_factor", "must be positive"));
    }
    if !(distance.is_finite() && distance > 0.0) {
        return Err(ConfigError::new("d", "must be positive"));
    }
    if power_factor == 1.0 && distance == base.d {
        return Ok(base.clone());
    }
    let mut out = base.clone();
    out.rabi_over_2pi_hz *= power_factor.sqrt();
    out.d = distance;
    out.coupling_over_2pi_hz = None;
    Ok(out)
}
