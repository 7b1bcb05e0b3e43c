//! Configs reproducing the design's quoted numbers, shipped with the binary.

use crate::config::{ConfigError, ScenarioConfig};

pub const PRESETS: [(&str, &str); 7] = [
    ("paper-g-1p5khz", include_str!("../presets/paper-g-1p5khz.toml")),
    ("paper-gamma", include_str!("../presets/paper-gamma.toml")),
    ("paper-t3-29p6us", include_str!("../presets/paper-t3-29p6us.toml")),
    ("paper-cnot-405us", include_str!("../presets/paper-cnot-405us.toml")),
    ("paper-cnot-88p9us", include_str!("../presets/paper-cnot-88p9us.toml")),
    ("paper-chain-709p7us", include_str!("../presets/paper-chain-709p7us.toml")),
    ("paper-rwa-check", include_str!("../presets/paper-rwa-check.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let text = source(name).ok_or_else(|| ConfigError {
        field: "preset".into(),
        reason: format!("unknown preset `{name}`; see list-presets"),
    })?;
    ScenarioConfig::parse(text)
}
