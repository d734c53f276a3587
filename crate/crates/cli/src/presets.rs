//! Built-in scenarios, one per bifurcation-diagram panel.

use crate::config::{ConfigError, ScenarioConfig};

const PRESETS: &[(&str, &str)] = &[
    ("fig1a", include_str!("../presets/fig1a.conf")),
    ("fig1b", include_str!("../presets/fig1b.conf")),
    ("fig2a", include_str!("../presets/fig2a.conf")),
    ("fig2b", include_str!("../presets/fig2b.conf")),
    ("fig3a", include_str!("../presets/fig3a.conf")),
    ("fig3b", include_str!("../presets/fig3b.conf")),
    ("fig3c", include_str!("../presets/fig3c.conf")),
    ("fig4a", include_str!("../presets/fig4a.conf")),
    ("fig4b", include_str!("../presets/fig4b.conf")),
    ("fig5a", include_str!("../presets/fig5a.conf")),
    ("fig5b", include_str!("../presets/fig5b.conf")),
    ("fig5c", include_str!("../presets/fig5c.conf")),
    ("fig6a", include_str!("../presets/fig6a.conf")),
    ("fig6b", include_str!("../presets/fig6b.conf")),
    ("fig6c", include_str!("../presets/fig6c.conf")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// Raw preset file.
pub fn text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let t = text(name).ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    ScenarioConfig::parse(t)
}
