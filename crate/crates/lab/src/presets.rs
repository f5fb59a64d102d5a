//! Scenario files shipped with the binary.

use crate::config::ScenarioConfig;
use crate::LabError;

pub const BUNDLED: [(&str, &str); 6] = [
    ("flat-rigidity", include_str!("../presets/flat-rigidity.toml")),
    ("perturbed-monotone", include_str!("../presets/perturbed-monotone.toml")),
    ("flat-uniform", include_str!("../presets/flat-uniform.toml")),
    ("conformal-ricci-oracle", include_str!("../presets/conformal-ricci-oracle.toml")),
    ("forced-growth", include_str!("../presets/forced-growth.toml")),
    ("backward-uniqueness", include_str!("../presets/backward-uniqueness.toml")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

pub fn text(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn load(name: &str) -> Result<ScenarioConfig, LabError> {
    let text = text(name).ok_or_else(|| LabError::Config {
        field: String::new(),
        message: format!(
            "no scenario file or bundled preset named `{name}` (bundled: {})",
            names().collect::<Vec<_>>().join(", ")
        ),
    })?;
    ScenarioConfig::from_toml(text)
}
