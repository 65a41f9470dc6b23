//! Built-in scenario manifests, shipped as TOML files under `scenarios/`.

use serde::Serialize;

use crate::config::{parse_config, Config};
use crate::error::{HarnessError, Result};

macro_rules! manifests {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../scenarios/", $name, ".toml")))),*]
    };
}

const BUILTIN: &[(&str, &str)] = manifests![
    "fig2",
    "fig3",
    "fig4a",
    "fig4b",
    "fig5a",
    "fig5b",
    "fig6",
    "fig7a",
    "fig7b",
    "fig8",
    "fig9",
    "fig10",
    "fig11",
    "fig11-static",
    "fig12a",
    "fig12b",
];

/// Catalog line for one built-in manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: &'static str,
    pub provenance: String,
    pub notes: Vec<String>,
}

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(name, _)| *name)
}

/// Parses the named built-in manifest.
pub fn builtin(name: &str) -> Result<Config> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| HarnessError::UnknownScenario(name.to_string()))?;
    parse_config(text, &format!("builtin:{name}"))
}

/// Every built-in manifest in a fixed order.
pub fn list_scenarios() -> Result<Vec<CatalogEntry>> {
    BUILTIN
        .iter()
        .map(|(name, _)| {
            let config = builtin(name)?;
            let kind = match config {
                Config::Scenario(_) => "scenario",
                Config::Sweep(_) => "sweep",
            };
            let s = config.scenario();
            Ok(CatalogEntry { name, kind, provenance: s.provenance.clone(), notes: s.notes.clone() })
        })
        .collect()
}

/// A manifest path if one exists on disk, otherwise a built-in name.
pub fn resolve(target: &str) -> Result<Config> {
    let path = std::path::Path::new(target);
    if path.is_file() {
        crate::config::load_config(path)
    } else {
        builtin(target)
    }
}
