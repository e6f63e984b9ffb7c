//! The bundled scenario catalogue, embedded at compile time. The same
//! files ship under `crates/cli/scenarios/` as editable starting points
//! for custom configs.

use crate::config::{ConfigError, ScenarioConfig, Theorem};

pub struct CatalogEntry {
    pub id: &'static str,
    pub theorem: Theorem,
    pub summary: &'static str,
    pub json: &'static str,
}

/// Fixed order: listing output is stable across runs.
pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        id: "implicit-shift-harmonic",
        theorem: Theorem::Thm42,
        summary: "simple implicit scheme, shift operator, harmonic steps",
        json: include_str!("../scenarios/implicit-shift-harmonic.json"),
    },
    CatalogEntry {
        id: "implicit-shift-constant",
        theorem: Theorem::Rem43,
        summary: "strength-function rate with unit constant steps",
        json: include_str!("../scenarios/implicit-shift-constant.json"),
    },
    CatalogEntry {
        id: "implicit-shift-envelope",
        theorem: Theorem::Cor44,
        summary: "inverse-strength residual envelope on harmonic steps",
        json: include_str!("../scenarios/implicit-shift-envelope.json"),
    },
    CatalogEntry {
        id: "implicit-diagonal-harmonic",
        theorem: Theorem::Thm42,
        summary: "positive-diagonal operator, closed-form resolvent",
        json: include_str!("../scenarios/implicit-diagonal-harmonic.json"),
    },
    CatalogEntry {
        id: "implicit-approx-thm55",
        theorem: Theorem::Thm55,
        summary: "implicit scheme driven by perturbed operators",
        json: include_str!("../scenarios/implicit-approx-thm55.json"),
    },
    CatalogEntry {
        id: "implicit-approx-thm56",
        theorem: Theorem::Thm56,
        summary: "perturbed operators with summed-perturbation bound",
        json: include_str!("../scenarios/implicit-approx-thm56.json"),
    },
    CatalogEntry {
        id: "ishikawa-perturbed-thm64",
        theorem: Theorem::Thm64,
        summary: "Ishikawa scheme, uniformly continuous perturbation",
        json: include_str!("../scenarios/ishikawa-perturbed-thm64.json"),
    },
    CatalogEntry {
        id: "ishikawa-two-op-hilbert",
        theorem: Theorem::Thm73,
        summary: "two-operator Ishikawa scheme in a smooth instance",
        json: include_str!("../scenarios/ishikawa-two-op-hilbert.json"),
    },
    CatalogEntry {
        id: "negative-broken-rate",
        theorem: Theorem::Rem43,
        summary: "negative control: rate override that must fail",
        json: include_str!("../scenarios/negative-broken-rate.json"),
    },
    CatalogEntry {
        id: "negative-wrong-theta",
        theorem: Theorem::Thm42,
        summary: "negative control: inflated modulus rejected pre-run",
        json: include_str!("../scenarios/negative-wrong-theta.json"),
    },
];

pub fn find(id: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.id == id)
}

/// Loads a scenario from a bundled id or, failing that, a file path.
pub fn load(spec: &str) -> Result<ScenarioConfig, ConfigError> {
    if let Some(entry) = find(spec) {
        return ScenarioConfig::from_json(entry.json);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| {
        ConfigError::Invalid(format!("`{spec}` is neither a bundled scenario id nor a readable file: {e}"))
    })?;
    ScenarioConfig::from_json(&text)
}
