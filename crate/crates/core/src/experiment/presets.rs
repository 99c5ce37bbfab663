//! The checked-in experiment presets, embedded at compile time.

use super::ExperimentConfig;
use crate::error::{Error, Result};

const PRESETS: &[(&str, &str)] = &[
    ("lorenz-adam", include_str!("../../presets/lorenz-adam.toml")),
    ("lorenz-adam-scaled", include_str!("../../presets/lorenz-adam-scaled.toml")),
    ("lorenz-dopamine1", include_str!("../../presets/lorenz-dopamine1.toml")),
    ("lorenz-dopamine1-scaled", include_str!("../../presets/lorenz-dopamine1-scaled.toml")),
    ("lorenz-dopamine2", include_str!("../../presets/lorenz-dopamine2.toml")),
    ("lorenz-dopamine2-scaled", include_str!("../../presets/lorenz-dopamine2-scaled.toml")),
    ("lorenz-sgd", include_str!("../../presets/lorenz-sgd.toml")),
    ("lorenz-sgd-scaled", include_str!("../../presets/lorenz-sgd-scaled.toml")),
    ("lorenz-swp", include_str!("../../presets/lorenz-swp.toml")),
    ("lorenz-swp-scaled", include_str!("../../presets/lorenz-swp-scaled.toml")),
    ("lorenz-wp", include_str!("../../presets/lorenz-wp.toml")),
    ("lorenz-wp-scaled", include_str!("../../presets/lorenz-wp-scaled.toml")),
    ("rossler-adam", include_str!("../../presets/rossler-adam.toml")),
    ("rossler-adam-scaled", include_str!("../../presets/rossler-adam-scaled.toml")),
    ("rossler-dopamine1", include_str!("../../presets/rossler-dopamine1.toml")),
    ("rossler-dopamine1-scaled", include_str!("../../presets/rossler-dopamine1-scaled.toml")),
    ("rossler-dopamine2", include_str!("../../presets/rossler-dopamine2.toml")),
    ("rossler-dopamine2-scaled", include_str!("../../presets/rossler-dopamine2-scaled.toml")),
    ("rossler-sgd", include_str!("../../presets/rossler-sgd.toml")),
    ("rossler-sgd-scaled", include_str!("../../presets/rossler-sgd-scaled.toml")),
    ("rossler-swp", include_str!("../../presets/rossler-swp.toml")),
    ("rossler-swp-scaled", include_str!("../../presets/rossler-swp-scaled.toml")),
    ("rossler-wp", include_str!("../../presets/rossler-wp.toml")),
    ("rossler-wp-scaled", include_str!("../../presets/rossler-wp-scaled.toml")),
    ("xor-adam", include_str!("../../presets/xor-adam.toml")),
    ("xor-adam-scaled", include_str!("../../presets/xor-adam-scaled.toml")),
    ("xor-dopamine1", include_str!("../../presets/xor-dopamine1.toml")),
    ("xor-dopamine1-scaled", include_str!("../../presets/xor-dopamine1-scaled.toml")),
    ("xor-dopamine2", include_str!("../../presets/xor-dopamine2.toml")),
    ("xor-dopamine2-scaled", include_str!("../../presets/xor-dopamine2-scaled.toml")),
    ("xor-wp", include_str!("../../presets/xor-wp.toml")),
    ("xor-wp-scaled", include_str!("../../presets/xor-wp-scaled.toml")),
];

/// Names of every preset, sorted.
pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

/// The TOML source of a preset.
pub fn preset_source(name: &str) -> Result<&'static str> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Parse and validate a preset by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(preset_source(name)?)
}
