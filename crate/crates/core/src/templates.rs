//! Built-in scenarios for the three reference experiments.

use crate::error::{invalid, Result};
use crate::scenario::Scenario;

pub const NAMES: [&str; 3] = ["a", "b", "c"];

const EXPERIMENT_A: &str = include_str!("../templates/experiment_a.toml");
const EXPERIMENT_B: &str = include_str!("../templates/experiment_b.toml");
const EXPERIMENT_C: &str = include_str!("../templates/experiment_c.toml");

/// Raw TOML of a template, comments included.
pub fn template_source(name: &str) -> Result<&'static str> {
    match name.to_ascii_lowercase().trim_start_matches("experiment_").trim_start_matches("experiment-") {
        "a" => Ok(EXPERIMENT_A),
        "b" => Ok(EXPERIMENT_B),
        "c" => Ok(EXPERIMENT_C),
        _ => Err(invalid(format!("unknown template '{name}', expected one of a, b, c"))),
    }
}

pub fn template(name: &str) -> Result<Scenario> {
    Scenario::from_toml(template_source(name)?)
}
