//! Figure presets shipped as scenario files.

use crate::config::Scenario;
use crate::error::{Error, Result};

/// (name, file contents) of every shipped scenario.
pub const PRESET_FILES: &[(&str, &str)] = &[
    ("bath_d1_delta1", include_str!("../presets/bath_d1_delta1.toml")),
    ("bath_d1_delta3", include_str!("../presets/bath_d1_delta3.toml")),
    ("bath_d2_delta1", include_str!("../presets/bath_d2_delta1.toml")),
    ("bath_d2_delta3", include_str!("../presets/bath_d2_delta3.toml")),
    ("bath_d3_delta1", include_str!("../presets/bath_d3_delta1.toml")),
    ("bath_d3_delta3", include_str!("../presets/bath_d3_delta3.toml")),
    ("chain_d1_delta1", include_str!("../presets/chain_d1_delta1.toml")),
    ("chain_d1_delta3", include_str!("../presets/chain_d1_delta3.toml")),
    ("chain_d2_delta1", include_str!("../presets/chain_d2_delta1.toml")),
    ("chain_d2_delta3", include_str!("../presets/chain_d2_delta3.toml")),
    ("chain_d3_delta1", include_str!("../presets/chain_d3_delta1.toml")),
    ("chain_d3_delta3", include_str!("../presets/chain_d3_delta3.toml")),
    ("diffusion_d1_delta1", include_str!("../presets/diffusion_d1_delta1.toml")),
    ("diffusion_d1_delta3", include_str!("../presets/diffusion_d1_delta3.toml")),
    ("diffusion_d2_delta1", include_str!("../presets/diffusion_d2_delta1.toml")),
    ("diffusion_d2_delta3", include_str!("../presets/diffusion_d2_delta3.toml")),
    ("diffusion_d3_delta1", include_str!("../presets/diffusion_d3_delta1.toml")),
    ("diffusion_d3_delta3", include_str!("../presets/diffusion_d3_delta3.toml")),
    ("near_axis_d1_delta1", include_str!("../presets/near_axis_d1_delta1.toml")),
    ("near_axis_d1_delta3", include_str!("../presets/near_axis_d1_delta3.toml")),
    ("near_axis_d2_delta1", include_str!("../presets/near_axis_d2_delta1.toml")),
    ("near_axis_d2_delta3", include_str!("../presets/near_axis_d2_delta3.toml")),
    ("near_axis_d3_delta1", include_str!("../presets/near_axis_d3_delta1.toml")),
    ("near_axis_d3_delta3", include_str!("../presets/near_axis_d3_delta3.toml")),
    ("oracle_check", include_str!("../presets/oracle_check.toml")),
    ("spectrum_d1_delta1", include_str!("../presets/spectrum_d1_delta1.toml")),
    ("spectrum_d1_delta3", include_str!("../presets/spectrum_d1_delta3.toml")),
    ("spectrum_d2_delta1", include_str!("../presets/spectrum_d2_delta1.toml")),
    ("spectrum_d2_delta3", include_str!("../presets/spectrum_d2_delta3.toml")),
    ("spectrum_d3_delta1", include_str!("../presets/spectrum_d3_delta1.toml")),
    ("spectrum_d3_delta3", include_str!("../presets/spectrum_d3_delta3.toml")),
];

/// What a figure sub-run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Spectrum,
    Observe,
    Bath,
    /// |β_r|² along the body diagonal of a d = 3 bath.
    Diagonal,
}

pub const FIGURES: &[&str] = &["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "figA1", "figA2", "figA3"];

pub fn preset(name: &str) -> Result<Scenario> {
    let text = PRESET_FILES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("no preset named {name}")))?;
    Scenario::parse(text)
}

fn grid6(prefix: &str) -> Vec<String> {
    let mut v = Vec::new();
    for d in 1..=3 {
        for delta in [1, 3] {
            v.push(format!("{prefix}_d{d}_delta{delta}"));
        }
    }
    v
}

/// Sub-runs of a figure as (preset name, task).
pub fn figure_plan(figure: &str) -> Result<Vec<(String, Task)>> {
    let with = |names: Vec<String>, task: Task| names.into_iter().map(|n| (n, task)).collect::<Vec<_>>();
    let plan = match figure {
        "fig1" => with(grid6("spectrum"), Task::Spectrum),
        "fig2" | "fig4" | "figA2" => with(grid6("chain"), Task::Observe),
        "fig3" => with((1..=3).map(|d| format!("chain_d{d}_delta1")).collect(), Task::Observe),
        "fig5" => with(vec!["bath_d1_delta1".into(), "bath_d1_delta3".into()], Task::Bath),
        "fig6" => with(vec!["bath_d2_delta1".into(), "bath_d2_delta3".into()], Task::Bath),
        "fig7" => with(vec!["bath_d3_delta1".into(), "bath_d3_delta3".into()], Task::Bath),
        "fig8" => with(grid6("diffusion"), Task::Observe),
        "figA1" => with(grid6("near_axis"), Task::Spectrum),
        "figA3" => with(vec!["bath_d3_delta1".into(), "bath_d3_delta3".into()], Task::Diagonal),
        other => return Err(Error::Config(format!("unknown figure {other}; known: {}", FIGURES.join(", ")))),
    };
    Ok(plan)
}
