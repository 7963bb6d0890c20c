use anyhow::{bail, Context, Result};
use ips_core::rules::{alternating_flip, RuleDocument};
use ips_core::{ParamsNN2, PeriodicRule};

/// Nearest-neighbour rules `(p11, p10, p01, p00)` from the rule taxonomy.
pub const PRESETS: &[(&str, [f64; 4])] = &[
    ("stochastic-ising", [1.0, 0.8, 0.2, 0.0]),
    ("stochastic-ising-noisy", [0.9, 0.8, 0.2, 0.1]),
    ("copy-neighbor", [1.0, 0.2, 0.8, 0.0]),
    ("copy-neighbor-noisy", [0.9, 0.2, 0.8, 0.1]),
    ("flip-neighbor", [0.0, 0.8, 0.2, 1.0]),
    ("flip-neighbor-noisy", [0.1, 0.8, 0.2, 0.9]),
    ("turn-to-zero", [0.0, 0.0, 0.0, 0.0]),
    ("turn-to-zero-noisy", [0.1, 0.1, 0.1, 0.1]),
    ("turn-to-zero-weak", [0.0, 0.0, 1.0, 0.0]),
    ("turn-to-zero-weak-noisy", [0.1, 0.1, 0.9, 0.1]),
    ("coalescing-cp", [1.0, 0.7, 0.7, 0.0]),
    ("coalescing-cp-noisy", [0.75, 0.75, 0.75, 0.01]),
    ("annihilating-cp", [0.0, 1.0, 1.0, 0.0]),
    ("annihilating-cp-noisy", [0.01, 0.9, 0.9, 0.01]),
    ("flip-state", [0.0, 0.0, 1.0, 1.0]),
    ("noisy-flip", [0.0, 1.0, 1.0, 1.0]),
    ("walls", [0.0, 1.0, 0.0, 0.0]),
    ("walls-0.9", [0.0, 0.9, 0.02, 0.02]),
    ("walls-0.99", [0.0, 0.99, 0.02, 0.02]),
    ("identity", [1.0, 1.0, 0.0, 0.0]),
];

/// Suffix that renames 0 and 1 on odd sites, e.g. `flip-neighbor+alternate`.
const ALTERNATE: &str = "+alternate";

fn preset(name: &str) -> Option<[f64; 4]> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

pub fn preset_names() -> String {
    PRESETS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}

/// Reads a rule from a preset name, `p11,p10,p01,p00`, inline JSON or a JSON file.
pub fn parse_rule(arg: &str) -> Result<PeriodicRule> {
    if let Some(base) = arg.strip_suffix(ALTERNATE) {
        let p = nn2_of(base).with_context(|| format!("`{ALTERNATE}` needs a nearest-neighbour rule, got `{base}`"))?;
        return Ok(alternating_flip(p));
    }
    if let Some(p) = nn2_of(arg) {
        return Ok(p.to_rule().into());
    }
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else if std::path::Path::new(arg).is_file() {
        std::fs::read_to_string(arg).with_context(|| format!("reading rule file {arg}"))?
    } else {
        bail!(
            "unknown rule `{arg}`: expected a preset ({}), four probabilities or a JSON rule",
            preset_names()
        );
    };
    let doc = RuleDocument::parse(&text).context("parsing rule JSON")?;
    Ok(doc.to_rule()?)
}

fn nn2_of(arg: &str) -> Option<ParamsNN2> {
    if let Some(p) = preset(arg) {
        return ParamsNN2::from_array(p).ok();
    }
    let parts: Vec<f64> = arg
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .ok()?;
    let arr: [f64; 4] = parts.try_into().ok()?;
    ParamsNN2::from_array(arr).ok()
}
