use crate::{CliError, RunConfig};

/// Reference configurations shipped with the binary.
pub const PRESETS: [(&str, &str); 5] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("fig5", include_str!("../presets/fig5.toml")),
    ("fig6", include_str!("../presets/fig6.toml")),
];

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

pub fn source(name: &str) -> Result<&'static str, CliError> {
    PRESETS
        .iter()
        .find(|p| p.0 == name)
        .map(|p| p.1)
        .ok_or_else(|| CliError::config(format!("unknown preset '{name}' (available: {})", names().join(", "))))
}

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    RunConfig::parse(source(name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_parse() {
        for name in names() {
            preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("fig3").is_err());
    }
}
