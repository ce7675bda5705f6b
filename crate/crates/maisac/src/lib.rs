//! File formats and batch orchestration for the movable-antenna ISAC experiments.

pub mod commands;
pub mod config_file;
pub mod output;

pub use commands::{execute, Command, Options, Summary};
pub use config_file::{config_hash, parse_config, parse_str, to_toml, ConfigError};

/// Parses a seed list such as `0-19,25`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (
                    a.trim().parse().map_err(|_| format!("bad seed range '{part}'"))?,
                    b.trim().parse().map_err(|_| format!("bad seed range '{part}'"))?,
                );
                if a > b {
                    return Err(format!("empty seed range '{part}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad seed '{part}'"))?),
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}
