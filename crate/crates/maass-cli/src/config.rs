//! `key = value` configuration files overriding the solver defaults.

use std::path::Path;

use anyhow::{bail, Context, Result};
use maass::solver::{Normalization, SolverConfig};

/// Applies the settings in `text` on top of `cfg`. Blank lines and lines
/// starting with `#` are ignored.
///
/// Keys: `y1`, `y2`, `m`, `q`, `eps`, `accept`, `refine_below`,
/// `normalization` (`cusp:n=value` items separated by commas) and
/// `compare` (comma-separated indices at infinity).
pub fn apply(cfg: &mut SolverConfig, text: &str) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key = value, got '{line}'", lineno + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        let ctx = || format!("line {}: bad value for {key}: '{value}'", lineno + 1);
        match key {
            "y1" => cfg.y1 = value.parse().with_context(ctx)?,
            "y2" => cfg.y2 = value.parse().with_context(ctx)?,
            "m" => cfg.m = Some(value.parse().with_context(ctx)?),
            "q" => cfg.q = Some(value.parse().with_context(ctx)?),
            "eps" => cfg.eps = value.parse().with_context(ctx)?,
            "accept" => cfg.accept = value.parse().with_context(ctx)?,
            "refine_below" => cfg.refine_below = value.parse().with_context(ctx)?,
            "normalization" => {
                cfg.normalization = Some(parse_normalization(value).with_context(ctx)?)
            }
            "compare" => {
                let idx = value
                    .split(',')
                    .map(|s| s.trim().parse::<i64>())
                    .collect::<Result<Vec<_>, _>>()
                    .with_context(ctx)?;
                cfg.compare = Some(idx);
            }
            _ => bail!("line {}: unknown key '{key}'", lineno + 1),
        }
    }
    Ok(())
}

pub fn apply_file(cfg: &mut SolverConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    apply(cfg, &text).with_context(|| format!("in config {}", path.display()))
}

/// `0:1=1` or `0:1=0, 0:2=1`; a bare index `n=value` means the cusp at infinity.
pub fn parse_normalization(s: &str) -> Result<Normalization> {
    let mut entries = Vec::new();
    for item in s.split(',') {
        let Some((lhs, value)) = item.split_once('=') else {
            bail!("normalization item '{item}' needs '='");
        };
        let (cusp, n) = match lhs.split_once(':') {
            Some((c, n)) => (c.trim().parse()?, n.trim().parse()?),
            None => (0, lhs.trim().parse()?),
        };
        entries.push((cusp, n, value.trim().parse()?));
    }
    if entries.is_empty() {
        bail!("empty normalization");
    }
    Ok(Normalization::new(entries))
}
