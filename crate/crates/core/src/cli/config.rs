//! `--config <file>` support: `key = value` lines become flags unless the
//! same flag is already on the command line.

use std::fs;
use std::path::Path;

use super::CliError;

pub(crate) fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push((key, value.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn config_path(argv: &[String]) -> Option<(usize, usize, String)> {
    for (i, a) in argv.iter().enumerate() {
        if a == "--config" {
            return argv.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some((i, 1, p.to_string()));
        }
    }
    None
}

/// Returns `argv` with the config file's settings appended and the
/// `--config` flag itself removed.
pub(crate) fn expand(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some((pos, width, path)) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::file(Path::new(&path), e))?;
    let entries = parse_config(&text).map_err(|msg| CliError::Usage(format!("{path}: {msg}")))?;
    let mut out: Vec<String> = argv[..pos].iter().chain(&argv[pos + width..]).cloned().collect();
    let present = |key: &str| {
        let flag = format!("--{key}");
        let prefixed = format!("--{key}=");
        out.iter().any(|a| *a == flag || a.starts_with(&prefixed))
    };
    let mut extra = Vec::new();
    for (key, value) in entries {
        if present(&key) {
            continue;
        }
        match value.as_str() {
            "true" => extra.push(format!("--{key}")),
            "false" => {}
            _ => {
                extra.push(format!("--{key}"));
                extra.push(value);
            }
        }
    }
    out.extend(extra);
    Ok(out)
}
