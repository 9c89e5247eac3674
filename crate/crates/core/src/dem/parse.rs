use super::{Component, DetectorErrorModel, ErrorMechanism};
use crate::error::{Error, Result};

enum Target {
    Detector(u32),
    Observable(u32),
    Separator,
}

/// Parses DEM text. Identical-symptom lines stay separate mechanisms.
pub fn parse_dem(text: &str) -> Result<DetectorErrorModel> {
    let mut mechanisms = Vec::new();
    let mut num_detectors = 0usize;
    let mut num_observables = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        let (name, arg, rest) = split_instruction(line, line_no)?;
        let targets = rest
            .split_whitespace()
            .map(|tok| parse_target(tok, line_no))
            .collect::<Result<Vec<_>>>()?;

        for t in &targets {
            match *t {
                Target::Detector(d) => num_detectors = num_detectors.max(d as usize + 1),
                Target::Observable(o) => num_observables = num_observables.max(o as usize + 1),
                Target::Separator => {}
            }
        }

        match name {
            "error" => {
                let arg = arg.ok_or_else(|| syntax(line_no, "error instruction needs a probability argument"))?;
                let p: f64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| syntax(line_no, format!("bad probability `{}`", arg.trim())))?;
                if !(p > 0.0 && p <= 0.5) {
                    return Err(Error::ProbabilityOutOfRange {
                        line: line_no,
                        value: p,
                    });
                }
                mechanisms.push(build_mechanism(p, &targets, line_no)?);
            }
            "detector" | "logical_observable" => {
                let want_detector = name == "detector";
                for t in &targets {
                    match t {
                        Target::Detector(_) if want_detector => {}
                        Target::Observable(_) if !want_detector => {}
                        _ => return Err(syntax(line_no, format!("unexpected target in `{name}` declaration"))),
                    }
                }
            }
            other => {
                return Err(syntax(line_no, format!("unsupported instruction `{other}`")));
            }
        }
    }

    DetectorErrorModel::new(num_detectors.max(1), num_observables.max(1), mechanisms)
}

fn split_instruction(line: &str, line_no: usize) -> Result<(&str, Option<&str>, &str)> {
    let name_end = line.find(|c: char| c == '(' || c.is_whitespace()).unwrap_or(line.len());
    let name = &line[..name_end];
    let after = line[name_end..].trim_start();
    if let Some(inner) = after.strip_prefix('(') {
        let close = inner.find(')').ok_or_else(|| syntax(line_no, "unclosed `(`"))?;
        Ok((name, Some(&inner[..close]), &inner[close + 1..]))
    } else {
        Ok((name, None, after))
    }
}

fn parse_target(tok: &str, line_no: usize) -> Result<Target> {
    if tok == "^" {
        return Ok(Target::Separator);
    }
    let (kind, digits) = match tok.as_bytes().first() {
        Some(b'D' | b'd') => ("detector", &tok[1..]),
        Some(b'L' | b'l') => ("observable", &tok[1..]),
        _ => return Err(syntax(line_no, format!("unrecognized target `{tok}`"))),
    };
    if digits.starts_with('-') {
        return Err(Error::NegativeIndex {
            line: line_no,
            kind,
            token: tok.to_string(),
        });
    }
    let value: u32 = digits
        .parse()
        .map_err(|_| syntax(line_no, format!("bad index in `{tok}`")))?;
    Ok(if kind == "detector" {
        Target::Detector(value)
    } else {
        Target::Observable(value)
    })
}

fn build_mechanism(p: f64, targets: &[Target], line_no: usize) -> Result<ErrorMechanism> {
    let mut components = vec![Component {
        detectors: Vec::new(),
        observables: Vec::new(),
    }];
    for t in targets {
        let current = components.last_mut().unwrap();
        match *t {
            Target::Detector(d) => current.detectors.push(d),
            Target::Observable(o) => current.observables.push(o),
            Target::Separator => {
                if current.detectors.is_empty() && current.observables.is_empty() {
                    return Err(syntax(line_no, "empty component around `^`"));
                }
                components.push(Component {
                    detectors: Vec::new(),
                    observables: Vec::new(),
                });
            }
        }
    }
    if components.len() == 1 {
        let c = &components[0];
        return ErrorMechanism::new(p, &c.detectors, &c.observables);
    }
    let last = components.last().unwrap();
    if last.detectors.is_empty() && last.observables.is_empty() {
        return Err(syntax(line_no, "trailing `^`"));
    }
    ErrorMechanism::decomposed(p, components)
}

fn syntax(line: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        message: message.into(),
    }
}
