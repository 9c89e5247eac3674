//! Detector error models: independent error mechanisms and the detectors and
//! logical observables each one flips.
//!
//! Text I/O follows the flat subset of the Stim DEM format: `error(p)` lines
//! with optional `^` decomposition, `detector` / `logical_observable`
//! declarations and `#` comments. Repeat blocks and detector shifts are
//! rejected; feed flattened models.

mod builders;
mod parse;

pub use builders::{build_repetition_dem, build_surface_code_capacity_dem, CodeFamily, CodeSpec, NoiseKind};
pub use parse::parse_dem;

pub use crate::baselines::graph::extract_matching_graph;

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Detector and observable flips of one graph-like piece of a decomposed mechanism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub detectors: Vec<u32>,
    pub observables: Vec<u32>,
}

/// One independent error source.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorMechanism {
    pub probability: f64,
    /// Sorted, duplicate-free.
    pub detectors: Vec<u32>,
    /// Sorted, duplicate-free.
    pub observables: Vec<u32>,
    /// Components whose symmetric difference equals the whole mechanism.
    pub decomposition: Option<Vec<Component>>,
}

impl ErrorMechanism {
    pub fn new(probability: f64, detectors: &[u32], observables: &[u32]) -> Result<Self> {
        let mechanism = ErrorMechanism {
            probability,
            detectors: xor_indices(detectors),
            observables: xor_indices(observables),
            decomposition: None,
        };
        mechanism.validate()?;
        Ok(mechanism)
    }

    /// Builds a mechanism from its components; the whole is their XOR.
    pub fn decomposed(probability: f64, components: Vec<Component>) -> Result<Self> {
        let mut dets = Vec::new();
        let mut obs = Vec::new();
        for c in &components {
            dets.extend_from_slice(&c.detectors);
            obs.extend_from_slice(&c.observables);
        }
        let mechanism = ErrorMechanism {
            probability,
            detectors: xor_indices(&dets),
            observables: xor_indices(&obs),
            decomposition: Some(
                components
                    .into_iter()
                    .map(|c| Component {
                        detectors: xor_indices(&c.detectors),
                        observables: xor_indices(&c.observables),
                    })
                    .collect(),
            ),
        };
        mechanism.validate()?;
        Ok(mechanism)
    }

    fn validate(&self) -> Result<()> {
        if !(self.probability > 0.0 && self.probability <= 0.5) {
            return Err(Error::InvalidModel(format!(
                "probability {} outside (0, 0.5]",
                self.probability
            )));
        }
        Ok(())
    }

    /// Observable flips packed into a mask, bit `j` = observable `j`.
    pub fn observable_mask(&self) -> u64 {
        mask_of(&self.observables)
    }
}

pub(crate) fn mask_of(observables: &[u32]) -> u64 {
    observables.iter().fold(0u64, |acc, &o| acc ^ (1u64 << o))
}

/// Sorts and cancels repeated indices pairwise (XOR semantics).
pub(crate) fn xor_indices(indices: &[u32]) -> Vec<u32> {
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<u32> = Vec::with_capacity(sorted.len());
    for idx in sorted {
        if out.last() == Some(&idx) {
            out.pop();
        } else {
            out.push(idx);
        }
    }
    out
}

/// An ordered list of independent error mechanisms over `num_detectors`
/// detectors and `num_observables` logical observables.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorErrorModel {
    num_detectors: usize,
    num_observables: usize,
    mechanisms: Vec<ErrorMechanism>,
}

impl DetectorErrorModel {
    pub fn new(num_detectors: usize, num_observables: usize, mechanisms: Vec<ErrorMechanism>) -> Result<Self> {
        if num_detectors == 0 || num_observables == 0 {
            return Err(Error::InvalidModel(
                "models need at least one detector and one observable".into(),
            ));
        }
        if num_observables > 64 {
            return Err(Error::InvalidModel(format!(
                "{num_observables} observables; at most 64 are supported"
            )));
        }
        for (i, m) in mechanisms.iter().enumerate() {
            m.validate()?;
            if let Some(&d) = m.detectors.last() {
                if d as usize >= num_detectors {
                    return Err(Error::InvalidModel(format!(
                        "mechanism {i} references D{d} but the model has {num_detectors} detectors"
                    )));
                }
            }
            if let Some(&o) = m.observables.last() {
                if o as usize >= num_observables {
                    return Err(Error::InvalidModel(format!(
                        "mechanism {i} references L{o} but the model has {num_observables} observables"
                    )));
                }
            }
        }
        Ok(DetectorErrorModel {
            num_detectors,
            num_observables,
            mechanisms,
        })
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_observables(&self) -> usize {
        self.num_observables
    }

    pub fn mechanisms(&self) -> &[ErrorMechanism] {
        &self.mechanisms
    }

    /// Canonical text form. Every detector and observable is declared so the
    /// counts survive a round trip even when the highest index is never hit.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.mechanisms {
            write!(out, "error({})", m.probability).unwrap();
            match &m.decomposition {
                Some(components) => {
                    for (ci, c) in components.iter().enumerate() {
                        if ci > 0 {
                            out.push_str(" ^");
                        }
                        write_targets(&mut out, &c.detectors, &c.observables);
                    }
                }
                None => write_targets(&mut out, &m.detectors, &m.observables),
            }
            out.push('\n');
        }
        for d in 0..self.num_detectors {
            writeln!(out, "detector D{d}").unwrap();
        }
        for l in 0..self.num_observables {
            writeln!(out, "logical_observable L{l}").unwrap();
        }
        out
    }

    /// Hex SHA-256 of the canonical text form.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}

fn write_targets(out: &mut String, detectors: &[u32], observables: &[u32]) {
    for d in detectors {
        write!(out, " D{d}").unwrap();
    }
    for o in observables {
        write!(out, " L{o}").unwrap();
    }
}
