use std::fmt;
use std::str::FromStr;

use super::{DetectorErrorModel, ErrorMechanism};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeFamily {
    Repetition,
    RotatedSurface,
}

/// Which fault locations carry the physical error rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseKind {
    /// Independent flips on data qubits, perfect syndrome extraction, one round.
    CodeCapacity,
    /// Data flips before every round plus ancilla measurement flips.
    CircuitLevel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CodeSpec {
    pub family: CodeFamily,
    pub distance: usize,
    pub rounds: usize,
    pub noise: NoiseKind,
    pub p: f64,
}

impl CodeSpec {
    fn validate(&self) -> Result<()> {
        if self.distance < 3 || self.distance % 2 == 0 {
            return Err(Error::InvalidSpec(format!(
                "distance must be odd and at least 3, got {}",
                self.distance
            )));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidSpec("rounds must be at least 1".into()));
        }
        if !(self.p > 0.0 && self.p < 0.5) {
            return Err(Error::InvalidSpec(format!("p must lie in (0, 0.5), got {}", self.p)));
        }
        Ok(())
    }
}

impl FromStr for CodeFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "repetition" => Ok(CodeFamily::Repetition),
            "rotated-surface" => Ok(CodeFamily::RotatedSurface),
            _ => Err(Error::InvalidSpec(format!("unknown code family `{s}`"))),
        }
    }
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodeFamily::Repetition => "repetition",
            CodeFamily::RotatedSurface => "rotated-surface",
        })
    }
}

impl FromStr for NoiseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "code-capacity" => Ok(NoiseKind::CodeCapacity),
            "circuit-level" | "circuit" | "phenomenological" => Ok(NoiseKind::CircuitLevel),
            _ => Err(Error::InvalidSpec(format!("unknown noise model `{s}`"))),
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseKind::CodeCapacity => "code-capacity",
            NoiseKind::CircuitLevel => "circuit-level",
        })
    }
}

/// Repetition-code memory protecting against bit flips.
///
/// Circuit-level: `rounds` rounds of ancilla parity measurements between
/// neighbouring data qubits, then a final data readout. Detector `t*(d-1)+j`
/// compares ancilla `j` in round `t` with round `t-1`; the last `d-1`
/// detectors compare the final data parities with the last ancilla round,
/// giving `(d-1)(rounds+1)` detectors. Faults: an X on every data qubit
/// before every round and a flipped outcome on every ancilla measurement.
///
/// Code-capacity: one round of perfect parity checks, `d-1` detectors, one
/// X fault per data qubit.
///
/// The single observable is the final value of data qubit 0.
pub fn build_repetition_dem(spec: &CodeSpec) -> Result<DetectorErrorModel> {
    spec.validate()?;
    if spec.family != CodeFamily::Repetition {
        return Err(Error::InvalidSpec("expected the repetition family".into()));
    }
    let d = spec.distance;
    let checks = d - 1;
    let data_flip = |base: usize, q: usize| -> Result<ErrorMechanism> {
        let mut dets = Vec::with_capacity(2);
        if q > 0 {
            dets.push((base + q - 1) as u32);
        }
        if q < checks {
            dets.push((base + q) as u32);
        }
        let obs: &[u32] = if q == 0 { &[0] } else { &[] };
        ErrorMechanism::new(spec.p, &dets, obs)
    };

    match spec.noise {
        NoiseKind::CodeCapacity => {
            if spec.rounds != 1 {
                return Err(Error::InvalidSpec("code-capacity noise uses exactly one round".into()));
            }
            let mechanisms = (0..d).map(|q| data_flip(0, q)).collect::<Result<Vec<_>>>()?;
            DetectorErrorModel::new(checks, 1, mechanisms)
        }
        NoiseKind::CircuitLevel => {
            let r = spec.rounds;
            let mut mechanisms = Vec::with_capacity(r * (d + checks));
            for t in 0..r {
                let base = t * checks;
                for q in 0..d {
                    mechanisms.push(data_flip(base, q)?);
                }
                for j in 0..checks {
                    let this_round = (base + j) as u32;
                    let next = (base + checks + j) as u32;
                    mechanisms.push(ErrorMechanism::new(spec.p, &[this_round, next], &[])?);
                }
            }
            DetectorErrorModel::new(checks * (r + 1), 1, mechanisms)
        }
    }
}

/// Stabilizers of the distance-`d` rotated surface code on a `d x d` grid of
/// data qubits (index `row * d + col`).
///
/// Plaquette `(r, c)` for `r, c` in `-1..d` covers the in-grid corners of
/// `{r, r+1} x {c, c+1}`; it is X-type when `r + c` is even. Interior
/// plaquettes are all kept; weight-2 boundary plaquettes are kept on the
/// top/bottom edges when X-type and on the left/right edges when Z-type.
/// Returns `(z_stabilizers, x_stabilizers)`.
pub(crate) fn rotated_surface_stabilizers(d: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let d = d as isize;
    let mut z_stabs = Vec::new();
    let mut x_stabs = Vec::new();
    for r in -1..d {
        for c in -1..d {
            let qubits: Vec<usize> = [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]
                .into_iter()
                .filter(|&(qr, qc)| (0..d).contains(&qr) && (0..d).contains(&qc))
                .map(|(qr, qc)| (qr * d + qc) as usize)
                .collect();
            let is_x = (r + c).rem_euclid(2) == 0;
            let keep = match qubits.len() {
                4 => true,
                2 => {
                    let horizontal_edge = r == -1 || r == d - 1;
                    let vertical_edge = c == -1 || c == d - 1;
                    (horizontal_edge && is_x) || (vertical_edge && !is_x)
                }
                _ => false,
            };
            if keep {
                if is_x {
                    x_stabs.push(qubits);
                } else {
                    z_stabs.push(qubits);
                }
            }
        }
    }
    (z_stabs, x_stabs)
}

/// Rotated surface code under independent X and Z noise with perfect checks.
///
/// Detectors `0..(d²-1)/2` are the Z-type stabilizers (they see X errors),
/// the rest are X-type. Observable 0 is logical Z (support: the top row),
/// flipped by X errors on that row; observable 1 is logical X (support: the
/// left column), flipped by Z errors there.
pub fn build_surface_code_capacity_dem(spec: &CodeSpec) -> Result<DetectorErrorModel> {
    spec.validate()?;
    if spec.family != CodeFamily::RotatedSurface {
        return Err(Error::InvalidSpec("expected the rotated-surface family".into()));
    }
    if spec.noise != NoiseKind::CodeCapacity {
        return Err(Error::InvalidSpec(
            "only code-capacity noise is generated for the surface code; load circuit-level models from a DEM file"
                .into(),
        ));
    }
    if spec.rounds != 1 {
        return Err(Error::InvalidSpec("code-capacity noise uses exactly one round".into()));
    }
    let d = spec.distance;
    let (z_stabs, x_stabs) = rotated_surface_stabilizers(d);
    let offset = z_stabs.len();
    let mut mechanisms = Vec::with_capacity(2 * d * d);
    for q in 0..d * d {
        let (row, col) = (q / d, q % d);
        let dets: Vec<u32> = z_stabs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(&q))
            .map(|(i, _)| i as u32)
            .collect();
        let obs: &[u32] = if row == 0 { &[0] } else { &[] };
        mechanisms.push(ErrorMechanism::new(spec.p, &dets, obs)?);

        let dets: Vec<u32> = x_stabs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contains(&q))
            .map(|(i, _)| (offset + i) as u32)
            .collect();
        let obs: &[u32] = if col == 0 { &[1] } else { &[] };
        mechanisms.push(ErrorMechanism::new(spec.p, &dets, obs)?);
    }
    DetectorErrorModel::new(z_stabs.len() + x_stabs.len(), 2, mechanisms)
}
