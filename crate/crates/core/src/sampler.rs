//! Monte-Carlo (syndrome, label) shots from a detector error model.
//!
//! Randomness comes from ChaCha20 (`rand_chacha`). Shots are generated in
//! fixed chunks of [`CHUNK_SHOTS`]; chunk `c` uses the generator seeded with
//! `seed` (via `SeedableRng::seed_from_u64`) on stream `c`. Output therefore
//! depends only on (model, n, seed), never on the worker count.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::bits::{LogicalLabel, Syndrome};
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};

pub const CHUNK_SHOTS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shot {
    pub syndrome: Syndrome,
    pub label: LogicalLabel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotSet {
    fingerprint: String,
    seed: u64,
    num_detectors: usize,
    num_observables: usize,
    shots: Vec<Shot>,
}

impl ShotSet {
    pub fn new(
        fingerprint: String,
        seed: u64,
        num_detectors: usize,
        num_observables: usize,
        shots: Vec<Shot>,
    ) -> Result<Self> {
        for (i, s) in shots.iter().enumerate() {
            if s.syndrome.len() != num_detectors || s.label.len() != num_observables {
                return Err(Error::ShapeMismatch(format!(
                    "shot {i} has {}+{} bits, expected {num_detectors}+{num_observables}",
                    s.syndrome.len(),
                    s.label.len()
                )));
            }
        }
        Ok(ShotSet {
            fingerprint,
            seed,
            num_detectors,
            num_observables,
            shots,
        })
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_observables(&self) -> usize {
        self.num_observables
    }

    pub fn shots(&self) -> &[Shot] {
        &self.shots
    }

    pub fn len(&self) -> usize {
        self.shots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shots.is_empty()
    }

    /// Errors unless the set was generated from `model`.
    pub fn check_model(&self, model: &DetectorErrorModel) -> Result<()> {
        let expected = model.fingerprint();
        if self.fingerprint != expected {
            return Err(Error::FingerprintMismatch {
                expected,
                found: self.fingerprint.clone(),
            });
        }
        if self.num_detectors != model.num_detectors() || self.num_observables != model.num_observables() {
            return Err(Error::ShapeMismatch("shot widths differ from the model".into()));
        }
        Ok(())
    }

    /// Same syndromes, labels replaced (e.g. by a decoder's predictions).
    pub fn with_labels(&self, labels: Vec<LogicalLabel>) -> Result<ShotSet> {
        if labels.len() != self.shots.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} shots",
                labels.len(),
                self.shots.len()
            )));
        }
        let shots = self
            .shots
            .iter()
            .zip(labels)
            .map(|(s, label)| Shot {
                syndrome: s.syndrome.clone(),
                label,
            })
            .collect();
        ShotSet::new(
            self.fingerprint.clone(),
            self.seed,
            self.num_detectors,
            self.num_observables,
            shots,
        )
    }

    /// Writes the `01` text format.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#dem-fingerprint {} seed {}", self.fingerprint, self.seed)?;
        let mut line = String::with_capacity(self.num_detectors + self.num_observables + 2);
        for s in &self.shots {
            line.clear();
            line.push_str(&s.syndrome.to_01_string());
            line.push(' ');
            line.push_str(&s.label.to_01_string());
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `01` text format. Widths come from the first shot line.
    pub fn read_from<R: BufRead>(r: R) -> Result<ShotSet> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty shot file".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let (fingerprint, seed) = match fields.as_slice() {
            ["#dem-fingerprint", fp, "seed", seed] => (
                fp.to_string(),
                seed.parse::<u64>()
                    .map_err(|_| Error::Format(format!("bad seed in header `{header}`")))?,
            ),
            _ => return Err(Error::Format(format!("bad shot file header `{header}`"))),
        };
        let mut shots = Vec::new();
        let mut widths: Option<(usize, usize)> = None;
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let line_no = i + 2;
            let (syn, label) = line
                .split_once(' ')
                .ok_or_else(|| Error::Format(format!("line {line_no}: expected `<syndrome> <label>`")))?;
            let syndrome =
                Syndrome::parse_01(syn).ok_or_else(|| Error::Format(format!("line {line_no}: bad syndrome bits")))?;
            let label = LogicalLabel::parse_01(label)
                .ok_or_else(|| Error::Format(format!("line {line_no}: bad label bits")))?;
            let w = *widths.get_or_insert((syndrome.len(), label.len()));
            if (syndrome.len(), label.len()) != w {
                return Err(Error::Format(format!("line {line_no}: inconsistent width")));
            }
            shots.push(Shot { syndrome, label });
        }
        let (m, l) = widths.unwrap_or((0, 0));
        ShotSet::new(fingerprint, seed, m, l, shots)
    }
}

/// Draws `n` shots by firing each mechanism independently and XOR-ing its flips.
pub fn sample_shots(model: &DetectorErrorModel, n: usize, seed: u64) -> Result<ShotSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    let chunks = n.div_ceil(CHUNK_SHOTS);
    let shots: Vec<Shot> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK_SHOTS;
            let count = CHUNK_SHOTS.min(n - start);
            sample_chunk(model, seed, c as u64, count)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    ShotSet::new(
        model.fingerprint(),
        seed,
        model.num_detectors(),
        model.num_observables(),
        shots,
    )
}

fn sample_chunk(model: &DetectorErrorModel, seed: u64, stream: u64, count: usize) -> Vec<Shot> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|_| {
            let mut syndrome = Syndrome::zeros(model.num_detectors());
            let mut label = 0u64;
            for m in model.mechanisms() {
                if rng.random::<f64>() < m.probability {
                    for &d in &m.detectors {
                        syndrome.flip(d as usize);
                    }
                    label ^= m.observable_mask();
                }
            }
            Shot {
                syndrome,
                label: LogicalLabel::from_u64(label, model.num_observables()),
            }
        })
        .collect()
}

/// Prefix/suffix split; the training side gets `floor(len * fraction)` shots.
pub fn split_train_test(shots: &ShotSet, fraction: f64) -> Result<(ShotSet, ShotSet)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let cut = (shots.len() as f64 * fraction).floor() as usize;
    let part = |range: &[Shot]| {
        ShotSet::new(
            shots.fingerprint.clone(),
            shots.seed,
            shots.num_detectors,
            shots.num_observables,
            range.to_vec(),
        )
    };
    Ok((part(&shots.shots[..cut])?, part(&shots.shots[cut..])?))
}
