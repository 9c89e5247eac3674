//! Fully coherent error correction of a distance-3 repetition memory.
//!
//! Qubits 0..3 hold data, 3..5 are the parity ancillas, and the decoding
//! register starts at qubit 5. One round runs:
//!
//! 1. X errors injected on data qubits (a sampled Pauli trajectory),
//! 2. parity extraction `d0,d1 -> a0` and `d1,d2 -> a1`,
//! 3. the decoding blocks, with every syndrome-gated rotation replaced by a
//!    rotation controlled on the matching ancilla,
//! 4. X on all three data qubits controlled by one decoding qubit,
//! 5. a Z readout of data qubit 0, the logical observable.
//!
//! No mid-circuit measurement happens, so the outcome statistics must match
//! measuring the ancillas and feeding the syndrome to the classical decoding
//! circuit (deferred measurement); [`equivalence_check`] verifies that.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{AnsatzConfig, Entangler, ParameterSet};
use crate::bits::BitVec;
use crate::error::{Error, Result};
use crate::simulator::{outcome_distribution, StateVector, MAX_QUBITS};

pub const DISTANCE: usize = 3;
const DATA: usize = 3;
const ANCILLAS: usize = 2;
const DECODE_OFFSET: usize = DATA + ANCILLAS;
const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct SelfCorrectConfig {
    pub decode_qubits: usize,
    pub blocks: usize,
    /// Coefficients indexed `[decode qubit][block][ancilla]`.
    pub params: ParameterSet,
    pub entangler: Entangler,
    /// Independent X-error probability per data qubit.
    pub p: f64,
    /// Decoding qubit that drives the logical X.
    pub control_qubit: usize,
    pub shots: usize,
    pub seed: u64,
}

impl SelfCorrectConfig {
    /// Two decoding qubits with the second one in control.
    pub fn new(blocks: usize, params: ParameterSet, p: f64, shots: usize, seed: u64) -> Self {
        SelfCorrectConfig {
            decode_qubits: 2,
            blocks,
            params,
            entangler: Entangler::CzChain,
            p,
            control_qubit: 1,
            shots,
            seed,
        }
    }

    pub fn total_qubits(&self) -> usize {
        DECODE_OFFSET + self.decode_qubits
    }

    /// Classical decoding circuit with the same shape: the two ancilla
    /// outcomes as syndrome, the control qubit as the single readout.
    pub fn classical_ansatz(&self) -> AnsatzConfig {
        AnsatzConfig {
            qubits: self.decode_qubits,
            blocks: self.blocks,
            syndrome_len: ANCILLAS,
            readout: vec![self.control_qubit],
            entangler: self.entangler,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.decode_qubits == 0 || self.blocks == 0 {
            return Err(Error::InvalidArgument(
                "need at least one decoding qubit and block".into(),
            ));
        }
        if self.total_qubits() > MAX_QUBITS {
            return Err(Error::QubitCapExceeded {
                qubits: self.total_qubits(),
                max: MAX_QUBITS,
            });
        }
        if !(self.p >= 0.0 && self.p < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "p must lie in [0, 0.5), got {}",
                self.p
            )));
        }
        if self.control_qubit >= self.decode_qubits {
            return Err(Error::InvalidArgument(format!(
                "control qubit {} outside the {}-qubit decoding register",
                self.control_qubit, self.decode_qubits
            )));
        }
        self.params
            .check_shape(&self.classical_ansatz())
            .map_err(|e| Error::ConfigMismatch(e.to_string()))
    }
}

/// Parity-check outcomes `(d0 ^ d1, d1 ^ d2)` of an X-error pattern.
pub fn pattern_syndrome(pattern: [bool; 3]) -> [bool; 2] {
    [pattern[0] ^ pattern[1], pattern[1] ^ pattern[2]]
}

/// Final state of one trajectory with the given injected errors.
pub fn coherent_state(cfg: &SelfCorrectConfig, pattern: [bool; 3]) -> Result<StateVector> {
    cfg.validate()?;
    let mut state = StateVector::zero_state(cfg.total_qubits())?;
    let anc = |i: usize| DATA + i;
    let dq = |q: usize| DECODE_OFFSET + q;

    for (q, &err) in pattern.iter().enumerate() {
        if err {
            state.apply_x(q);
        }
    }
    state.apply_cnot(0, anc(0));
    state.apply_cnot(1, anc(0));
    state.apply_cnot(1, anc(1));
    state.apply_cnot(2, anc(1));

    let params = &cfg.params;
    for b in 0..cfg.blocks {
        for q in 0..cfg.decode_qubits {
            for i in 0..ANCILLAS {
                state.apply_controlled_rx(anc(i), dq(q), params.theta[params.index(q, b, i)]);
            }
        }
        for q in 0..cfg.decode_qubits {
            for i in 0..ANCILLAS {
                state.apply_controlled_ry(anc(i), dq(q), params.phi[params.index(q, b, i)]);
            }
        }
        for q in 0..cfg.decode_qubits.saturating_sub(1) {
            match cfg.entangler {
                Entangler::CzChain => state.apply_cz(dq(q), dq(q + 1)),
                Entangler::CnotChain => state.apply_cnot(dq(q), dq(q + 1)),
            }
        }
    }

    for data in 0..DATA {
        state.apply_cnot(dq(cfg.control_qubit), data);
    }

    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidArgument(format!("trajectory lost normalisation: {norm}")));
    }
    Ok(state)
}

/// Probability that the logical observable reads flipped for `pattern`.
pub fn coherent_flip_probability(cfg: &SelfCorrectConfig, pattern: [bool; 3]) -> Result<f64> {
    Ok(coherent_state(cfg, pattern)?.probability_of_one(0))
}

/// The classical decoder run in sample mode: syndrome in, correction applied
/// when the sampled bit is 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalPipeline {
    pub ansatz: AnsatzConfig,
    pub params: ParameterSet,
}

impl ClassicalPipeline {
    /// Exact flip probability: the observable ends flipped when the sampled
    /// correction bit differs from the injected flip of data qubit 0.
    pub fn flip_probability(&self, pattern: [bool; 3]) -> Result<f64> {
        let syndrome = BitVec::from_bools(&pattern_syndrome(pattern));
        let q = outcome_distribution(&self.ansatz, &self.params, &syndrome)?;
        Ok(if pattern[0] { q.probs[0] } else { q.probs[1] })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternRow {
    /// Injected errors on data qubits 0..3 as a `0`/`1` string.
    pub pattern: String,
    pub coherent: f64,
    pub classical: f64,
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub rows: Vec<PatternRow>,
    pub max_abs_diff: f64,
}

impl EquivalenceReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "pattern,coherent_prob,classical_prob,abs_diff")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{:e}", r.pattern, r.coherent, r.classical, r.abs_diff)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn all_patterns() -> impl Iterator<Item = [bool; 3]> {
    (0..8u8).map(|k| [k & 1 != 0, k & 2 != 0, k & 4 != 0])
}

fn pattern_string(pattern: [bool; 3]) -> String {
    pattern.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Compares coherent and measure-then-decode flip probabilities for all
/// eight error patterns, from amplitudes rather than samples.
pub fn equivalence_check(cfg: &SelfCorrectConfig, classical: &ClassicalPipeline) -> Result<EquivalenceReport> {
    cfg.validate()?;
    if classical.ansatz != cfg.classical_ansatz() {
        return Err(Error::ConfigMismatch(format!(
            "classical circuit {:?} does not match the coherent layout {:?}",
            classical.ansatz,
            cfg.classical_ansatz()
        )));
    }
    if classical.params != cfg.params {
        return Err(Error::ConfigMismatch("classical and coherent parameters differ".into()));
    }
    let mut rows = Vec::with_capacity(8);
    for pattern in all_patterns() {
        let coherent = coherent_flip_probability(cfg, pattern)?;
        let classical_p = classical.flip_probability(pattern)?;
        rows.push(PatternRow {
            pattern: pattern_string(pattern),
            coherent,
            classical: classical_p,
            abs_diff: (coherent - classical_p).abs(),
        });
    }
    let max_abs_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(EquivalenceReport { rows, max_abs_diff })
}

/// Logical error rate averaged exactly over the error distribution.
pub fn exact_logical_error_rate(cfg: &SelfCorrectConfig) -> Result<f64> {
    let mut total = 0.0;
    for pattern in all_patterns() {
        let weight: f64 = pattern.iter().map(|&e| if e { cfg.p } else { 1.0 - cfg.p }).product();
        total += weight * coherent_flip_probability(cfg, pattern)?;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryResult {
    #[serde(skip)]
    pub flips: Vec<bool>,
    pub shots: usize,
    pub logical_error_rate: f64,
    pub std_error: f64,
    /// How often the injected errors alone flipped the observable.
    pub raw_flip_rate: f64,
    pub raw_std_error: f64,
}

const TRAJECTORY_CHUNK: usize = 1024;

/// Samples `cfg.shots` trajectories: errors from ChaCha20 (seed `cfg.seed`,
/// stream = chunk index), then a Born-rule draw of the final readout.
pub fn run_selfcorrect(cfg: &SelfCorrectConfig) -> Result<TrajectoryResult> {
    cfg.validate()?;
    if cfg.shots == 0 {
        return Err(Error::InvalidArgument("shot count must be at least 1".into()));
    }
    let chunks = cfg.shots.div_ceil(TRAJECTORY_CHUNK);
    let per_chunk: Vec<Vec<(bool, bool)>> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<Vec<(bool, bool)>> {
            let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            let count = TRAJECTORY_CHUNK.min(cfg.shots - c * TRAJECTORY_CHUNK);
            (0..count)
                .map(|_| {
                    let pattern = [(); 3].map(|_| rng.random::<f64>() < cfg.p);
                    let flip_p = coherent_flip_probability(cfg, pattern)?;
                    let flipped = rng.random::<f64>() < flip_p;
                    Ok((flipped, pattern[0]))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let (flips, raw): (Vec<bool>, Vec<bool>) = per_chunk.into_iter().flatten().unzip();
    let n = flips.len() as f64;
    let rate = flips.iter().filter(|&&f| f).count() as f64 / n;
    let raw_rate = raw.iter().filter(|&&f| f).count() as f64 / n;
    Ok(TrajectoryResult {
        shots: flips.len(),
        flips,
        logical_error_rate: rate,
        std_error: (rate * (1.0 - rate) / n).sqrt(),
        raw_flip_rate: raw_rate,
        raw_std_error: (raw_rate * (1.0 - raw_rate) / n).sqrt(),
    })
}
