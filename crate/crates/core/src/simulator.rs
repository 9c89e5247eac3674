//! Dense statevector simulation of decoding circuits and exact gradients of
//! the cross-entropy loss by a reverse (adjoint) pass.
//!
//! Basis index bit `q` is the computational value of qubit `q`.

use num_complex::Complex64;
use rand::Rng;

use crate::ansatz::{effective_angles, entangler_gate, AnsatzConfig, CircuitPlan, EffectiveAngles, Gate, ParameterSet};
use crate::bits::{LogicalLabel, Syndrome};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 24;

/// Floor applied to `q(label | syndrome)` inside the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Probabilities closer than this count as tied in [`OutcomeDistribution::argmax`].
pub const TIE_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `qubits` qubits.
    pub fn zero_state(qubits: usize) -> Result<Self> {
        if qubits > MAX_QUBITS {
            return Err(Error::QubitCapExceeded {
                qubits,
                max: MAX_QUBITS,
            });
        }
        let mut amps = vec![ZERO; 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if !amps.len().is_power_of_two() {
            return Err(Error::InvalidArgument("amplitude count must be a power of two".into()));
        }
        let qubits = amps.len().trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(Error::QubitCapExceeded {
                qubits,
                max: MAX_QUBITS,
            });
        }
        Ok(StateVector { qubits, amps })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability that measuring `qubit` gives 1.
    pub fn probability_of_one(&self, qubit: usize) -> f64 {
        let bit = 1 << qubit;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.qubits {
            return Err(Error::InvalidArgument(format!(
                "qubit {q} out of range for {} qubits",
                self.qubits
            )));
        }
        Ok(())
    }

    /// Applies a 2x2 matrix `[[m00, m01], [m10, m11]]` to `target` on the
    /// subspace where every bit of `controls` is set.
    fn apply_single(&mut self, target: usize, controls: usize, m: [Complex64; 4]) {
        let bit = 1 << target;
        for i in 0..self.amps.len() {
            if i & bit != 0 || i & controls != controls {
                continue;
            }
            let j = i | bit;
            let a = self.amps[i];
            let b = self.amps[j];
            self.amps[i] = m[0] * a + m[1] * b;
            self.amps[j] = m[2] * a + m[3] * b;
        }
    }

    pub fn apply_rx(&mut self, qubit: usize, angle: f64) {
        self.apply_single(qubit, 0, rx_matrix(angle));
    }

    pub fn apply_ry(&mut self, qubit: usize, angle: f64) {
        self.apply_single(qubit, 0, ry_matrix(angle));
    }

    pub fn apply_x(&mut self, qubit: usize) {
        let bit = 1 << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1 << a) | (1 << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) {
        let c = 1 << control;
        let t = 1 << target;
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
    }

    /// RX on `target` conditioned on `control` being 1.
    pub fn apply_controlled_rx(&mut self, control: usize, target: usize, angle: f64) {
        self.apply_single(target, 1 << control, rx_matrix(angle));
    }

    /// RY on `target` conditioned on `control` being 1.
    pub fn apply_controlled_ry(&mut self, control: usize, target: usize, angle: f64) {
        self.apply_single(target, 1 << control, ry_matrix(angle));
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        match *gate {
            Gate::Rx { qubit, angle } => {
                self.check_qubit(qubit)?;
                check_angle(angle)?;
                self.apply_rx(qubit, angle);
            }
            Gate::Ry { qubit, angle } => {
                self.check_qubit(qubit)?;
                check_angle(angle)?;
                self.apply_ry(qubit, angle);
            }
            Gate::Cz { a, b } => {
                self.check_pair(a, b)?;
                self.apply_cz(a, b);
            }
            Gate::Cnot { control, target } => {
                self.check_pair(control, target)?;
                self.apply_cnot(control, target);
            }
        }
        Ok(())
    }

    fn check_pair(&self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::InvalidArgument(format!("two-qubit gate on repeated qubit {a}")));
        }
        Ok(())
    }

    /// `Im <other| X_q |self>`.
    fn im_inner_x(&self, other: &StateVector, q: usize) -> f64 {
        let bit = 1 << q;
        let mut acc = 0.0;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                acc += (other.amps[i].conj() * self.amps[j] + other.amps[j].conj() * self.amps[i]).im;
            }
        }
        acc
    }

    /// `Im <other| Y_q |self>`, with `Y = [[0, -i], [i, 0]]`.
    fn im_inner_y(&self, other: &StateVector, q: usize) -> f64 {
        let bit = 1 << q;
        let mut acc = 0.0;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                // <l_i|(-i psi_j) + <l_j|(i psi_i)
                let z = other.amps[j].conj() * self.amps[i] - other.amps[i].conj() * self.amps[j];
                acc += z.re;
            }
        }
        acc
    }
}

fn check_angle(angle: f64) -> Result<()> {
    if !angle.is_finite() {
        return Err(Error::InvalidArgument(format!("non-finite rotation angle {angle}")));
    }
    Ok(())
}

fn rx_matrix(angle: f64) -> [Complex64; 4] {
    let (s, c) = (angle / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    let mis = Complex64::new(0.0, -s);
    [c, mis, mis, c]
}

fn ry_matrix(angle: f64) -> [Complex64; 4] {
    let (s, c) = (angle / 2.0).sin_cos();
    [
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ]
}

/// Evolves `|0...0>` through `plan`.
pub fn run(plan: &CircuitPlan) -> Result<StateVector> {
    let mut state = StateVector::zero_state(plan.qubits)?;
    for gate in &plan.gates {
        state.apply(gate)?;
    }
    Ok(state)
}

/// Distribution over readout bit strings; index bit `j` is readout qubit `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Most probable outcome; near-ties (within [`TIE_TOLERANCE`]) go to the
    /// lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] + TIE_TOLERANCE {
                best = i;
            }
        }
        best
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding left `u` above the running total; take the last outcome with mass.
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }
}

pub fn readout_distribution(state: &StateVector, readout: &[usize]) -> Result<OutcomeDistribution> {
    for (i, &q) in readout.iter().enumerate() {
        if q >= state.qubits || readout[..i].contains(&q) {
            return Err(Error::InvalidArgument(format!(
                "readout qubits must be distinct and below {}",
                state.qubits
            )));
        }
    }
    let mut probs = vec![0.0; 1 << readout.len()];
    for (i, a) in state.amps.iter().enumerate() {
        let mut outcome = 0usize;
        for (j, &q) in readout.iter().enumerate() {
            outcome |= (i >> q & 1) << j;
        }
        probs[outcome] += a.norm_sqr();
    }
    Ok(OutcomeDistribution { probs })
}

/// Final decoding-circuit state for one syndrome.
pub fn decoder_state(config: &AnsatzConfig, params: &ParameterSet, syndrome: &Syndrome) -> Result<StateVector> {
    params.check_shape(config)?;
    let angles = effective_angles(params, syndrome)?;
    let mut state = StateVector::zero_state(config.qubits)?;
    forward(config, &angles, &mut state, !syndrome.is_zero());
    Ok(state)
}

/// `q(beta | syndrome)` over readout outcomes.
pub fn outcome_distribution(
    config: &AnsatzConfig,
    params: &ParameterSet,
    syndrome: &Syndrome,
) -> Result<OutcomeDistribution> {
    readout_distribution(&decoder_state(config, params, syndrome)?, &config.readout)
}

/// Loss and gradient with respect to the per-(qubit, block) effective angles.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleGradient {
    pub loss: f64,
    /// `q(label | syndrome)` before flooring.
    pub probability: f64,
    /// d loss / d x-angle, index `q * blocks + b`.
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

/// Full circuit in block order. With `rotations` false only entanglers are
/// applied (the silent-syndrome circuit).
fn forward(config: &AnsatzConfig, angles: &EffectiveAngles, state: &mut StateVector, rotations: bool) {
    for b in 0..config.blocks {
        if rotations {
            for q in 0..config.qubits {
                state.apply_rx(q, angles.x_at(q, b));
            }
            for q in 0..config.qubits {
                state.apply_ry(q, angles.y_at(q, b));
            }
        }
        for q in 0..config.qubits.saturating_sub(1) {
            apply_entangler(state, entangler_gate(config.entangler, q));
        }
    }
}

fn apply_entangler(state: &mut StateVector, gate: Gate) {
    match gate {
        Gate::Cz { a, b } => state.apply_cz(a, b),
        Gate::Cnot { control, target } => state.apply_cnot(control, target),
        _ => unreachable!("entanglers are two-qubit gates"),
    }
}

/// Cross-entropy `-ln max(q(label|syndrome), PROB_FLOOR)` and its exact
/// gradient with respect to the effective angles.
///
/// For a silent syndrome every angle is identically zero and so is the
/// gradient. Otherwise all rotations take part in the reverse pass, including
/// ones whose angle happens to be zero.
pub fn angle_loss_and_gradient(
    config: &AnsatzConfig,
    params: &ParameterSet,
    syndrome: &Syndrome,
    label: u64,
) -> Result<AngleGradient> {
    params.check_shape(config)?;
    if label >> config.readout.len() != 0 {
        return Err(Error::ShapeMismatch(format!(
            "label {label:#b} wider than {} readout qubits",
            config.readout.len()
        )));
    }
    let angles = effective_angles(params, syndrome)?;
    let rows = config.qubits * config.blocks;
    let active = !syndrome.is_zero();

    let mut psi = StateVector::zero_state(config.qubits)?;
    forward(config, &angles, &mut psi, active);

    let (mask, want) = config
        .readout
        .iter()
        .enumerate()
        .fold((0usize, 0usize), |(m, w), (j, &q)| {
            (m | 1 << q, w | ((label as usize >> j) & 1) << q)
        });
    let mut lambda = psi.clone();
    let mut probability = 0.0;
    for (i, a) in lambda.amps.iter_mut().enumerate() {
        if i & mask == want {
            probability += a.norm_sqr();
        } else {
            *a = ZERO;
        }
    }
    let loss = -probability.max(PROB_FLOOR).ln();
    let mut dx = vec![0.0; rows];
    let mut dy = vec![0.0; rows];
    if !active || probability < PROB_FLOOR {
        return Ok(AngleGradient {
            loss,
            probability,
            dx,
            dy,
        });
    }

    // d(-ln P)/dangle = -(1/P) dP/dangle, dP/dangle = Im<lambda|G|psi>.
    let scale = -1.0 / probability;
    for b in (0..config.blocks).rev() {
        for q in (0..config.qubits.saturating_sub(1)).rev() {
            let gate = entangler_gate(config.entangler, q);
            apply_entangler(&mut psi, gate);
            apply_entangler(&mut lambda, gate);
        }
        for q in (0..config.qubits).rev() {
            let row = q * config.blocks + b;
            dy[row] = scale * psi.im_inner_y(&lambda, q);
            let undo = -angles.y_at(q, b);
            psi.apply_ry(q, undo);
            lambda.apply_ry(q, undo);
        }
        for q in (0..config.qubits).rev() {
            let row = q * config.blocks + b;
            dx[row] = scale * psi.im_inner_x(&lambda, q);
            let undo = -angles.x_at(q, b);
            psi.apply_rx(q, undo);
            lambda.apply_rx(q, undo);
        }
    }
    Ok(AngleGradient {
        loss,
        probability,
        dx,
        dy,
    })
}

/// Adds `weight * d loss / d params` for one shot into `grad`, using
/// `d angle[q][b] / d coeff[q][b][i] = syndrome[i]`.
pub fn accumulate_param_gradient(
    grad: &mut ParameterSet,
    syndrome: &Syndrome,
    angle_grad: &AngleGradient,
    weight: f64,
) {
    let m = grad.syndrome_len();
    for (row, (&gx, &gy)) in angle_grad.dx.iter().zip(&angle_grad.dy).enumerate() {
        let base = row * m;
        for i in syndrome.ones() {
            grad.theta[base + i] += weight * gx;
            grad.phi[base + i] += weight * gy;
        }
    }
}

/// Cross-entropy loss of one shot and its gradient in parameter shape.
pub fn loss_and_gradient(
    config: &AnsatzConfig,
    params: &ParameterSet,
    syndrome: &Syndrome,
    label: &LogicalLabel,
) -> Result<(f64, ParameterSet)> {
    if label.len() != config.label_len() {
        return Err(Error::ShapeMismatch(format!(
            "label has {} bits, circuit reads {}",
            label.len(),
            config.label_len()
        )));
    }
    let ag = angle_loss_and_gradient(config, params, syndrome, label.to_u64())?;
    let mut grad = ParameterSet::zeros_for(config);
    accumulate_param_gradient(&mut grad, syndrome, &ag, 1.0);
    Ok((ag.loss, grad))
}
