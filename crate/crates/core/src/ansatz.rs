//! The syndrome-gated decoding circuit.
//!
//! Every block applies an RX layer, an RY layer and a chain of two-qubit
//! entanglers. Qubit `q` in block `b` owns one X and one Y coefficient per
//! syndrome bit, so a circuit has `2 * Q * B * m` parameters. A fired bit `i`
//! contributes a rotation by its coefficient; same-axis rotations on one
//! qubit commute, so the layer collapses to a single rotation by
//! `sum_i theta[q][b][i] * syndrome[i]`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::bits::Syndrome;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entangler {
    CzChain,
    CnotChain,
}

impl FromStr for Entangler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cz-chain" | "cz" => Ok(Entangler::CzChain),
            "cnot-chain" | "cnot" => Ok(Entangler::CnotChain),
            _ => Err(Error::InvalidArgument(format!("unknown entangler `{s}`"))),
        }
    }
}

impl fmt::Display for Entangler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entangler::CzChain => "cz-chain",
            Entangler::CnotChain => "cnot-chain",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnsatzConfig {
    pub qubits: usize,
    pub blocks: usize,
    pub syndrome_len: usize,
    /// Output qubits; label bit `j` is read from `readout[j]`.
    pub readout: Vec<usize>,
    pub entangler: Entangler,
}

impl AnsatzConfig {
    /// Config reading labels of length `label_len` from qubits `0..label_len`.
    pub fn new(qubits: usize, blocks: usize, syndrome_len: usize, label_len: usize) -> Result<Self> {
        let config = AnsatzConfig {
            qubits,
            blocks,
            syndrome_len,
            readout: (0..label_len).collect(),
            entangler: Entangler::CzChain,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.syndrome_len == 0 || self.qubits == 0 {
            return Err(Error::InvalidArgument(
                "qubits, blocks and syndrome length must all be at least 1".into(),
            ));
        }
        if self.readout.is_empty() || self.readout.len() > self.qubits {
            return Err(Error::InvalidArgument(format!(
                "readout of {} qubits does not fit a {}-qubit circuit",
                self.readout.len(),
                self.qubits
            )));
        }
        for (i, &q) in self.readout.iter().enumerate() {
            if q >= self.qubits || self.readout[..i].contains(&q) {
                return Err(Error::InvalidArgument(format!(
                    "readout qubits must be distinct and below {}",
                    self.qubits
                )));
            }
        }
        Ok(())
    }

    pub fn label_len(&self) -> usize {
        self.readout.len()
    }

    pub fn num_params(&self) -> usize {
        2 * self.qubits * self.blocks * self.syndrome_len
    }
}

/// Rotation coefficients `theta[q][b][i]` (X) and `phi[q][b][i]` (Y), stored
/// row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    qubits: usize,
    blocks: usize,
    syndrome_len: usize,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl ParameterSet {
    pub fn zeros(qubits: usize, blocks: usize, syndrome_len: usize) -> Self {
        let n = qubits * blocks * syndrome_len;
        ParameterSet {
            qubits,
            blocks,
            syndrome_len,
            theta: vec![0.0; n],
            phi: vec![0.0; n],
        }
    }

    pub fn zeros_for(config: &AnsatzConfig) -> Self {
        Self::zeros(config.qubits, config.blocks, config.syndrome_len)
    }

    pub fn from_vecs(
        qubits: usize,
        blocks: usize,
        syndrome_len: usize,
        theta: Vec<f64>,
        phi: Vec<f64>,
    ) -> Result<Self> {
        let n = qubits * blocks * syndrome_len;
        if theta.len() != n || phi.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "expected {n} theta and phi values, got {} and {}",
                theta.len(),
                phi.len()
            )));
        }
        if theta.iter().chain(&phi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        Ok(ParameterSet {
            qubits,
            blocks,
            syndrome_len,
            theta,
            phi,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn syndrome_len(&self) -> usize {
        self.syndrome_len
    }

    pub fn len(&self) -> usize {
        self.theta.len() + self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    #[inline]
    pub fn index(&self, q: usize, b: usize, i: usize) -> usize {
        (q * self.blocks + b) * self.syndrome_len + i
    }

    pub fn check_shape(&self, config: &AnsatzConfig) -> Result<()> {
        if (self.qubits, self.blocks, self.syndrome_len) != (config.qubits, config.blocks, config.syndrome_len) {
            return Err(Error::ShapeMismatch(format!(
                "parameters are [{}][{}][{}], circuit wants [{}][{}][{}]",
                self.qubits, self.blocks, self.syndrome_len, config.qubits, config.blocks, config.syndrome_len
            )));
        }
        Ok(())
    }
}

/// Per-(qubit, block) rotation angles after contracting with a syndrome.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveAngles {
    blocks: usize,
    /// X angles, index `q * blocks + b`.
    pub x: Vec<f64>,
    /// Y angles, same layout.
    pub y: Vec<f64>,
}

impl EffectiveAngles {
    pub fn x_at(&self, q: usize, b: usize) -> f64 {
        self.x[q * self.blocks + b]
    }

    pub fn y_at(&self, q: usize, b: usize) -> f64 {
        self.y[q * self.blocks + b]
    }
}

pub fn effective_angles(params: &ParameterSet, syndrome: &Syndrome) -> Result<EffectiveAngles> {
    if syndrome.len() != params.syndrome_len {
        return Err(Error::ShapeMismatch(format!(
            "syndrome has {} bits, parameters expect {}",
            syndrome.len(),
            params.syndrome_len
        )));
    }
    let rows = params.qubits * params.blocks;
    let mut x = vec![0.0; rows];
    let mut y = vec![0.0; rows];
    for i in syndrome.ones() {
        for row in 0..rows {
            let k = row * params.syndrome_len + i;
            x[row] += params.theta[k];
            y[row] += params.phi[k];
        }
    }
    Ok(EffectiveAngles {
        blocks: params.blocks,
        x,
        y,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn is_rotation(&self) -> bool {
        matches!(self, Gate::Rx { .. } | Gate::Ry { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitPlan {
    pub qubits: usize,
    pub gates: Vec<Gate>,
}

impl CircuitPlan {
    pub fn rotation_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_rotation()).count()
    }
}

pub(crate) fn entangler_gate(entangler: Entangler, q: usize) -> Gate {
    match entangler {
        Entangler::CzChain => Gate::Cz { a: q, b: q + 1 },
        Entangler::CnotChain => Gate::Cnot {
            control: q,
            target: q + 1,
        },
    }
}

/// Gate list for one syndrome. Rotations whose angle is exactly zero are
/// left out, so a silent syndrome yields only entanglers.
pub fn build_plan(config: &AnsatzConfig, params: &ParameterSet, syndrome: &Syndrome) -> Result<CircuitPlan> {
    config.validate()?;
    params.check_shape(config)?;
    let angles = effective_angles(params, syndrome)?;
    let q_count = config.qubits;
    let mut gates = Vec::with_capacity(config.blocks * (3 * q_count));
    for b in 0..config.blocks {
        for q in 0..q_count {
            let angle = angles.x_at(q, b);
            if angle != 0.0 {
                gates.push(Gate::Rx { qubit: q, angle });
            }
        }
        for q in 0..q_count {
            let angle = angles.y_at(q, b);
            if angle != 0.0 {
                gates.push(Gate::Ry { qubit: q, angle });
            }
        }
        for q in 0..q_count.saturating_sub(1) {
            gates.push(entangler_gate(config.entangler, q));
        }
    }
    Ok(CircuitPlan { qubits: q_count, gates })
}

/// Trained circuit plus its shape, as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: AnsatzConfig,
    pub params: ParameterSet,
}

impl Checkpoint {
    /// Header line, then every theta then every phi value, one per line,
    /// row-major `[q][b][i]`, in round-trip exact scientific notation.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let c = &self.config;
        let readout: Vec<String> = c.readout.iter().map(|q| q.to_string()).collect();
        writeln!(
            w,
            "Q {} B {} m {} entangler {} readout {}",
            c.qubits,
            c.blocks,
            c.syndrome_len,
            c.entangler,
            readout.join(",")
        )?;
        for v in self.params.theta.iter().chain(&self.params.phi) {
            writeln!(w, "{v:.17e}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Checkpoint> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::Format("empty checkpoint".into()))??;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad = || Error::Format(format!("bad checkpoint header `{header}`"));
        let (qubits, blocks, syndrome_len, entangler, readout) = match fields.as_slice() {
            ["Q", q, "B", b, "m", m, "entangler", e, "readout", r] => (
                q.parse::<usize>().map_err(|_| bad())?,
                b.parse::<usize>().map_err(|_| bad())?,
                m.parse::<usize>().map_err(|_| bad())?,
                e.parse::<Entangler>().map_err(|_| bad())?,
                r.split(',')
                    .map(|x| x.parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => return Err(bad()),
        };
        let config = AnsatzConfig {
            qubits,
            blocks,
            syndrome_len,
            readout,
            entangler,
        };
        config.validate()?;
        let mut values = Vec::with_capacity(config.num_params());
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            values.push(
                line.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad parameter value `{line}`")))?,
            );
        }
        if values.len() != config.num_params() {
            return Err(Error::Format(format!(
                "expected {} parameter values, found {}",
                config.num_params(),
                values.len()
            )));
        }
        let phi = values.split_off(config.num_params() / 2);
        let params = ParameterSet::from_vecs(qubits, blocks, syndrome_len, values, phi)?;
        Ok(Checkpoint { config, params })
    }
}
