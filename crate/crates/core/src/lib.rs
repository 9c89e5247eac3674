//! Variational quantum-circuit decoders for quantum error-correcting codes.
//!
//! A decoding circuit takes a syndrome as the gate pattern of its
//! single-qubit rotations and is read out in the computational basis to
//! give the logical correction. This crate trains such circuits by exact
//! statevector simulation with adjoint gradients, benchmarks them against
//! exhaustive maximum-likelihood and minimum-weight perfect matching
//! decoders, and simulates a fully coherent version in which the ancillas
//! control the decoder and the decoder controls the correction.

pub mod ansatz;
pub mod baselines;
pub mod bits;
pub mod cli;
pub mod dem;
pub mod error;
pub mod sampler;
pub mod selfcorrect;
pub mod simulator;
pub mod trainer;

pub use error::{Error, Result};
