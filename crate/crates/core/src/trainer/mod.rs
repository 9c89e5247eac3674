//! Mini-batch Adam training of the decoding circuit on cross-entropy, with
//! periodic evaluation and best-checkpoint tracking.
//!
//! Per-shot gradients are computed in parallel and summed in shot-index
//! order, so results are bit-identical for any number of worker threads.

mod adam;

pub use adam::Adam;

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ansatz::{AnsatzConfig, ParameterSet};
use crate::bits::{LogicalLabel, Syndrome};
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::sampler::{Shot, ShotSet};
use crate::simulator::{accumulate_param_gradient, angle_loss_and_gradient, outcome_distribution, PROB_FLOOR};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub init_scale: f64,
    pub eval_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 256,
            learning_rate: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            init_scale: 0.1,
            eval_every: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.eps, self.init_scale];
        if self.epochs == 0 || self.batch_size == 0 || self.eval_every == 0 || positive.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument(
                "epochs, batch size, eval interval, learning rate, eps and init scale must be positive".into(),
            ));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::InvalidArgument("Adam betas must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_ler: f64,
    pub test_ler: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<TraceRecord>,
}

impl TrainingTrace {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,train_ler,test_ler,seconds";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.epoch, r.train_loss, r.train_ler, r.test_ler, r.seconds
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

pub struct TrainOutcome {
    /// Parameters at the evaluation with the lowest test LER (earliest on ties).
    pub best: ParameterSet,
    pub best_epoch: usize,
    pub best_test_ler: f64,
    pub final_params: ParameterSet,
    pub trace: TrainingTrace,
}

/// Entries i.i.d. uniform on `[-scale, scale]`, theta first then phi.
pub fn init_params(config: &AnsatzConfig, scale: f64, seed: u64) -> Result<ParameterSet> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "init scale must be positive, got {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParameterSet::zeros_for(config);
    for v in params.theta.iter_mut().chain(params.phi.iter_mut()) {
        *v = rng.random_range(-scale..=scale);
    }
    Ok(params)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictMode {
    Argmax,
    /// Draw from `q(beta | syndrome)` with a generator seeded by `seed`.
    Sample {
        seed: u64,
    },
}

pub fn predict(
    params: &ParameterSet,
    ansatz: &AnsatzConfig,
    syndrome: &Syndrome,
    mode: PredictMode,
) -> Result<LogicalLabel> {
    let dist = outcome_distribution(ansatz, params, syndrome)?;
    let outcome = match mode {
        PredictMode::Argmax => dist.argmax(),
        PredictMode::Sample { seed } => dist.sample(&mut ChaCha8Rng::seed_from_u64(seed)),
    };
    Ok(LogicalLabel::from_u64(outcome as u64, ansatz.label_len()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub mean_loss: f64,
    pub errors: usize,
    pub shots: usize,
}

impl Evaluation {
    pub fn logical_error_rate(&self) -> f64 {
        self.errors as f64 / self.shots as f64
    }

    /// Binomial standard error of the logical error rate.
    pub fn std_error(&self) -> f64 {
        let p = self.logical_error_rate();
        (p * (1.0 - p) / self.shots as f64).sqrt()
    }
}

/// Mean cross-entropy and argmax error count over `shots`.
pub fn evaluate(params: &ParameterSet, ansatz: &AnsatzConfig, shots: &[Shot]) -> Result<Evaluation> {
    if shots.is_empty() {
        return Err(Error::EmptyData("no shots to evaluate".into()));
    }
    let per_shot: Vec<(f64, bool)> = shots
        .par_iter()
        .with_min_len(64)
        .map(|shot| -> Result<(f64, bool)> {
            let label = shot.label.to_u64() as usize;
            if shot.syndrome.is_zero() {
                // Only entanglers act on |0...0>, which they leave fixed.
                let loss = if label == 0 { 0.0 } else { -PROB_FLOOR.ln() };
                return Ok((loss, label != 0));
            }
            let dist = outcome_distribution(ansatz, params, &shot.syndrome)?;
            let loss = -dist.probs[label].max(PROB_FLOOR).ln();
            Ok((loss, dist.argmax() != label))
        })
        .collect::<Result<_>>()?;
    let mut loss = 0.0;
    let mut errors = 0;
    for (l, wrong) in per_shot {
        loss += l;
        errors += wrong as usize;
    }
    Ok(Evaluation {
        mean_loss: loss / shots.len() as f64,
        errors,
        shots: shots.len(),
    })
}

pub fn logical_error_rate(params: &ParameterSet, ansatz: &AnsatzConfig, shots: &ShotSet) -> Result<f64> {
    Ok(evaluate(params, ansatz, shots.shots())?.logical_error_rate())
}

/// Mean loss and mean gradient over a batch. The gradient sum runs in batch order.
pub fn batch_loss_and_gradient(
    params: &ParameterSet,
    ansatz: &AnsatzConfig,
    batch: &[&Shot],
) -> Result<(f64, ParameterSet)> {
    let mut grad = ParameterSet::zeros_for(ansatz);
    let loss = batch_gradient_into(params, ansatz, batch, &mut grad)?;
    Ok((loss, grad))
}

fn batch_gradient_into(
    params: &ParameterSet,
    ansatz: &AnsatzConfig,
    batch: &[&Shot],
    grad: &mut ParameterSet,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyData("empty batch".into()));
    }
    let per_shot = batch
        .par_iter()
        .with_min_len(8)
        .map(|shot| angle_loss_and_gradient(ansatz, params, &shot.syndrome, shot.label.to_u64()))
        .collect::<Result<Vec<_>>>()?;
    grad.theta.iter_mut().chain(grad.phi.iter_mut()).for_each(|g| *g = 0.0);
    let weight = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    for (shot, g) in batch.iter().zip(&per_shot) {
        loss += g.loss;
        if !shot.syndrome.is_zero() {
            accumulate_param_gradient(grad, &shot.syndrome, g, weight);
        }
    }
    Ok(loss * weight)
}

fn check_data(model: &DetectorErrorModel, ansatz: &AnsatzConfig, set: &ShotSet, name: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::EmptyData(format!("{name} set has no shots")));
    }
    set.check_model(model)?;
    if ansatz.syndrome_len != model.num_detectors() || ansatz.label_len() != model.num_observables() {
        return Err(Error::ShapeMismatch(format!(
            "circuit takes {} syndrome bits and reads {} label bits; model has {} detectors and {} observables",
            ansatz.syndrome_len,
            ansatz.label_len(),
            model.num_detectors(),
            model.num_observables()
        )));
    }
    Ok(())
}

/// Trains from freshly initialised parameters.
pub fn train(
    model: &DetectorErrorModel,
    ansatz: &AnsatzConfig,
    data: &ShotSet,
    test: &ShotSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    let params = init_params(ansatz, cfg.init_scale, cfg.seed)?;
    train_from(model, ansatz, data, test, cfg, params)
}

/// Trains starting from `params`. Every epoch is one shuffled pass over
/// `data`; evaluations happen at epoch 0, every `eval_every` epochs and at
/// the last epoch.
pub fn train_from(
    model: &DetectorErrorModel,
    ansatz: &AnsatzConfig,
    data: &ShotSet,
    test: &ShotSet,
    cfg: &TrainConfig,
    mut params: ParameterSet,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    ansatz.validate()?;
    params.check_shape(ansatz)?;
    check_data(model, ansatz, data, "training")?;
    check_data(model, ansatz, test, "test")?;

    let start = Instant::now();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut adam = Adam::new(params.len(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = ParameterSet::zeros_for(ansatz);
    let mut trace = TrainingTrace::default();

    let record = |epoch: usize, params: &ParameterSet, trace: &mut TrainingTrace| -> Result<f64> {
        let train_eval = evaluate(params, ansatz, data.shots())?;
        let test_eval = evaluate(params, ansatz, test.shots())?;
        let test_ler = test_eval.logical_error_rate();
        trace.records.push(TraceRecord {
            epoch,
            train_loss: train_eval.mean_loss,
            train_ler: train_eval.logical_error_rate(),
            test_ler,
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(test_ler)
    };

    let mut best_test_ler = record(0, &params, &mut trace)?;
    let mut best = params.clone();
    let mut best_epoch = 0;

    let mut batch: Vec<&Shot> = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| &data.shots()[i]));
            batch_gradient_into(&params, ansatz, &batch, &mut grad)?;
            adam.step(&mut params, &grad);
        }
        if epoch % cfg.eval_every == 0 || epoch == cfg.epochs {
            let test_ler = record(epoch, &params, &mut trace)?;
            if test_ler < best_test_ler {
                best_test_ler = test_ler;
                best = params.clone();
                best_epoch = epoch;
            }
        }
    }

    Ok(TrainOutcome {
        best,
        best_epoch,
        best_test_ler,
        final_params: params,
        trace,
    })
}
