//! Exhaustive maximum-likelihood decoding for small models.

use std::collections::HashMap;

use crate::bits::{LogicalLabel, Syndrome};
use crate::dem::DetectorErrorModel;
use crate::error::{Error, Result};
use crate::sampler::ShotSet;

pub const MAX_MLD_MECHANISMS: usize = 24;
const MAX_MLD_OBSERVABLES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct MldDecision {
    /// Label as an observable mask (bit `j` = observable `j`).
    pub label: u64,
    /// Posterior probability of `label` given the syndrome.
    pub posterior: f64,
    /// False when the syndrome has zero probability under the model.
    pub seen: bool,
}

/// Joint probability mass of every reachable (syndrome, label) pair.
pub struct MldTable {
    num_detectors: usize,
    num_observables: usize,
    masses: HashMap<Syndrome, Vec<f64>>,
}

impl MldTable {
    /// Enumerates all `2^E` subsets of firing mechanisms.
    pub fn build(model: &DetectorErrorModel) -> Result<Self> {
        let e = model.mechanisms().len();
        if e > MAX_MLD_MECHANISMS {
            return Err(Error::ModelTooLarge {
                mechanisms: e,
                max: MAX_MLD_MECHANISMS,
            });
        }
        if model.num_observables() > MAX_MLD_OBSERVABLES {
            return Err(Error::InvalidModel(format!(
                "{} observables; exhaustive decoding supports at most {MAX_MLD_OBSERVABLES}",
                model.num_observables()
            )));
        }
        let mut table = MldTable {
            num_detectors: model.num_detectors(),
            num_observables: model.num_observables(),
            masses: HashMap::new(),
        };
        let mut syndrome = Syndrome::zeros(model.num_detectors());
        table.enumerate(model, 0, &mut syndrome, 0, 1.0);
        Ok(table)
    }

    fn enumerate(&mut self, model: &DetectorErrorModel, index: usize, syndrome: &mut Syndrome, label: u64, prob: f64) {
        let Some(m) = model.mechanisms().get(index) else {
            let width = 1usize << self.num_observables;
            match self.masses.get_mut(syndrome) {
                Some(row) => row[label as usize] += prob,
                None => {
                    let mut row = vec![0.0; width];
                    row[label as usize] = prob;
                    self.masses.insert(syndrome.clone(), row);
                }
            }
            return;
        };
        self.enumerate(model, index + 1, syndrome, label, prob * (1.0 - m.probability));
        for &d in &m.detectors {
            syndrome.flip(d as usize);
        }
        self.enumerate(
            model,
            index + 1,
            syndrome,
            label ^ m.observable_mask(),
            prob * m.probability,
        );
        for &d in &m.detectors {
            syndrome.flip(d as usize);
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_observables(&self) -> usize {
        self.num_observables
    }

    /// Posterior-maximizing label; ties go to the lowest label value.
    pub fn decide(&self, syndrome: &Syndrome) -> MldDecision {
        let Some(row) = self.masses.get(syndrome) else {
            return MldDecision {
                label: 0,
                posterior: 0.0,
                seen: false,
            };
        };
        let total: f64 = row.iter().sum();
        let mut best = 0usize;
        for (label, &mass) in row.iter().enumerate() {
            if mass > row[best] {
                best = label;
            }
        }
        MldDecision {
            label: best as u64,
            posterior: row[best] / total,
            seen: true,
        }
    }

    /// Iterates `(syndrome, per-label joint mass)` over reachable syndromes.
    pub fn iter(&self) -> impl Iterator<Item = (&Syndrome, &[f64])> {
        self.masses.iter().map(|(s, row)| (s, row.as_slice()))
    }

    /// Exact probability that `decoder` predicts the wrong label.
    pub fn expected_error<F>(&self, mut decoder: F) -> f64
    where
        F: FnMut(&Syndrome) -> u64,
    {
        let mut keys: Vec<&Syndrome> = self.masses.keys().collect();
        keys.sort_by_key(|s| s.to_01_string());
        let mut err = 0.0;
        for s in keys {
            let predicted = decoder(s) as usize;
            let row = &self.masses[s];
            err += row
                .iter()
                .enumerate()
                .filter(|&(label, _)| label != predicted)
                .map(|(_, &m)| m)
                .sum::<f64>();
        }
        err
    }

    /// Fraction of `shots` whose MLD label differs from the recorded one.
    pub fn logical_error_rate(&self, shots: &ShotSet) -> Result<f64> {
        if shots.is_empty() {
            return Err(Error::EmptyData("no shots to decode".into()));
        }
        let errors = shots
            .shots()
            .iter()
            .filter(|s| self.decide(&s.syndrome).label != s.label.to_u64())
            .count();
        Ok(errors as f64 / shots.len() as f64)
    }
}

/// One-off MLD decode; builds the full table, so prefer [`MldTable`] for many shots.
pub fn mld_decode(model: &DetectorErrorModel, syndrome: &Syndrome) -> Result<(LogicalLabel, MldDecision)> {
    if syndrome.len() != model.num_detectors() {
        return Err(Error::ShapeMismatch(format!(
            "syndrome has {} bits, model has {} detectors",
            syndrome.len(),
            model.num_detectors()
        )));
    }
    let decision = MldTable::build(model)?.decide(syndrome);
    Ok((
        LogicalLabel::from_u64(decision.label, model.num_observables()),
        decision,
    ))
}
