//! Minimum-weight perfect matching over fired detectors.
//!
//! Pairwise costs are shortest-path distances in the matching graph and the
//! matching itself is exact, by dynamic programming over subsets. That caps
//! the number of fired detectors, which is fine at the error rates the
//! decoder is benchmarked at.

use super::graph::MatchingGraph;
use crate::bits::{LogicalLabel, Syndrome};
use crate::error::{Error, Result};
use crate::sampler::ShotSet;

pub const MAX_FIRED_DETECTORS: usize = 16;

/// Exact minimum-weight perfect matching on `k` nodes (`k` even) by subset DP.
///
/// Returns the total weight and the matched pairs, or `None` when every
/// perfect matching uses an infinite-weight pair.
pub fn min_weight_perfect_matching(k: usize, cost: impl Fn(usize, usize) -> f64) -> Option<(f64, Vec<(usize, usize)>)> {
    assert!(k % 2 == 0, "perfect matching needs an even node count");
    assert!(k < usize::BITS as usize);
    if k == 0 {
        return Some((0.0, Vec::new()));
    }
    let full = (1usize << k) - 1;
    let mut dp = vec![f64::INFINITY; full + 1];
    let mut choice = vec![0u8; full + 1];
    dp[0] = 0.0;
    for mask in 1..=full {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let i = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << i);
        let mut best = f64::INFINITY;
        let mut best_j = 0u8;
        let mut others = rest;
        while others != 0 {
            let j = others.trailing_zeros() as usize;
            others &= others - 1;
            let sub = dp[rest & !(1 << j)];
            let candidate = cost(i, j) + sub;
            if candidate < best {
                best = candidate;
                best_j = j as u8;
            }
        }
        dp[mask] = best;
        choice[mask] = best_j;
    }
    if !dp[full].is_finite() {
        return None;
    }
    let mut pairs = Vec::with_capacity(k / 2);
    let mut mask = full;
    while mask != 0 {
        let i = mask.trailing_zeros() as usize;
        let j = choice[mask] as usize;
        pairs.push((i, j));
        mask &= !(1 << i) & !(1 << j);
    }
    Some((dp[full], pairs))
}

impl MatchingGraph {
    /// Observable mask predicted by matching the fired detectors of `syndrome`.
    pub fn decode_mask(&self, syndrome: &Syndrome) -> Result<u64> {
        if syndrome.len() != self.num_detectors() {
            return Err(Error::ShapeMismatch(format!(
                "syndrome has {} bits, graph has {} detectors",
                syndrome.len(),
                self.num_detectors()
            )));
        }
        let mut nodes: Vec<usize> = syndrome.ones().collect();
        if nodes.len() > MAX_FIRED_DETECTORS {
            return Err(Error::TooManyDetections {
                fired: nodes.len(),
                max: MAX_FIRED_DETECTORS,
            });
        }
        if nodes.len() % 2 == 1 {
            nodes.push(self.boundary());
        }
        let (_, pairs) = min_weight_perfect_matching(nodes.len(), |i, j| self.distance(nodes[i], nodes[j]))
            .ok_or_else(|| Error::Disconnected {
                a: nodes[0],
                b: nodes[nodes.len() - 1],
            })?;
        Ok(pairs
            .iter()
            .fold(0u64, |acc, &(i, j)| acc ^ self.path_mask(nodes[i], nodes[j])))
    }
}

pub fn mwpm_decode(graph: &MatchingGraph, syndrome: &Syndrome) -> Result<LogicalLabel> {
    let mask = graph.decode_mask(syndrome)?;
    Ok(LogicalLabel::from_u64(mask, graph.num_observables()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeStats {
    pub shots: usize,
    /// Wrong predictions, including decoder failures.
    pub errors: usize,
    /// Shots the matcher could not decode.
    pub failures: usize,
}

impl DecodeStats {
    pub fn logical_error_rate(&self) -> f64 {
        self.errors as f64 / self.shots as f64
    }
}

/// Decodes every shot; shots beyond the fired-detector cap or with an
/// unmatched pair count as logical errors.
pub fn mwpm_logical_error_rate(graph: &MatchingGraph, shots: &ShotSet) -> Result<DecodeStats> {
    if shots.is_empty() {
        return Err(Error::EmptyData("no shots to decode".into()));
    }
    let mut stats = DecodeStats {
        shots: shots.len(),
        errors: 0,
        failures: 0,
    };
    for shot in shots.shots() {
        match graph.decode_mask(&shot.syndrome) {
            Ok(mask) => {
                if mask != shot.label.to_u64() {
                    stats.errors += 1;
                }
            }
            Err(Error::TooManyDetections { .. } | Error::Disconnected { .. }) => {
                stats.failures += 1;
                stats.errors += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(stats)
}
