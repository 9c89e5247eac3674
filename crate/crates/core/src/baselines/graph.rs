//! Weighted detector graph for matching, with a single boundary node.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::OnceLock;

use crate::dem::{mask_of, DetectorErrorModel};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Lower endpoint.
    pub a: usize,
    /// Higher endpoint; equals the boundary index for half-edges.
    pub b: usize,
    pub probability: f64,
    /// `ln((1 - p) / p)`.
    pub weight: f64,
    /// Observable flips of the most probable contributor.
    pub observables: u64,
}

struct AllPairs {
    dist: Vec<f64>,
    mask: Vec<u64>,
}

/// Detector nodes `0..m` plus the boundary node `m`.
pub struct MatchingGraph {
    num_detectors: usize,
    num_observables: usize,
    edges: Vec<Edge>,
    /// Per node: (neighbour, edge index), sorted by neighbour.
    adjacency: Vec<Vec<(usize, usize)>>,
    paths: OnceLock<AllPairs>,
}

#[derive(Clone, Copy)]
struct Accumulated {
    probability: f64,
    dominant_probability: f64,
    dominant_mask: u64,
}

/// Builds the matching graph of a graph-like (or decomposed) model.
///
/// Parallel contributions merge as independent flips,
/// `p = p1 (1 - p2) + p2 (1 - p1)`; the merged edge keeps the observable mask
/// of its most probable contributor (ties go to the smaller mask).
pub fn extract_matching_graph(model: &DetectorErrorModel) -> Result<MatchingGraph> {
    let boundary = model.num_detectors();
    let mut merged: BTreeMap<(usize, usize), Accumulated> = BTreeMap::new();

    let mut contribute = |dets: &[u32], obs: &[u32], p: f64| {
        let key = match *dets {
            [a] => (a as usize, boundary),
            [a, b] => (a as usize, b as usize),
            _ => return,
        };
        let mask = mask_of(obs);
        merged
            .entry(key)
            .and_modify(|acc| {
                acc.probability = acc.probability * (1.0 - p) + p * (1.0 - acc.probability);
                if p > acc.dominant_probability || (p == acc.dominant_probability && mask < acc.dominant_mask) {
                    acc.dominant_probability = p;
                    acc.dominant_mask = mask;
                }
            })
            .or_insert(Accumulated {
                probability: p,
                dominant_probability: p,
                dominant_mask: mask,
            });
    };

    for (index, m) in model.mechanisms().iter().enumerate() {
        match &m.decomposition {
            Some(components) => {
                for c in components {
                    if c.detectors.len() > 2 {
                        return Err(Error::NotGraphLike {
                            index,
                            count: c.detectors.len(),
                        });
                    }
                    contribute(&c.detectors, &c.observables, m.probability);
                }
            }
            None => {
                if m.detectors.len() > 2 {
                    return Err(Error::NotGraphLike {
                        index,
                        count: m.detectors.len(),
                    });
                }
                contribute(&m.detectors, &m.observables, m.probability);
            }
        }
    }

    let edges: Vec<Edge> = merged
        .into_iter()
        .map(|((a, b), acc)| Edge {
            a,
            b,
            probability: acc.probability,
            weight: ((1.0 - acc.probability) / acc.probability).ln(),
            observables: acc.dominant_mask,
        })
        .collect();
    Ok(MatchingGraph::from_edges(boundary, model.num_observables(), edges))
}

impl MatchingGraph {
    fn from_edges(num_detectors: usize, num_observables: usize, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); num_detectors + 1];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.a].push((e.b, i));
            adjacency[e.b].push((e.a, i));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        MatchingGraph {
            num_detectors,
            num_observables,
            edges,
            adjacency,
            paths: OnceLock::new(),
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.num_detectors
    }

    pub fn num_observables(&self) -> usize {
        self.num_observables
    }

    pub fn boundary(&self) -> usize {
        self.num_detectors
    }

    pub fn num_nodes(&self) -> usize {
        self.num_detectors + 1
    }

    /// Edges sorted by endpoints.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Shortest-path distance; infinite when disconnected.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let n = self.num_nodes();
        self.all_pairs().dist[a * n + b]
    }

    /// XOR of edge observable masks along the shortest path from `a` to `b`.
    /// Among equal-weight paths the lexicographically smallest node sequence wins.
    pub fn path_mask(&self, a: usize, b: usize) -> u64 {
        let n = self.num_nodes();
        self.all_pairs().mask[a * n + b]
    }

    fn all_pairs(&self) -> &AllPairs {
        self.paths.get_or_init(|| {
            let n = self.num_nodes();
            let mut dist = vec![f64::INFINITY; n * n];
            for s in 0..n {
                let row = self.dijkstra(s);
                dist[s * n..(s + 1) * n].copy_from_slice(&row);
            }
            let mut mask = vec![0u64; n * n];
            for s in 0..n {
                for t in s + 1..n {
                    if dist[s * n + t].is_finite() {
                        let m = self.walk_mask(s, t, &dist);
                        mask[s * n + t] = m;
                        mask[t * n + s] = m;
                    }
                }
            }
            AllPairs { dist, mask }
        })
    }

    fn dijkstra(&self, source: usize) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
            }
        }

        let mut dist = vec![f64::INFINITY; self.num_nodes()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry(0.0, source));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, ei) in &self.adjacency[u] {
                let nd = d + self.edges[ei].weight;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
        dist
    }

    /// Greedy walk from `s` that always steps to the smallest-index
    /// neighbour still on some shortest path to `t`.
    fn walk_mask(&self, s: usize, t: usize, dist: &[f64]) -> u64 {
        let n = self.num_nodes();
        let target = |u: usize| dist[u * n + t];
        let tol = |x: f64| 1e-9 * x.abs().max(1.0);
        let mut visited = vec![false; n];
        let mut mask = 0u64;
        let mut u = s;
        visited[s] = true;
        while u != t {
            let remaining = target(u);
            let step = self.adjacency[u].iter().find(|&&(v, ei)| {
                !visited[v] && (self.edges[ei].weight + target(v) - remaining).abs() <= tol(remaining)
            });
            match step {
                Some(&(v, ei)) => {
                    mask ^= self.edges[ei].observables;
                    visited[v] = true;
                    u = v;
                }
                None => break,
            }
        }
        mask
    }
}
