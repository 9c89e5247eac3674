//! Reference decoders: exhaustive maximum likelihood and minimum-weight
//! perfect matching.

pub mod graph;
pub mod mld;
pub mod mwpm;

pub use graph::{extract_matching_graph, Edge, MatchingGraph};
pub use mld::{mld_decode, MldDecision, MldTable, MAX_MLD_MECHANISMS};
pub use mwpm::{min_weight_perfect_matching, mwpm_decode, mwpm_logical_error_rate, DecodeStats, MAX_FIRED_DETECTORS};
