//! Minimum-weight perfect matching decoder for one patch.

mod blossom;
mod decode;
mod graph;

pub use blossom::max_weight_matching;
pub use decode::{correction_from_edges, decode_correlated_two_pass, decode_mwpm, decode_with_weights, Correction};
pub use graph::{build_matching_graph, edge_weight, GraphOptions, MatchingEdge, MatchingGraph};
