use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};

use super::blossom::max_weight_matching;
use super::graph::{edge_weight, MatchingGraph};
use crate::error::DecodeError;

/// Fixed-point scale used when handing path lengths to the blossom solver.
const SCALE: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Correction {
    /// Selected edge ids, ascending, each at most once.
    pub edges: Vec<u32>,
    pub observables: Vec<u32>,
    pub weight: f64,
}

impl Correction {
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Paths {
    dist: Vec<f64>,
    pred: Vec<u32>,
}

/// Single-source shortest paths that never pass through the boundary. Stops
/// once every target is settled.
fn dijkstra(graph: &MatchingGraph, weights: &[f64], source: usize, targets: &[bool], mut remaining: usize) -> Paths {
    let n = graph.num_nodes();
    let boundary = n;
    let mut dist = vec![f64::INFINITY; n + 1];
    let mut pred = vec![u32::MAX; n + 1];
    let mut done = vec![false; n + 1];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if done[u] {
            continue;
        }
        done[u] = true;
        if targets[u] {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        if u == boundary {
            continue;
        }
        for &e in &graph.adjacency[u] {
            let edge = &graph.edges[e as usize];
            let v = if edge.a as usize == u {
                edge.b.map_or(boundary, |b| b as usize)
            } else {
                edge.a as usize
            };
            let nd = d + weights[e as usize];
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = e;
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    Paths { dist, pred }
}

fn walk_back(graph: &MatchingGraph, paths: &Paths, mut node: usize, parity: &mut BTreeMap<u32, bool>) {
    let boundary = graph.num_nodes();
    while paths.pred[node] != u32::MAX {
        let e = paths.pred[node];
        *parity.entry(e).or_default() ^= true;
        let edge = &graph.edges[e as usize];
        let other = if node == boundary {
            edge.a as usize
        } else if edge.a as usize == node {
            edge.b.map_or(boundary, |b| b as usize)
        } else {
            edge.a as usize
        };
        node = other;
    }
}

/// Minimum-weight correction for the lit `defects` (global detector ids).
pub fn decode_mwpm(graph: &MatchingGraph, defects: &[u32]) -> Result<Correction, DecodeError> {
    decode_with_weights(graph, &graph.weights(), defects)
}

/// As [`decode_mwpm`] with per-edge weights overriding the graph's own.
pub fn decode_with_weights(
    graph: &MatchingGraph,
    weights: &[f64],
    defects: &[u32],
) -> Result<Correction, DecodeError> {
    if defects.is_empty() {
        return Ok(Correction::default());
    }
    let n = graph.num_nodes();
    let mut nodes = Vec::with_capacity(defects.len());
    for &d in defects {
        let i = graph.local_index(d).ok_or(DecodeError::IsolatedDetector(d))?;
        if graph.adjacency[i].is_empty() {
            return Err(DecodeError::IsolatedDetector(d));
        }
        nodes.push(i);
    }
    nodes.sort_unstable();
    nodes.dedup();
    let k = nodes.len();
    let mut targets = vec![false; n + 1];
    for &i in &nodes {
        targets[i] = true;
    }
    targets[n] = true;
    let paths: Vec<Paths> = nodes
        .iter()
        .map(|&s| dijkstra(graph, weights, s, &targets, k + 1))
        .collect();

    // defects 0..k, boundary twins k..2k
    let mut finite_max = 0.0f64;
    let mut raw: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let d = paths[i].dist[nodes[j]];
            if d.is_finite() {
                raw.push((i, j, d));
            }
        }
        let d = paths[i].dist[n];
        if d.is_finite() {
            raw.push((i, k + i, d));
        }
    }
    for &(_, _, d) in &raw {
        finite_max = finite_max.max(d);
    }
    let big = (finite_max * SCALE).round() as i64 + 1;
    let mut edges: Vec<(usize, usize, i64)> = raw
        .iter()
        .map(|&(i, j, d)| (i, j, big - (d * SCALE).round() as i64))
        .collect();
    for i in 0..k {
        for j in i + 1..k {
            edges.push((k + i, k + j, big));
        }
    }
    let mate = max_weight_matching(2 * k, &edges, true);
    let mut parity: BTreeMap<u32, bool> = BTreeMap::new();
    for i in 0..k {
        match mate.get(i).copied().flatten() {
            Some(j) if j < k => {
                if i < j {
                    walk_back(graph, &paths[i], nodes[j], &mut parity);
                }
            }
            Some(j) if j == k + i => walk_back(graph, &paths[i], n, &mut parity),
            _ => return Err(DecodeError::Infeasible),
        }
    }
    let selected: Vec<u32> = parity.into_iter().filter(|&(_, v)| v).map(|(e, _)| e).collect();
    Ok(correction_from_edges(graph, weights, selected))
}

pub fn correction_from_edges(graph: &MatchingGraph, weights: &[f64], edges: Vec<u32>) -> Correction {
    let mut obs: BTreeMap<u32, bool> = BTreeMap::new();
    let mut weight = 0.0;
    for &e in &edges {
        weight += weights[e as usize];
        for &o in &graph.edges[e as usize].observables {
            *obs.entry(o).or_default() ^= true;
        }
    }
    Correction {
        edges,
        observables: obs.into_iter().filter(|&(_, v)| v).map(|(o, _)| o).collect(),
        weight,
    }
}

/// Two-pass correlated matching. After a plain pass, each contributor of a
/// selected edge lowers the edges of its other-sector partners to the weight
/// of their conditional probability, never below `epsilon` (default: 0.01
/// times the smallest graph weight), and the patch is decoded again. The
/// second correction is kept only when its [`correlated_cost`] is lower. The
/// returned weight is measured with the original weights.
pub fn decode_correlated_two_pass(
    graph: &MatchingGraph,
    defects: &[u32],
    epsilon: Option<f64>,
) -> Result<Correction, DecodeError> {
    let base = graph.weights();
    let first = decode_with_weights(graph, &base, defects)?;
    let mut weights = base.clone();
    let eps = epsilon.unwrap_or_else(|| {
        let m = graph.min_weight();
        if m.is_finite() {
            0.01 * m
        } else {
            0.0
        }
    });
    let mut changed = false;
    for &e in &first.edges {
        let edge = &graph.edges[e as usize];
        for &c in &edge.components {
            let partners = graph_partners(graph, c);
            if partners.is_empty() {
                continue;
            }
            // weight of the partner given that this edge fired, floored at eps
            let share = (graph.component_probability[&c] / edge.probability).min(1.0);
            let w = edge_weight(share).max(eps);
            for &partner in &partners {
                if let Some(&pe) = graph.component_edge.get(&partner) {
                    if pe != e && weights[pe as usize] > w {
                        weights[pe as usize] = w;
                        changed = true;
                    }
                }
            }
        }
    }
    if !changed {
        return Ok(first);
    }
    let second = decode_with_weights(graph, &weights, defects)?;
    if correlated_cost(graph, &base, &second.edges) < correlated_cost(graph, &base, &first.edges) - 1e-9 {
        Ok(correction_from_edges(graph, &base, second.edges))
    } else {
        Ok(first)
    }
}

/// Cost of a correction when one mechanism may explain several selected
/// edges: base weights, less the saving of each such mechanism over pricing
/// its edges separately. Mechanisms are taken greedily by saving with
/// disjoint edge sets.
pub fn correlated_cost(graph: &MatchingGraph, base: &[f64], edges: &[u32]) -> f64 {
    let total: f64 = edges.iter().map(|&e| base[e as usize]).sum();
    let mut offers: Vec<(f64, Vec<u32>)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for &e in edges {
        for &c in &graph.edges[e as usize].components {
            let partners = graph_partners(graph, c);
            if partners.is_empty() {
                continue;
            }
            let mut group = vec![e];
            let mut members = vec![c];
            let mut complete = true;
            for &p in &partners {
                members.push(p);
                match graph.component_edge.get(&p) {
                    Some(&pe) if edges.binary_search(&pe).is_ok() => group.push(pe),
                    _ => complete = false,
                }
            }
            members.sort_unstable();
            if !complete || !seen.insert(members) {
                continue;
            }
            group.sort_unstable();
            group.dedup();
            let own = edge_weight(graph.component_probability[&c]);
            let saving = group.iter().map(|&g| base[g as usize]).sum::<f64>() - own;
            if saving > 0.0 {
                offers.push((saving, group));
            }
        }
    }
    offers.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let mut used = std::collections::HashSet::new();
    let mut saved = 0.0;
    for (saving, group) in offers {
        if group.iter().all(|g| !used.contains(g)) {
            used.extend(group);
            saved += saving;
        }
    }
    total - saved
}

fn graph_partners(graph: &MatchingGraph, component: u32) -> Vec<u32> {
    graph
        .partners
        .get(&component)
        .cloned()
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::{ghost_decompose, partition_dem, DetectorErrorModel, ErrorMechanism};
    use crate::matching::graph::{build_matching_graph, GraphOptions};
    use proptest::prelude::*;

    fn line_dem(ps: &[f64]) -> DetectorErrorModel {
        // boundary - D0 - D1 - ... - D(n-1) - boundary
        let n = ps.len() - 1;
        let mut mechanisms = vec![ErrorMechanism::new(ps[0], vec![0], vec![(0, 0)])];
        for i in 1..n {
            mechanisms.push(ErrorMechanism::new(ps[i], vec![i as u32 - 1, i as u32], vec![]));
        }
        mechanisms.push(ErrorMechanism::new(ps[n], vec![n as u32 - 1], vec![]));
        DetectorErrorModel {
            num_detectors: n,
            num_observables: 1,
            detector_patch: vec![0; n],
            detector_time: vec![0; n],
            detector_sector: vec![0; n],
            mechanisms,
        }
    }

    fn graph_of(dem: &DetectorErrorModel) -> MatchingGraph {
        let dec = ghost_decompose(dem).unwrap();
        let parts = partition_dem(&dec);
        build_matching_graph(&dec, &parts[0], GraphOptions::exposed(true)).unwrap()
    }

    /// Exhaustive minimum over all edge subsets with the right symptom.
    fn brute(graph: &MatchingGraph, defects: &[u32]) -> Option<f64> {
        let m = graph.edges.len();
        let mut target = defects.to_vec();
        target.sort_unstable();
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << m) {
            let sel: Vec<u32> = (0..m as u32).filter(|&e| mask >> e & 1 == 1).collect();
            if graph.symptom(&sel) == target {
                let w: f64 = sel.iter().map(|&e| graph.edges[e as usize].weight).sum();
                if best.is_none_or(|b| w < b) {
                    best = Some(w);
                }
            }
        }
        best
    }

    #[test]
    fn empty_syndrome() {
        let g = graph_of(&line_dem(&[0.1, 0.1, 0.1]));
        let c = decode_mwpm(&g, &[]).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.weight, 0.0);
    }

    #[test]
    fn single_defect_goes_to_cheaper_boundary() {
        let g = graph_of(&line_dem(&[0.01, 0.1, 0.2]));
        let c = decode_mwpm(&g, &[1]).unwrap();
        assert_eq!(c.edges.len(), 1);
        assert!(g.edges[c.edges[0] as usize].is_boundary());
        assert_eq!(g.symptom(&c.edges), vec![1]);
        let c = decode_mwpm(&g, &[0]).unwrap();
        // through D1 to the likely right boundary beats the left one
        assert_eq!(c.edges.len(), 2);
        assert!(c.observables.is_empty());
    }

    #[test]
    fn pair_joined_by_one_edge() {
        let g = graph_of(&line_dem(&[0.01, 0.1, 0.01]));
        let c = decode_mwpm(&g, &[0, 1]).unwrap();
        assert_eq!(c.edges.len(), 1);
        assert!(!g.edges[c.edges[0] as usize].is_boundary());
    }

    #[test]
    fn isolated_and_infeasible() {
        let mut dem = line_dem(&[0.1, 0.1, 0.1]);
        dem.num_detectors = 3;
        dem.detector_patch.push(0);
        dem.detector_time.push(0);
        dem.detector_sector.push(0);
        let g = graph_of(&dem);
        assert_eq!(decode_mwpm(&g, &[2]), Err(DecodeError::IsolatedDetector(2)));
        // a closed loop without boundary cannot absorb one defect
        let closed = DetectorErrorModel {
            num_detectors: 2,
            num_observables: 0,
            detector_patch: vec![0, 0],
            detector_time: vec![0, 0],
            detector_sector: vec![0, 0],
            mechanisms: vec![ErrorMechanism::new(0.1, vec![0, 1], vec![])],
        };
        let g = graph_of(&closed);
        assert_eq!(decode_mwpm(&g, &[0]), Err(DecodeError::Infeasible));
    }

    #[test]
    fn y_fault_selects_both_partners() {
        // sector 0: D0-D1, sector 1: D2-D3, each with boundaries; a Y fault
        // lights D1 and D3 with one component per sector
        let mut mechanisms = vec![
            ErrorMechanism::new(0.1, vec![0], vec![]),
            ErrorMechanism::new(0.1, vec![0, 1], vec![]),
            ErrorMechanism::new(0.001, vec![1], vec![(0, 0)]),
            ErrorMechanism::new(0.05, vec![2], vec![]),
            ErrorMechanism::new(0.05, vec![2, 3], vec![]),
            ErrorMechanism::new(0.01, vec![3], vec![]),
        ];
        // Y: D1 (sector 0) with D2 (sector 1) as a correlated pair
        mechanisms.push(ErrorMechanism::new(0.004, vec![1, 2], vec![(0, 0)]));
        let dem = DetectorErrorModel {
            num_detectors: 4,
            num_observables: 1,
            detector_patch: vec![0; 4],
            detector_time: vec![0; 4],
            detector_sector: vec![0, 0, 1, 1],
            mechanisms,
        };
        let g = graph_of(&dem);
        let plain = decode_mwpm(&g, &[1, 2]).unwrap();
        let corr = decode_correlated_two_pass(&g, &[1, 2], None).unwrap();
        assert_eq!(g.symptom(&corr.edges), vec![1, 2]);
        // D1 and D2 boundary edges house the Y partner components
        let d1 = g.edges.iter().position(|e| e.a == 1 && e.is_boundary()).unwrap() as u32;
        let d2 = g.edges.iter().position(|e| e.a == 2 && e.is_boundary()).unwrap() as u32;
        assert_eq!(corr.edges, vec![d1, d2]);
        assert_ne!(plain.edges, corr.edges);
        assert!(plain.weight <= corr.weight + 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn optimal_against_exhaustive(
            n in 2usize..7,
            raw in proptest::collection::vec((0usize..7, 0usize..8, 1e-4f64..0.5), 2..13),
            lit in proptest::collection::vec(any::<bool>(), 7),
        ) {
            // index == n encodes the boundary
            let mut mechanisms = Vec::new();
            for (a, b, p) in raw {
                let (a, b) = (a % n, b % (n + 1));
                if a == b { continue; }
                let dets = if b == n { vec![a as u32] } else { let mut v = vec![a as u32, b as u32]; v.sort(); v };
                mechanisms.push(ErrorMechanism::new(p, dets, vec![]));
            }
            prop_assume!(!mechanisms.is_empty());
            let dem = DetectorErrorModel {
                num_detectors: n,
                num_observables: 0,
                detector_patch: vec![0; n],
                detector_time: vec![0; n],
                detector_sector: vec![0; n],
                mechanisms,
            };
            let g = graph_of(&dem);
            prop_assume!(g.edges.len() <= 14);
            let defects: Vec<u32> = (0..n as u32).filter(|&i| lit[i as usize]).collect();
            let expected = brute(&g, &defects);
            match decode_mwpm(&g, &defects) {
                Ok(c) => {
                    prop_assert_eq!(g.symptom(&c.edges), defects.clone());
                    let best = expected.expect("decoder found a solution");
                    prop_assert!((c.weight - best).abs() < 1e-6, "{} vs {}", c.weight, best);
                }
                Err(DecodeError::IsolatedDetector(_)) | Err(DecodeError::Infeasible) => {
                    prop_assert!(expected.is_none());
                }
                Err(e) => prop_assert!(false, "unexpected {e:?}"),
            }
        }
    }
}
