use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dem::{odd_combine, ComponentRole, DecomposedDem, PatchProblem};
use crate::error::{DecodeError, DemError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphOptions {
    /// Include ghost-singleton boundary edges.
    pub expose_gs: bool,
    /// Leave out components cut by a window boundary.
    pub drop_open_boundary: bool,
}

impl GraphOptions {
    pub fn exposed(expose_gs: bool) -> Self {
        GraphOptions {
            expose_gs,
            drop_open_boundary: false,
        }
    }
}

/// Log-likelihood weight of an edge with flip probability `p`.
pub fn edge_weight(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingEdge {
    /// Local node index of the first endpoint.
    pub a: u32,
    /// Second endpoint; `None` is the boundary.
    pub b: Option<u32>,
    pub probability: f64,
    pub weight: f64,
    /// Contributing components, most probable first.
    pub components: Vec<u32>,
    /// Observable flips of the likeliest contributor class.
    pub observables: Vec<u32>,
    /// Ghost pairs with a g_e part on this edge, most probable first. Empty
    /// unless ghost parts carry at least half of the edge's probability mass.
    pub ghost_e: Vec<u32>,
    /// Ghost pair whose g_s this edge carries, if that part dominates.
    pub ghost_s: Option<u32>,
    pub open_boundary: bool,
}

impl MatchingEdge {
    pub fn is_boundary(&self) -> bool {
        self.b.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingGraph {
    pub patch: u32,
    /// Global detector index of each local node.
    pub detectors: Vec<u32>,
    pub edges: Vec<MatchingEdge>,
    /// Edge ids incident on each local node; the last entry is the boundary.
    pub adjacency: Vec<Vec<u32>>,
    /// Which edge houses each component present in the graph.
    pub component_edge: HashMap<u32, u32>,
    pub component_probability: HashMap<u32, f64>,
    /// Same-mechanism partners (other sectors, same patch) of each component.
    pub partners: HashMap<u32, Vec<u32>>,
    pub options: GraphOptions,
}

impl MatchingGraph {
    pub fn num_nodes(&self) -> usize {
        self.detectors.len()
    }

    pub fn boundary(&self) -> usize {
        self.detectors.len()
    }

    pub fn local_index(&self, detector: u32) -> Option<usize> {
        self.detectors.binary_search(&detector).ok()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    pub fn min_weight(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| e.weight)
            .fold(f64::INFINITY, f64::min)
    }

    /// Global detectors flipped by a set of edges.
    pub fn symptom(&self, edges: &[u32]) -> Vec<u32> {
        let mut lit = vec![false; self.num_nodes()];
        for &e in edges {
            let e = &self.edges[e as usize];
            lit[e.a as usize] ^= true;
            if let Some(b) = e.b {
                lit[b as usize] ^= true;
            }
        }
        lit.iter()
            .enumerate()
            .filter(|(_, &l)| l)
            .map(|(i, _)| self.detectors[i])
            .collect()
    }

    /// Weight-annotated dump in the DEM line style.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("error({}) D{}", e.probability, self.detectors[e.a as usize]));
            if let Some(b) = e.b {
                out.push_str(&format!(" D{}", self.detectors[b as usize]));
            }
            for o in &e.observables {
                out.push_str(&format!(" L{o}"));
            }
            out.push_str(&format!(" # weight={}", e.weight));
            for p in &e.ghost_e {
                out.push_str(&format!(" ghost_e={p}"));
            }
            if let Some(p) = e.ghost_s {
                out.push_str(&format!(" ghost_s={p}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Observable flips of the contributor class with the largest combined
/// probability; ties keep the class of the most probable contributor.
fn likeliest_observables(dec: &DecomposedDem, comps: &[u32]) -> Vec<u32> {
    let mut classes: Vec<(&Vec<u32>, f64)> = Vec::new();
    for &c in comps {
        let comp = &dec.components[c as usize];
        match classes.iter_mut().find(|(o, _)| **o == comp.observables) {
            Some(entry) => entry.1 = odd_combine(entry.1, comp.probability),
            None => classes.push((&comp.observables, comp.probability)),
        }
    }
    let mut best = 0;
    for (i, (_, p)) in classes.iter().enumerate() {
        if *p > classes[best].1 {
            best = i;
        }
    }
    classes[best].0.clone()
}

fn ghost_candidates(dec: &DecomposedDem, comps: &[u32]) -> Vec<u32> {
    let (mut ghost, mut other) = (0.0, 0.0);
    let mut pairs = Vec::new();
    for &c in comps {
        let comp = &dec.components[c as usize];
        match comp.role {
            ComponentRole::GhostE(p) => {
                ghost += comp.probability;
                pairs.push(p);
            }
            _ => other += comp.probability,
        }
    }
    if ghost >= other {
        pairs
    } else {
        Vec::new()
    }
}

/// Builds the graphlike matching problem of one patch.
pub fn build_matching_graph(
    dec: &DecomposedDem,
    problem: &PatchProblem,
    options: GraphOptions,
) -> Result<MatchingGraph, DecodeError> {
    let detectors = problem.detectors.clone();
    let local: HashMap<u32, u32> = detectors
        .iter()
        .enumerate()
        .map(|(i, &d)| (d, i as u32))
        .collect();
    // endpoints -> contributing components
    let mut groups: BTreeMap<(u32, Option<u32>), Vec<u32>> = BTreeMap::new();
    for &c in &problem.components {
        let comp = &dec.components[c as usize];
        if comp.probability > 0.5 || comp.probability.is_nan() {
            return Err(DemError::BadProbability(comp.probability).into());
        }
        if comp.probability <= 0.0 {
            continue;
        }
        if matches!(comp.role, ComponentRole::GhostS(_)) && !options.expose_gs {
            continue;
        }
        if comp.open_boundary && options.drop_open_boundary {
            continue;
        }
        let a = local[&comp.detectors[0]];
        let b = comp.detectors.get(1).map(|d| local[d]);
        groups.entry((a, b)).or_default().push(c);
    }

    let n = detectors.len();
    let mut edges = Vec::with_capacity(groups.len());
    let mut adjacency = vec![Vec::new(); n + 1];
    let mut component_edge = HashMap::new();
    let mut component_probability = HashMap::new();
    let mut partners = HashMap::new();
    for ((a, b), mut comps) in groups {
        comps.sort_by(|&x, &y| {
            let (px, py) = (dec.components[x as usize].probability, dec.components[y as usize].probability);
            py.total_cmp(&px).then(x.cmp(&y))
        });
        let probability = comps
            .iter()
            .fold(0.0, |acc, &c| odd_combine(acc, dec.components[c as usize].probability));
        let top = &dec.components[comps[0] as usize];
        let id = edges.len() as u32;
        for &c in &comps {
            component_edge.insert(c, id);
            component_probability.insert(c, dec.components[c as usize].probability);
            let ps = &dec.components[c as usize].partners;
            if !ps.is_empty() {
                partners.insert(c, ps.clone());
            }
        }
        adjacency[a as usize].push(id);
        adjacency[b.map_or(n, |b| b as usize)].push(id);
        edges.push(MatchingEdge {
            a,
            b,
            probability,
            weight: edge_weight(probability).max(0.0),
            observables: likeliest_observables(dec, &comps),
            ghost_e: ghost_candidates(dec, &comps),
            ghost_s: match top.role {
                ComponentRole::GhostS(p) => Some(p),
                _ => None,
            },
            open_boundary: comps.iter().any(|&c| dec.components[c as usize].open_boundary),
            components: comps,
        });
    }
    Ok(MatchingGraph {
        patch: problem.patch,
        detectors,
        edges,
        adjacency,
        component_edge,
        component_probability,
        partners,
        options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::{ghost_decompose, partition_dem, DetectorErrorModel, ErrorMechanism};

    fn dem() -> DetectorErrorModel {
        DetectorErrorModel {
            num_detectors: 4,
            num_observables: 1,
            detector_patch: vec![0, 0, 1, 1],
            detector_time: vec![0, 1, 0, 1],
            detector_sector: vec![0; 4],
            mechanisms: vec![
                ErrorMechanism::new(0.01, vec![0, 1, 2], vec![(0, 0)]),
                ErrorMechanism::new(0.02, vec![0, 1], vec![]),
                ErrorMechanism::new(0.5, vec![3], vec![]),
                ErrorMechanism::new(0.1, vec![2], vec![]),
            ],
        }
    }

    #[test]
    fn ghost_singletons_follow_flag() {
        let dec = ghost_decompose(&dem()).unwrap();
        let parts = partition_dem(&dec);
        let hidden = build_matching_graph(&dec, &parts[1], GraphOptions::exposed(false)).unwrap();
        assert!(hidden.edges.iter().all(|e| e.ghost_s.is_none()));
        assert!(hidden.edges.iter().all(|e| e.ghost_e.is_empty()));
        assert_eq!(hidden.edges.len(), 2);
        assert!((hidden.edges[0].probability - 0.1).abs() < 1e-15);
        let shown = build_matching_graph(&dec, &parts[1], GraphOptions::exposed(true)).unwrap();
        let e = shown.edges.iter().find(|e| e.a == 0).unwrap();
        assert!(e.is_boundary());
        assert!((e.probability - odd_combine(0.1, 0.01)).abs() < 1e-15);
        // p = 0.5 gives a zero-weight edge
        let half = shown.edges.iter().find(|e| e.a == 1).unwrap();
        assert_eq!(half.weight, 0.0);
    }

    #[test]
    fn parallel_edges_merge_and_keep_dominant_flags() {
        let dec = ghost_decompose(&dem()).unwrap();
        let parts = partition_dem(&dec);
        let g = build_matching_graph(&dec, &parts[0], GraphOptions::exposed(true)).unwrap();
        assert_eq!(g.edges.len(), 1);
        let e = &g.edges[0];
        assert!((e.probability - odd_combine(0.01, 0.02)).abs() < 1e-15);
        assert!((e.weight - edge_weight(e.probability)).abs() < 1e-12);
        // the plain 0.02 contributor outweighs the ghost part
        assert!(e.ghost_e.is_empty());
        assert!(e.observables.is_empty());
        assert_eq!(e.components.len(), 2);
    }

    #[test]
    fn rejects_probability_above_half() {
        let mut d = dem();
        d.mechanisms[3].probability = 0.6;
        let dec = ghost_decompose(&d).unwrap();
        let parts = partition_dem(&dec);
        assert!(build_matching_graph(&dec, &parts[1], GraphOptions::default()).is_err());
    }
}
