use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::DetectorErrorModel;
use crate::error::DemError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ComponentRole {
    /// Whole mechanism lives on one patch.
    Plain,
    /// Part of a two-patch mechanism that is not a 2+1 split; always present,
    /// never triggers messages.
    Sibling,
    /// Part of the ghost edge of pair `.0`.
    GhostE(u32),
    /// The ghost singleton of pair `.0`.
    GhostS(u32),
}

/// One single-patch, single-sector fragment of a mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub patch: u32,
    pub sector: u8,
    /// One or two global detector indices.
    pub detectors: Vec<u32>,
    pub observables: Vec<u32>,
    pub probability: f64,
    pub source: u32,
    pub role: ComponentRole,
    /// Components of the same mechanism on the same patch, in other sectors.
    pub partners: Vec<u32>,
    /// Set when the source mechanism was cut by a window boundary.
    pub open_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostPair {
    pub source: u32,
    pub probability: f64,
    pub ge: Vec<u32>,
    pub gs: u32,
    pub ge_patch: u32,
    pub gs_patch: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedDem {
    pub components: Vec<Component>,
    pub pairs: Vec<GhostPair>,
    /// Mechanisms that flip observables without any detector.
    pub undetectable: Vec<u32>,
    pub num_detectors: usize,
    pub num_observables: usize,
    pub num_patches: usize,
    pub detector_patch: Vec<u32>,
    pub detector_time: Vec<u32>,
    pub detector_sector: Vec<u8>,
}

impl DecomposedDem {
    /// Detector set of a ghost pair's source: XOR of its parts.
    pub fn pair_detectors(&self, pair: usize) -> Vec<u32> {
        let p = &self.pairs[pair];
        let mut out: Vec<u32> = p
            .ge
            .iter()
            .chain(std::iter::once(&p.gs))
            .flat_map(|&c| self.components[c as usize].detectors.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    pub fn pair_observables(&self, pair: usize) -> Vec<u32> {
        let p = &self.pairs[pair];
        let mut acc: BTreeMap<u32, bool> = BTreeMap::new();
        for &c in p.ge.iter().chain(std::iter::once(&p.gs)) {
            for &o in &self.components[c as usize].observables {
                *acc.entry(o).or_default() ^= true;
            }
        }
        acc.into_iter().filter(|&(_, v)| v).map(|(o, _)| o).collect()
    }
}

fn xor_sets(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut acc: BTreeMap<u32, bool> = BTreeMap::new();
    for &x in a.iter().chain(b) {
        *acc.entry(x).or_default() ^= true;
    }
    acc.into_iter().filter(|&(_, v)| v).map(|(o, _)| o).collect()
}

/// Splits every mechanism into per-patch, per-sector components and pairs up
/// 2+1 interpatch mechanisms as ghost edge / ghost singleton.
pub fn ghost_decompose(dem: &DetectorErrorModel) -> Result<DecomposedDem, DemError> {
    ghost_decompose_flagged(dem, &[])
}

/// As [`ghost_decompose`], marking components of mechanisms with `open[i]` set.
pub fn ghost_decompose_flagged(
    dem: &DetectorErrorModel,
    open: &[bool],
) -> Result<DecomposedDem, DemError> {
    let np = dem.num_patches().max(1);
    let group = |m: usize| -> Result<BTreeMap<(u32, u8), Vec<u32>>, DemError> {
        let mut groups: BTreeMap<(u32, u8), Vec<u32>> = BTreeMap::new();
        for &d in &dem.mechanisms[m].detectors {
            let key = (dem.detector_patch[d as usize], dem.detector_sector[d as usize]);
            groups.entry(key).or_default().push(d);
        }
        for (&(patch, _), dets) in &groups {
            if dets.len() > 2 {
                return Err(DemError::TooManyDetectors {
                    mechanism: m,
                    patch,
                    count: dets.len(),
                });
            }
        }
        let patches: std::collections::BTreeSet<u32> = groups.keys().map(|k| k.0).collect();
        if patches.len() > 2 {
            return Err(DemError::TooManyPatches {
                mechanism: m,
                patches: patches.len(),
            });
        }
        Ok(groups)
    };

    // observable flips of single-component mechanisms, used to split flips
    // between the sectors of a multi-component mechanism
    let mut known: HashMap<Vec<u32>, (f64, Vec<u32>)> = HashMap::new();
    let mut grouped = Vec::with_capacity(dem.mechanisms.len());
    for (m, mech) in dem.mechanisms.iter().enumerate() {
        let g = group(m)?;
        if g.len() == 1 {
            let dets = g.values().next().expect("one group");
            let e = known.entry(dets.clone()).or_insert((0.0, Vec::new()));
            if mech.probability > e.0 {
                *e = (mech.probability, mech.observables.clone());
            }
        }
        grouped.push(g);
    }

    let mut out = DecomposedDem {
        components: Vec::new(),
        pairs: Vec::new(),
        undetectable: Vec::new(),
        num_detectors: dem.num_detectors,
        num_observables: dem.num_observables,
        num_patches: np,
        detector_patch: dem.detector_patch.clone(),
        detector_time: dem.detector_time.clone(),
        detector_sector: dem.detector_sector.clone(),
    };

    for (m, (mech, groups)) in dem.mechanisms.iter().zip(grouped).enumerate() {
        if groups.is_empty() {
            out.undetectable.push(m as u32);
            continue;
        }
        let is_open = open.get(m).copied().unwrap_or(false);
        let mut per_patch: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        let base = out.components.len();
        for (k, (&(patch, sector), dets)) in groups.iter().enumerate() {
            per_patch.entry(patch).or_default().push(base + k);
            out.components.push(Component {
                patch,
                sector,
                detectors: dets.clone(),
                observables: Vec::new(),
                probability: mech.probability,
                source: m as u32,
                role: ComponentRole::Plain,
                partners: Vec::new(),
                open_boundary: is_open,
            });
        }
        let count = |p: u32| -> usize {
            per_patch[&p]
                .iter()
                .map(|&c| out.components[c].detectors.len())
                .sum()
        };
        let patches: Vec<u32> = per_patch.keys().copied().collect();
        let mut ge_patch = None;
        if patches.len() == 2 {
            let (a, b) = (patches[0], patches[1]);
            let (na, nb) = (count(a), count(b));
            let split = if na >= 2 && nb == 1 {
                Some((a, b))
            } else if nb >= 2 && na == 1 {
                Some((b, a))
            } else {
                None
            };
            match split {
                Some((e, s)) => {
                    let pair = out.pairs.len() as u32;
                    let ge: Vec<u32> = per_patch[&e].iter().map(|&c| c as u32).collect();
                    let gs = per_patch[&s][0] as u32;
                    for &c in &ge {
                        out.components[c as usize].role = ComponentRole::GhostE(pair);
                    }
                    out.components[gs as usize].role = ComponentRole::GhostS(pair);
                    out.pairs.push(GhostPair {
                        source: m as u32,
                        probability: mech.probability,
                        ge,
                        gs,
                        ge_patch: e,
                        gs_patch: s,
                    });
                    ge_patch = Some(e);
                }
                None => {
                    for c in base..out.components.len() {
                        out.components[c].role = ComponentRole::Sibling;
                    }
                }
            }
        }

        // observable split: when every component has a single-component
        // counterpart and their flips add up, follow them so that parallel
        // edges agree; otherwise use the per-patch attribution
        let all: Vec<usize> = (base..out.components.len()).collect();
        let guesses: Option<Vec<Vec<u32>>> = all
            .iter()
            .map(|&c| known.get(&out.components[c].detectors).map(|k| k.1.clone()))
            .collect();
        if let Some(g) = guesses {
            if g.iter().fold(Vec::new(), |acc, o| xor_sets(&acc, o)) == mech.observables {
                for (&c, o) in all.iter().zip(g) {
                    out.components[c].observables = o;
                }
                set_partners(&mut out.components, &per_patch);
                continue;
            }
        }

        // observable attribution
        let mut by_patch: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &(o, p) in &mech.attribution {
            let target = if per_patch.contains_key(&p) {
                p
            } else {
                ge_patch.unwrap_or(patches[0])
            };
            let e = by_patch.entry(target).or_default();
            *e = xor_sets(e, &[o]);
        }
        for (patch, obs) in by_patch {
            let comps = &per_patch[&patch];
            if comps.len() == 1 {
                out.components[comps[0]].observables = obs;
                continue;
            }
            let guesses: Vec<Option<Vec<u32>>> = comps
                .iter()
                .map(|&c| known.get(&out.components[c].detectors).map(|k| k.1.clone()))
                .collect();
            let missing: Vec<usize> = (0..comps.len()).filter(|&i| guesses[i].is_none()).collect();
            let mut assigned: Vec<Vec<u32>> =
                guesses.iter().map(|g| g.clone().unwrap_or_default()).collect();
            let total = assigned.iter().fold(Vec::new(), |acc, g| xor_sets(&acc, g));
            let rest = xor_sets(&total, &obs);
            if rest.is_empty() {
                // the per-sector guesses already explain the flips
            } else if missing.len() == 1 {
                assigned[missing[0]] = xor_sets(&assigned[missing[0]], &rest);
            } else {
                assigned = vec![Vec::new(); comps.len()];
                assigned[0] = obs.clone();
            }
            for (&c, o) in comps.iter().zip(assigned) {
                out.components[c].observables = o;
            }
        }

        set_partners(&mut out.components, &per_patch);
    }
    Ok(out)
}

fn set_partners(components: &mut [Component], per_patch: &BTreeMap<u32, Vec<usize>>) {
    for comps in per_patch.values() {
        for &c in comps {
            let sector = components[c].sector;
            components[c].partners = comps
                .iter()
                .filter(|&&o| components[o].sector != sector)
                .map(|&o| o as u32)
                .collect();
        }
    }
}

/// Per-patch decoding input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchProblem {
    pub patch: u32,
    /// Global detector indices owned by the patch, ascending.
    pub detectors: Vec<u32>,
    /// Components living on the patch, including ghost parts of both kinds.
    pub components: Vec<u32>,
}

pub fn partition_dem(dec: &DecomposedDem) -> Vec<PatchProblem> {
    let mut out: Vec<PatchProblem> = (0..dec.num_patches as u32)
        .map(|patch| PatchProblem {
            patch,
            detectors: Vec::new(),
            components: Vec::new(),
        })
        .collect();
    for (d, &p) in dec.detector_patch.iter().enumerate() {
        out[p as usize].detectors.push(d as u32);
    }
    for (c, comp) in dec.components.iter().enumerate() {
        out[comp.patch as usize].components.push(c as u32);
    }
    out
}
