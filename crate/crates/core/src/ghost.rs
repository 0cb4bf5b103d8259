//! Iterative per-patch decoding with ghost-pair discovery and syndrome refinement.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dem::{partition_dem, DecomposedDem};
use crate::error::DecodeError;
use crate::matching::{build_matching_graph, decode_correlated_two_pass, Correction, GraphOptions, MatchingGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CircuitFamily {
    Memory,
    DeepClifford,
    TProxy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassSchedule {
    pub passes: u32,
    /// 1-based passes that show ghost singletons.
    pub expose_gs_on: BTreeSet<u32>,
}

impl Default for PassSchedule {
    fn default() -> Self {
        PassSchedule {
            passes: 4,
            expose_gs_on: BTreeSet::from([1]),
        }
    }
}

impl PassSchedule {
    pub fn new(passes: u32, expose_gs_on: impl IntoIterator<Item = u32>) -> Result<Self, DecodeError> {
        let s = PassSchedule {
            passes,
            expose_gs_on: expose_gs_on.into_iter().collect(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.passes < 2 {
            return Err(DecodeError::BadSchedule(format!("{} passes, need at least 2", self.passes)));
        }
        if self.expose_gs_on.contains(&self.passes) {
            return Err(DecodeError::BadSchedule("final pass exposes ghost singletons".into()));
        }
        if let Some(&p) = self.expose_gs_on.iter().find(|&&p| p == 0 || p > self.passes) {
            return Err(DecodeError::BadSchedule(format!("pass {p} out of range")));
        }
        Ok(())
    }

    pub fn exposes(&self, pass: u32) -> bool {
        self.expose_gs_on.contains(&pass)
    }
}

/// Pass schedule for a code distance, rounds per layer and circuit family.
pub fn select_schedule(d: usize, n_r: usize, family: CircuitFamily) -> PassSchedule {
    match (family, d, n_r) {
        (CircuitFamily::DeepClifford, 11, 1) => PassSchedule {
            passes: 8,
            expose_gs_on: BTreeSet::from([1, 4, 6]),
        },
        (CircuitFamily::DeepClifford, 11, 2 | 3) => PassSchedule {
            passes: 6,
            expose_gs_on: BTreeSet::from([1, 4]),
        },
        _ => PassSchedule::default(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefinementMessage {
    pub target_patch: u32,
    pub detector: u32,
    pub pair: u32,
    pub pass: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub pass: u32,
    pub patch: u32,
    pub exposed: bool,
    pub defects: usize,
    pub weight: f64,
    pub committed: Vec<u32>,
    pub sent: Vec<RefinementMessage>,
    pub received: Vec<RefinementMessage>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GhostOutcome {
    /// Final-pass correction of each patch.
    pub corrections: Vec<Correction>,
    /// Committed-frame flips XOR final-correction flips.
    pub logical: Vec<bool>,
    /// Observable flips of the committed pairs alone.
    pub frame: Vec<bool>,
    /// Pairs committed an odd number of times.
    pub committed: Vec<u32>,
    /// `pass_corrections[pass - 1][patch]`.
    pub pass_corrections: Vec<Vec<Correction>>,
    pub trace: Vec<TraceRecord>,
}

impl GhostOutcome {
    /// Writes the trace as one JSON object per line.
    pub fn write_trace(&self, mut out: impl Write) -> std::io::Result<()> {
        for rec in &self.trace {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[derive(Default)]
pub struct GhostConfig {
    pub schedule: PassSchedule,
    /// Partner reweight value for two-pass matching; `None` picks the default.
    pub epsilon: Option<f64>,
    /// Decode patches on the rayon pool.
    pub parallel: bool,
    pub drop_open_boundary: bool,
}


/// Matching graphs for every patch, with and without ghost singletons.
#[derive(Debug, Clone)]
pub struct GhostDecoder {
    pub dem: DecomposedDem,
    pub hidden: Vec<MatchingGraph>,
    pub exposed: Vec<MatchingGraph>,
    pub config: GhostConfig,
}

impl GhostDecoder {
    pub fn new(dem: DecomposedDem, config: GhostConfig) -> Result<Self, DecodeError> {
        config.schedule.validate()?;
        let problems = partition_dem(&dem);
        let build = |expose_gs: bool| -> Result<Vec<MatchingGraph>, DecodeError> {
            problems
                .iter()
                .map(|p| {
                    build_matching_graph(
                        &dem,
                        p,
                        GraphOptions {
                            expose_gs,
                            drop_open_boundary: config.drop_open_boundary,
                        },
                    )
                })
                .collect()
        };
        let hidden = build(false)?;
        let exposed = build(true)?;
        Ok(GhostDecoder {
            dem,
            hidden,
            exposed,
            config,
        })
    }

    /// Graphs used in 1-based pass `pass`.
    pub fn graphs_for_pass(&self, pass: u32) -> &[MatchingGraph] {
        if self.config.schedule.exposes(pass) {
            &self.exposed
        } else {
            &self.hidden
        }
    }

    pub fn num_patches(&self) -> usize {
        self.hidden.len()
    }

    /// Runs the protocol on a full-length detector syndrome.
    pub fn decode(&self, syndrome: &[bool]) -> Result<GhostOutcome, DecodeError> {
        let dem = &self.dem;
        if syndrome.len() != dem.num_detectors {
            return Err(DecodeError::SyndromeLength {
                expected: dem.num_detectors,
                got: syndrome.len(),
            });
        }
        let np = self.num_patches();
        let schedule = &self.config.schedule;
        let mut working = syndrome.to_vec();
        let mut committed = vec![false; dem.pairs.len()];
        let mut frame = vec![false; dem.num_observables];
        let mut out = GhostOutcome::default();
        let mut inbox: Vec<Vec<RefinementMessage>> = vec![Vec::new(); np];

        for pass in 1..=schedule.passes {
            let exposed = schedule.exposes(pass);
            let graphs = if exposed { &self.exposed } else { &self.hidden };
            let final_pass = pass == schedule.passes;
            let decode_patch = |patch: usize| -> Result<(Correction, Vec<u32>), DecodeError> {
                let g = &graphs[patch];
                let defects: Vec<u32> = g.detectors.iter().copied().filter(|&d| working[d as usize]).collect();
                let corr = decode_correlated_two_pass(g, &defects, self.config.epsilon)?;
                let pairs = if final_pass { Vec::new() } else { discovered_pairs(dem, g, &corr) };
                Ok((corr, pairs))
            };
            let results: Vec<(Correction, Vec<u32>)> = if self.config.parallel {
                (0..np).into_par_iter().map(decode_patch).collect::<Result<_, _>>()?
            } else {
                (0..np).map(decode_patch).collect::<Result<_, _>>()?
            };

            // barrier: apply refinements and deliver messages
            let received = std::mem::replace(&mut inbox, vec![Vec::new(); np]);
            let mut corrections = Vec::with_capacity(np);
            for (patch, (corr, pairs)) in results.into_iter().enumerate() {
                let mut sent = Vec::new();
                for &pair in &pairs {
                    let gp = &dem.pairs[pair as usize];
                    for &c in &gp.ge {
                        for &d in &dem.components[c as usize].detectors {
                            working[d as usize] ^= true;
                        }
                    }
                    for &d in &dem.components[gp.gs as usize].detectors {
                        if dem.detector_patch[d as usize] != gp.gs_patch {
                            return Err(DecodeError::BadMessage(d));
                        }
                        working[d as usize] ^= true;
                        let msg = RefinementMessage {
                            target_patch: gp.gs_patch,
                            detector: d,
                            pair,
                            pass,
                        };
                        sent.push(msg);
                        inbox[gp.gs_patch as usize].push(msg);
                    }
                    for o in dem.pair_observables(pair as usize) {
                        frame[o as usize] ^= true;
                    }
                    committed[pair as usize] ^= true;
                }
                out.trace.push(TraceRecord {
                    pass,
                    patch: patch as u32,
                    exposed,
                    defects: graphs[patch].symptom(&corr.edges).len(),
                    weight: corr.weight,
                    committed: pairs,
                    sent,
                    received: received[patch].clone(),
                });
                corrections.push(corr);
            }
            out.pass_corrections.push(corrections);
        }

        out.corrections = out.pass_corrections.last().cloned().unwrap_or_default();
        let mut logical = frame.clone();
        for c in &out.corrections {
            for &o in &c.observables {
                logical[o as usize] ^= true;
            }
        }
        out.logical = logical;
        out.frame = frame;
        out.committed = committed
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| i as u32)
            .collect();
        Ok(out)
    }
}

impl GhostDecoder {
    /// Checks a decode of `syndrome`: committed pairs plus the final
    /// corrections reproduce every defect, and no final correction uses a
    /// ghost-singleton edge.
    pub fn check_outcome(&self, syndrome: &[bool], out: &GhostOutcome) -> Result<(), DecodeError> {
        let mut lit = syndrome.to_vec();
        for &p in &out.committed {
            for d in self.dem.pair_detectors(p as usize) {
                lit[d as usize] ^= true;
            }
        }
        for (patch, corr) in out.corrections.iter().enumerate() {
            let graph = &self.hidden[patch];
            if let Some(&e) = corr.edges.iter().find(|&&e| graph.edges[e as usize].ghost_s.is_some()) {
                return Err(DecodeError::Invariant(format!("final correction of patch {patch} uses ghost edge {e}")));
            }
            for d in graph.symptom(&corr.edges) {
                lit[d as usize] ^= true;
            }
        }
        match lit.iter().position(|&b| b) {
            Some(d) => Err(DecodeError::Invariant(format!("detector {d} left unexplained"))),
            None => Ok(()),
        }
    }
}

/// Ghost pairs discovered in a correction: for each selected g_e edge, the
/// most probable candidate pair whose every g_e part is selected.
fn discovered_pairs(dem: &DecomposedDem, graph: &MatchingGraph, corr: &Correction) -> Vec<u32> {
    let mut found = BTreeSet::new();
    for &e in &corr.edges {
        let complete = graph.edges[e as usize].ghost_e.iter().find(|&&pair| {
            dem.pairs[pair as usize].ge.iter().all(|c| {
                graph
                    .component_edge
                    .get(c)
                    .is_some_and(|pe| corr.edges.binary_search(pe).is_ok())
            })
        });
        if let Some(&pair) = complete {
            found.insert(pair);
        }
    }
    found.into_iter().collect()
}

/// One-shot convenience wrapper.
pub fn run_ghost_protocol(
    dem: &DecomposedDem,
    syndrome: &[bool],
    schedule: &PassSchedule,
) -> Result<GhostOutcome, DecodeError> {
    let decoder = GhostDecoder::new(
        dem.clone(),
        GhostConfig {
            schedule: schedule.clone(),
            ..GhostConfig::default()
        },
    )?;
    decoder.decode(syndrome)
}
