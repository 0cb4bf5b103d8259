//! Independent reference paths: brute-force fault enumeration, forward
//! Pauli-frame simulation, maximum-likelihood decoding and exhaustive
//! failure search.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Instruction, Pauli};
use crate::dem::{odd_combine, shot_rng, DetectorErrorModel, FaultSite};
use crate::error::DecodeError;
use crate::tableau::{annotation_values, simulate_records, InjectedFault};
use crate::window::Window;

const PAULIS: [Option<Pauli>; 4] = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];

/// One concrete fault outcome of a noise channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitFault {
    pub site: FaultSite,
    pub probability: f64,
    pub injected: Vec<InjectedFault>,
}

/// Lists every nontrivial outcome of every noise channel in `circuit`.
pub fn enumerate_faults(circuit: &Circuit) -> Vec<CircuitFault> {
    let mut out = Vec::new();
    let mut records = 0usize;
    for (idx, instr) in circuit.instructions.iter().enumerate() {
        let site = |target: usize, outcome: usize| FaultSite {
            instruction: idx as u32,
            target: target as u32,
            outcome: outcome as u8,
        };
        match instr {
            Instruction::MeasZ { targets, flip } => {
                if let Some(p) = flip {
                    for j in 0..targets.len() {
                        out.push(CircuitFault {
                            site: site(j, 0),
                            probability: *p,
                            injected: vec![InjectedFault::FlipRecord(records + j)],
                        });
                    }
                }
            }
            Instruction::Depol1 { p, targets } => {
                for (j, &q) in targets.iter().enumerate() {
                    for (k, pauli) in PAULIS.iter().enumerate().skip(1) {
                        out.push(CircuitFault {
                            site: site(j, k),
                            probability: p / 3.0,
                            injected: vec![InjectedFault::Pauli {
                                after: idx,
                                qubit: q,
                                pauli: pauli.expect("nonidentity"),
                            }],
                        });
                    }
                }
            }
            Instruction::Depol2 { p, pairs } => {
                for (j, &(a, b)) in pairs.iter().enumerate() {
                    for (ka, pa) in PAULIS.iter().enumerate() {
                        for (kb, pb) in PAULIS.iter().enumerate() {
                            if ka == 0 && kb == 0 {
                                continue;
                            }
                            let mut injected = Vec::new();
                            if let Some(pa) = pa {
                                injected.push(InjectedFault::Pauli {
                                    after: idx,
                                    qubit: a,
                                    pauli: *pa,
                                });
                            }
                            if let Some(pb) = pb {
                                injected.push(InjectedFault::Pauli {
                                    after: idx,
                                    qubit: b,
                                    pauli: *pb,
                                });
                            }
                            out.push(CircuitFault {
                                site: site(j, 4 * ka + kb),
                                probability: p / 15.0,
                                injected,
                            });
                        }
                    }
                }
            }
            _ => {}
        }
        records += instr.measurement_count();
    }
    out
}

/// Detector error model by inserting every fault on its own and re-running a
/// noiseless tableau simulation. Only the `(detectors, observables)` symptom
/// and merged probability are produced; attribution is left empty.
pub fn brute_force_dem(circuit: &Circuit) -> DetectorErrorModel {
    let mut dem = DetectorErrorModel::skeleton(circuit);
    let reference = simulate_records(circuit, &[]);
    let (ref_d, ref_o) = annotation_values(circuit, &reference);
    let mut merged: BTreeMap<(Vec<u32>, Vec<u32>), f64> = BTreeMap::new();
    for fault in enumerate_faults(circuit) {
        if fault.probability <= 0.0 {
            continue;
        }
        let recs = simulate_records(circuit, &fault.injected);
        let (d, o) = annotation_values(circuit, &recs);
        let flipped = |a: &[crate::tableau::SymBit], b: &[crate::tableau::SymBit]| -> Vec<u32> {
            a.iter()
                .zip(b)
                .enumerate()
                .filter(|(_, (x, y))| x.constant != y.constant)
                .map(|(i, _)| i as u32)
                .collect()
        };
        let key = (flipped(&d, &ref_d), flipped(&o, &ref_o));
        if key.0.is_empty() && key.1.is_empty() {
            continue;
        }
        let e = merged.entry(key).or_insert(0.0);
        *e = odd_combine(*e, fault.probability);
    }
    dem.mechanisms = merged
        .into_iter()
        .map(|((detectors, observables), p)| crate::dem::ErrorMechanism {
            probability: p,
            detectors,
            observables,
            attribution: Vec::new(),
            provenance: Vec::new(),
        })
        .collect();
    dem
}

/// Compares symptom sets and probabilities of two models.
pub fn compare_dems(a: &DetectorErrorModel, b: &DetectorErrorModel, rel_tol: f64) -> Result<(), String> {
    let index = |d: &DetectorErrorModel| -> HashMap<(Vec<u32>, Vec<u32>), f64> {
        d.mechanisms
            .iter()
            .map(|m| ((m.detectors.clone(), m.observables.clone()), m.probability))
            .collect()
    };
    let (ia, ib) = (index(a), index(b));
    if ia.len() != a.mechanisms.len() || ib.len() != b.mechanisms.len() {
        return Err("duplicate symptoms in a model".into());
    }
    for (k, pa) in &ia {
        match ib.get(k) {
            None => return Err(format!("symptom {k:?} only in the first model")),
            Some(pb) => {
                let rel = (pa - pb).abs() / pa.abs().max(pb.abs());
                if rel > rel_tol {
                    return Err(format!("symptom {k:?}: probability {pa} vs {pb}"));
                }
            }
        }
    }
    if let Some(k) = ib.keys().find(|k| !ia.contains_key(*k)) {
        return Err(format!("symptom {k:?} only in the second model"));
    }
    Ok(())
}

/// Forward Pauli-frame propagation of a set of fault outcomes.
pub fn frame_propagate(circuit: &Circuit, faults: &[FaultSite]) -> (Vec<bool>, Vec<bool>) {
    let nq = circuit.num_qubits();
    let mut x = vec![false; nq];
    let mut z = vec![false; nq];
    let mut flips: Vec<bool> = Vec::with_capacity(circuit.num_measurements());
    let mut by_instr: HashMap<u32, Vec<FaultSite>> = HashMap::new();
    for f in faults {
        by_instr.entry(f.instruction).or_default().push(*f);
    }
    let apply = |x: &mut [bool], z: &mut [bool], q: usize, p: Option<Pauli>| {
        if let Some(p) = p {
            let (px, pz) = p.bits();
            x[q] ^= px;
            z[q] ^= pz;
        }
    };
    for (idx, instr) in circuit.instructions.iter().enumerate() {
        let here = by_instr.get(&(idx as u32));
        match instr {
            Instruction::ResetZ(qs) | Instruction::ResetX(qs) => {
                for &q in qs {
                    x[q as usize] = false;
                    z[q as usize] = false;
                }
            }
            Instruction::MeasZ { targets, .. } => {
                for (j, &q) in targets.iter().enumerate() {
                    let mut f = x[q as usize];
                    if let Some(h) = here {
                        f ^= h.iter().filter(|s| s.target as usize == j).count() % 2 == 1;
                    }
                    flips.push(f);
                    z[q as usize] = false;
                }
            }
            Instruction::Mpp(products) => {
                for p in products {
                    let mut f = false;
                    for &(pauli, q) in &p.terms {
                        let (px, pz) = pauli.bits();
                        f ^= (px & z[q as usize]) ^ (pz & x[q as usize]);
                    }
                    flips.push(f);
                }
            }
            Instruction::H(qs) => {
                for &q in qs {
                    let q = q as usize;
                    std::mem::swap(&mut x[q], &mut z[q]);
                }
            }
            Instruction::S(qs) => {
                for &q in qs {
                    z[q as usize] ^= x[q as usize];
                }
            }
            Instruction::Cx(pairs) => {
                for &(c, t) in pairs {
                    let (c, t) = (c as usize, t as usize);
                    x[t] ^= x[c];
                    z[c] ^= z[t];
                }
            }
            Instruction::Depol1 { targets, .. } => {
                if let Some(h) = here {
                    for s in h {
                        apply(&mut x, &mut z, targets[s.target as usize] as usize, PAULIS[s.outcome as usize]);
                    }
                }
            }
            Instruction::Depol2 { pairs, .. } => {
                if let Some(h) = here {
                    for s in h {
                        let (a, b) = pairs[s.target as usize];
                        apply(&mut x, &mut z, a as usize, PAULIS[s.outcome as usize / 4]);
                        apply(&mut x, &mut z, b as usize, PAULIS[s.outcome as usize % 4]);
                    }
                }
            }
            _ => {}
        }
    }
    let (dets, obs) = circuit.resolved_annotations();
    let fold = |recs: &Vec<usize>| recs.iter().fold(false, |acc, &r| acc ^ flips[r]);
    (dets.iter().map(fold).collect(), obs.iter().map(fold).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub shots: usize,
    pub faults_sampled: usize,
    pub mismatches: usize,
    /// Fault sites of the first mismatching shot.
    pub first_mismatch: Option<Vec<FaultSite>>,
}

impl CrosscheckReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Samples concrete fault realizations at circuit level and checks that
/// frame propagation and the XOR of the corresponding mechanisms agree.
pub fn frame_sim_crosscheck(
    circuit: &Circuit,
    dem: &DetectorErrorModel,
    seed: u64,
    shots: usize,
) -> CrosscheckReport {
    let faults = enumerate_faults(circuit);
    let mut owner: HashMap<FaultSite, u32> = HashMap::new();
    for (m, mech) in dem.mechanisms.iter().enumerate() {
        for s in &mech.provenance {
            owner.insert(*s, m as u32);
        }
    }
    // group outcomes by channel instance so that at most one outcome fires per channel
    let mut channels: Vec<Vec<&CircuitFault>> = Vec::new();
    let mut last: Option<(u32, u32)> = None;
    for f in &faults {
        let key = (f.site.instruction, f.site.target);
        if last != Some(key) {
            channels.push(Vec::new());
            last = Some(key);
        }
        channels.last_mut().expect("pushed").push(f);
    }
    let mut report = CrosscheckReport {
        shots,
        ..Default::default()
    };
    for shot in 0..shots as u64 {
        let mut rng = shot_rng(seed ^ 0x5eed_f00d, shot);
        let mut sampled = Vec::new();
        for ch in &channels {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            for f in ch {
                acc += f.probability;
                if r < acc {
                    sampled.push(f.site);
                    break;
                }
            }
        }
        report.faults_sampled += sampled.len();
        let (fd, fo) = frame_propagate(circuit, &sampled);
        let mut dd = vec![false; dem.num_detectors];
        let mut od = vec![false; dem.num_observables];
        for s in &sampled {
            if let Some(&m) = owner.get(s) {
                let mech = &dem.mechanisms[m as usize];
                for &d in &mech.detectors {
                    dd[d as usize] ^= true;
                }
                for &o in &mech.observables {
                    od[o as usize] ^= true;
                }
            }
        }
        if fd != dd || fo != od {
            report.mismatches += 1;
            if report.first_mismatch.is_none() {
                report.first_mismatch = Some(sampled);
            }
        }
    }
    report
}

/// Outcome of an exhaustive maximum-likelihood decode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlDecision {
    /// Observable flips of the most probable class.
    pub logical: Vec<bool>,
    /// Relative probability mass of that class (odds products, unnormalized).
    pub mass: f64,
    /// Mass of the best other class, zero when there is none.
    pub runner_up: f64,
    /// The two leading classes carry equal mass; the smaller class was chosen.
    pub tie: bool,
    /// Consistent mechanism subsets enumerated.
    pub explanations: usize,
}

impl MlDecision {
    /// True when the leading class beats the runner-up by at least `factor`.
    pub fn unambiguous(&self, factor: f64) -> bool {
        self.mass >= factor * self.runner_up
    }
}

struct MlSearch<'a> {
    dem: &'a DetectorErrorModel,
    /// Mechanisms grouped by their smallest detector.
    by_first: Vec<Vec<u32>>,
    silent: Vec<u32>,
    odds: Vec<f64>,
    classes: BTreeMap<Vec<bool>, f64>,
    explanations: usize,
}

impl MlSearch<'_> {
    fn flip(&self, parity: &mut [bool], obs: &mut [bool], m: u32) {
        let mech = &self.dem.mechanisms[m as usize];
        for &d in &mech.detectors {
            parity[d as usize] ^= true;
        }
        for &o in &mech.observables {
            obs[o as usize] ^= true;
        }
    }

    fn visit(&mut self, det: usize, parity: &mut Vec<bool>, obs: &mut Vec<bool>, budget: usize, weight: f64) {
        if det == parity.len() {
            self.finish(0, obs, budget, weight);
            return;
        }
        // unresolved detectors ahead need at least one mechanism each pair
        if budget == 0 && parity[det..].iter().any(|&x| x) {
            return;
        }
        let group = std::mem::take(&mut self.by_first[det]);
        let mut chosen = Vec::new();
        self.choose(det, &group, 0, &mut chosen, parity, obs, budget, weight);
        self.by_first[det] = group;
    }

    #[allow(clippy::too_many_arguments)]
    fn choose(
        &mut self,
        det: usize,
        group: &[u32],
        from: usize,
        chosen: &mut Vec<u32>,
        parity: &mut Vec<bool>,
        obs: &mut Vec<bool>,
        budget: usize,
        weight: f64,
    ) {
        if !parity[det] {
            self.visit(det + 1, parity, obs, budget, weight);
        }
        if budget == 0 {
            return;
        }
        for i in from..group.len() {
            let m = group[i];
            self.flip(parity, obs, m);
            chosen.push(m);
            self.choose(det, group, i + 1, chosen, parity, obs, budget - 1, weight * self.odds[m as usize]);
            chosen.pop();
            self.flip(parity, obs, m);
        }
    }

    fn finish(&mut self, from: usize, obs: &mut Vec<bool>, budget: usize, weight: f64) {
        self.explanations += 1;
        *self.classes.entry(obs.clone()).or_insert(0.0) += weight;
        if budget == 0 {
            return;
        }
        for i in from..self.silent.len() {
            let m = self.silent[i];
            for &o in &self.dem.mechanisms[m as usize].observables {
                obs[o as usize] ^= true;
            }
            let w = weight * self.odds[m as usize];
            self.finish(i + 1, obs, budget - 1, w);
            for &o in &self.dem.mechanisms[m as usize].observables {
                obs[o as usize] ^= true;
            }
        }
    }
}

/// Enumerates every mechanism subset of size at most `weight_cap` whose
/// symptom equals `syndrome` and returns the logical class of largest total
/// probability. Detectors are resolved in index order, each mechanism being
/// decided at its smallest detector.
pub fn brute_force_ml_decode(
    dem: &DetectorErrorModel,
    syndrome: &[bool],
    weight_cap: usize,
) -> Result<MlDecision, DecodeError> {
    if syndrome.len() != dem.num_detectors {
        return Err(DecodeError::SyndromeLength {
            expected: dem.num_detectors,
            got: syndrome.len(),
        });
    }
    let mut by_first = vec![Vec::new(); dem.num_detectors];
    let mut silent = Vec::new();
    for (m, mech) in dem.mechanisms.iter().enumerate() {
        if mech.probability <= 0.0 {
            continue;
        }
        match mech.detectors.iter().min() {
            Some(&d) => by_first[d as usize].push(m as u32),
            None if !mech.observables.is_empty() => silent.push(m as u32),
            None => {}
        }
    }
    let odds = dem
        .mechanisms
        .iter()
        .map(|m| m.probability / (1.0 - m.probability))
        .collect();
    let mut search = MlSearch {
        dem,
        by_first,
        silent,
        odds,
        classes: BTreeMap::new(),
        explanations: 0,
    };
    let mut parity = syndrome.to_vec();
    let mut obs = vec![false; dem.num_observables];
    search.visit(0, &mut parity, &mut obs, weight_cap, 1.0);
    if search.classes.is_empty() {
        return Err(DecodeError::NoExplanation(weight_cap));
    }
    // BTreeMap order makes the first maximum the lexicographically smallest class
    let mut ranked: Vec<(&Vec<bool>, f64)> = search.classes.iter().map(|(k, &v)| (k, v)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let (best, mass) = ranked[0];
    let runner_up = ranked.get(1).map_or(0.0, |r| r.1);
    Ok(MlDecision {
        logical: best.clone(),
        mass,
        runner_up,
        tie: ranked.len() > 1 && (mass - runner_up).abs() <= 1e-12 * mass,
        explanations: search.explanations,
    })
}

/// A set of mechanisms the decoder gets wrong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailurePattern {
    pub mechanisms: Vec<u32>,
    pub weight: usize,
    pub symptom: Vec<u32>,
    /// Decoder output and true flips, in the pipeline's observable order.
    pub decision: Vec<bool>,
    pub truth: Vec<bool>,
    /// Positions (in that order) where they differ.
    pub failing: Vec<usize>,
}

impl FailurePattern {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub candidates: usize,
    /// Subsets decoded at each weight, index 0 being weight 1.
    pub tested: Vec<u64>,
    pub witness: Option<FailurePattern>,
}

impl SearchReport {
    pub fn min_weight(&self) -> Option<usize> {
        self.witness.as_ref().map(|w| w.weight)
    }
}

/// Tries every subset of `candidates` with 1..=`w_max` elements, in order of
/// weight and then lexicographically by candidate position, and stops at the
/// first one whose decoded `observables` differ from its true flips. The
/// pipeline maps a full syndrome to flips of `observables`, in that order.
pub fn min_failure_weight_search<F>(
    pipeline: F,
    dem: &DetectorErrorModel,
    observables: &[u32],
    candidates: &[u32],
    w_max: usize,
) -> Result<SearchReport, DecodeError>
where
    F: Fn(&[bool]) -> Result<Vec<bool>, DecodeError>,
{
    let mut report = SearchReport {
        candidates: candidates.len(),
        tested: Vec::new(),
        witness: None,
    };
    let test = |subset: &[u32]| -> Result<Option<FailurePattern>, DecodeError> {
        let mut syn = vec![false; dem.num_detectors];
        let mut flips = vec![false; dem.num_observables];
        for &m in subset {
            let mech = &dem.mechanisms[m as usize];
            for &d in &mech.detectors {
                syn[d as usize] ^= true;
            }
            for &o in &mech.observables {
                flips[o as usize] ^= true;
            }
        }
        let decision = pipeline(&syn)?;
        let truth: Vec<bool> = observables.iter().map(|&o| flips[o as usize]).collect();
        if decision == truth {
            return Ok(None);
        }
        let failing = (0..truth.len()).filter(|&i| decision[i] != truth[i]).collect();
        let mut mechanisms = subset.to_vec();
        mechanisms.sort_unstable();
        Ok(Some(FailurePattern {
            weight: subset.len(),
            mechanisms,
            symptom: (0..syn.len()).filter(|&d| syn[d]).map(|d| d as u32).collect(),
            decision,
            truth,
            failing,
        }))
    };
    for w in 1..=w_max.min(candidates.len()) {
        let mut tested = 0u64;
        let mut idx: Vec<usize> = (0..w).collect();
        loop {
            let subset: Vec<u32> = idx.iter().map(|&i| candidates[i]).collect();
            tested += 1;
            if let Some(found) = test(&subset)? {
                report.tested.push(tested);
                report.witness = Some(found);
                return Ok(report);
            }
            // next combination in lexicographic order
            let n = candidates.len();
            let Some(k) = (0..w).rev().find(|&k| idx[k] < n - w + k) else {
                break;
            };
            idx[k] += 1;
            for j in k + 1..w {
                idx[j] = idx[j - 1] + 1;
            }
        }
        report.tested.push(tested);
    }
    Ok(report)
}

/// Mechanisms with a detector within `radius` rounds of the window's
/// severance, nearest first, keeping one mechanism per distinct pair of
/// (in-window symptom, flip of the window's observable). Mechanisms that are
/// invisible to the window and leave its observable alone are skipped.
pub fn window_candidates(dem: &DetectorErrorModel, window: &Window, radius: u32) -> Vec<u32> {
    let sev = window.severance_round;
    let mut scored: Vec<(u32, u32)> = dem
        .mechanisms
        .iter()
        .enumerate()
        .filter_map(|(m, mech)| {
            let gap = mech.detectors.iter().map(|&d| dem.detector_time[d as usize].abs_diff(sev)).min()?;
            (gap <= radius).then_some((gap, m as u32))
        })
        .collect();
    scored.sort_unstable();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (_, m) in scored {
        let mech = &dem.mechanisms[m as usize];
        let inside: Vec<u32> = mech
            .detectors
            .iter()
            .copied()
            .filter(|d| window.cut.detectors.binary_search(d).is_ok())
            .collect();
        let flips = mech.observables.contains(&window.observable);
        if inside.is_empty() && !flips {
            continue;
        }
        if seen.insert((inside, flips)) {
            out.push(m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply_noise_model, build_memory_circuit, Basis, NoiseParams};
    use crate::dem::{extract_dem, ErrorMechanism};

    #[test]
    fn brute_force_matches_extraction_small_memory() {
        let c = build_memory_circuit(3, 2, Basis::Z).unwrap();
        let c = apply_noise_model(&c, &NoiseParams::uniform(0.01)).unwrap();
        let a = extract_dem(&c).unwrap();
        let b = brute_force_dem(&c);
        compare_dems(&a, &b, 1e-12).unwrap();
    }

    #[test]
    fn brute_force_matches_extraction_tproxy_and_clifford() {
        use crate::circuit::{build_deep_clifford_circuit, build_tproxy_circuit, DeepCliffordParams, TProxyParams};
        let (c, _) = build_tproxy_circuit(&TProxyParams::new(3, 2)).unwrap();
        let c = apply_noise_model(&c, &NoiseParams::uniform(0.003)).unwrap();
        compare_dems(&extract_dem(&c).unwrap(), &brute_force_dem(&c), 1e-12).unwrap();
        let c = build_deep_clifford_circuit(&DeepCliffordParams::new(3, 1, 3, 11)).unwrap();
        let c = apply_noise_model(&c, &NoiseParams::uniform(0.003)).unwrap();
        let dem = extract_dem(&c).unwrap();
        compare_dems(&dem, &brute_force_dem(&c), 1e-12).unwrap();
        assert!(frame_sim_crosscheck(&c, &dem, 1, 300).passed());
    }

    #[test]
    fn crosscheck_passes_and_zero_noise_is_trivial() {
        let c = build_memory_circuit(3, 2, Basis::X).unwrap();
        let n = apply_noise_model(&c, &NoiseParams::uniform(0.02)).unwrap();
        let dem = extract_dem(&n).unwrap();
        let r = frame_sim_crosscheck(&n, &dem, 3, 200);
        assert!(r.passed(), "{r:?}");
        assert!(r.faults_sampled > 0);
        let z = apply_noise_model(&c, &NoiseParams::uniform(0.0)).unwrap();
        let dz = extract_dem(&z).unwrap();
        assert!(dz.mechanisms.is_empty());
        assert!(frame_sim_crosscheck(&z, &dz, 3, 10).passed());
    }
    fn toy() -> DetectorErrorModel {
        // a repetition line D0 - D1 with boundaries and one silent flip
        let dem = DetectorErrorModel {
            num_detectors: 2,
            num_observables: 1,
            detector_patch: vec![0, 0],
            detector_time: vec![0, 0],
            detector_sector: vec![0, 0],
            mechanisms: vec![
                ErrorMechanism::new(0.1, vec![0], vec![(0, 0)]),
                ErrorMechanism::new(0.1, vec![0, 1], vec![]),
                ErrorMechanism::new(0.05, vec![1], vec![]),
                ErrorMechanism::new(0.001, vec![], vec![(0, 0)]),
            ],
        };
        dem.validate().unwrap();
        dem
    }

    #[test]
    fn ml_on_toy_model() {
        let dem = toy();
        let empty = brute_force_ml_decode(&dem, &[false, false], 3).unwrap();
        assert_eq!(empty.logical, vec![false]);
        assert!(empty.unambiguous(10.0));
        // D0 alone: {0} flips (odds 1/9), {1,2} does not (odds 1/9 * 1/19)
        let one = brute_force_ml_decode(&dem, &[true, false], 2).unwrap();
        assert_eq!(one.logical, vec![true]);
        let odds = |p: f64| p / (1.0 - p);
        let flip = odds(0.1) + odds(0.1) * odds(0.05) * odds(0.001);
        let keep = odds(0.1) * odds(0.05) + odds(0.1) * odds(0.001);
        // cap 2 drops the weight-3 term
        assert!((one.mass - odds(0.1)).abs() < 1e-15);
        assert!((one.runner_up - keep).abs() < 1e-15);
        let full = brute_force_ml_decode(&dem, &[true, false], 3).unwrap();
        assert!((full.mass - flip).abs() < 1e-15);
        assert_eq!(
            brute_force_ml_decode(&dem, &[true, true], 0),
            Err(DecodeError::NoExplanation(0))
        );
    }

    #[test]
    fn ml_reports_ties() {
        let dem = DetectorErrorModel {
            num_detectors: 1,
            num_observables: 1,
            detector_patch: vec![0],
            detector_time: vec![0],
            detector_sector: vec![0],
            mechanisms: vec![
                ErrorMechanism::new(0.1, vec![0], vec![(0, 0)]),
                ErrorMechanism::new(0.1, vec![0], vec![]),
            ],
        };
        let r = brute_force_ml_decode(&dem, &[true], 1).unwrap();
        assert!(r.tie);
        assert_eq!(r.logical, vec![false]);
    }

    #[test]
    fn ml_single_hyperedge() {
        use crate::circuit::{build_tproxy_circuit, TProxyParams};
        let (c, _) = build_tproxy_circuit(&TProxyParams::new(3, 1)).unwrap();
        let dem = extract_dem(&apply_noise_model(&c, &NoiseParams::uniform(1e-3)).unwrap()).unwrap();
        let h = dem.mechanisms.iter().position(|m| m.detectors.len() == 3).unwrap();
        let mut syn = vec![false; dem.num_detectors];
        for &d in &dem.mechanisms[h].detectors {
            syn[d as usize] = true;
        }
        let r = brute_force_ml_decode(&dem, &syn, 1).unwrap();
        let mut truth = vec![false; dem.num_observables];
        for &o in &dem.mechanisms[h].observables {
            truth[o as usize] = true;
        }
        assert_eq!(r.explanations, 1);
        assert_eq!(r.logical, truth);
    }

    #[test]
    fn memory_matcher_fails_first_at_weight_two() {
        use crate::matching::{build_matching_graph, decode_mwpm, GraphOptions};
        use crate::dem::{ghost_decompose, partition_dem};
        let c = build_memory_circuit(3, 3, Basis::Z).unwrap();
        let dem = extract_dem(&apply_noise_model(&c, &NoiseParams::uniform(1e-3)).unwrap()).unwrap();
        let dec = ghost_decompose(&dem).unwrap();
        let graph = build_matching_graph(&dec, &partition_dem(&dec)[0], GraphOptions::default()).unwrap();
        let pipeline = |syn: &[bool]| {
            let defects: Vec<u32> = (0..syn.len() as u32).filter(|&d| syn[d as usize]).collect();
            let corr = decode_mwpm(&graph, &defects)?;
            let mut out = vec![false];
            for o in corr.observables {
                out[o as usize] ^= true;
            }
            Ok(out)
        };
        let all: Vec<u32> = (0..dem.mechanisms.len() as u32).collect();
        let r = min_failure_weight_search(pipeline, &dem, &[0], &all, 2).unwrap();
        assert_eq!(r.tested[0], all.len() as u64);
        let w = r.witness.unwrap();
        assert_eq!(w.weight, 2);
        assert_eq!(w.failing, vec![0]);
        let back: FailurePattern = serde_json::from_str(&w.to_json()).unwrap();
        assert_eq!(back, w);
    }
}
