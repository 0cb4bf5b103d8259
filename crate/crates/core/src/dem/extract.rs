//! Fault propagation by backward sensitivity tracking.
//!
//! Walking the circuit in reverse, each qubit carries the set of detectors
//! and per-patch observable slots that an X (resp. Z) error at the current
//! point would flip. Every noise channel outcome is then resolved against the
//! sets at its position, which visits each fault exactly once.

use std::collections::HashMap;

use super::{net_observables, odd_combine, DetectorErrorModel, ErrorMechanism, FaultSite};
use crate::circuit::{Circuit, Instruction, Pauli};
use crate::error::DemError;
use crate::tableau::check_detector_determinism;

/// Symmetric difference of two sorted id lists.
fn xor_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn xor_into(dst: &mut Vec<u32>, src: &[u32]) {
    if src.is_empty() {
        return;
    }
    *dst = xor_sorted(dst, src);
}

struct Accumulator {
    num_detectors: u32,
    num_patches: u32,
    entries: HashMap<(Vec<u32>, Vec<u32>), Entry>,
}

struct Entry {
    p: f64,
    best_p: f64,
    attribution: Vec<(u32, u32)>,
    provenance: Vec<FaultSite>,
}

impl Accumulator {
    fn add(&mut self, ids: &[u32], p: f64, site: FaultSite) {
        if p <= 0.0 || ids.is_empty() {
            return;
        }
        let split = ids.partition_point(|&i| i < self.num_detectors);
        let dets = ids[..split].to_vec();
        let attribution: Vec<(u32, u32)> = ids[split..]
            .iter()
            .map(|&i| {
                let k = i - self.num_detectors;
                (k / self.num_patches, k % self.num_patches)
            })
            .collect();
        let obs = net_observables(&attribution);
        if dets.is_empty() && obs.is_empty() {
            return;
        }
        let e = self.entries.entry((dets, obs)).or_insert(Entry {
            p: 0.0,
            best_p: 0.0,
            attribution: Vec::new(),
            provenance: Vec::new(),
        });
        e.p = odd_combine(e.p, p);
        if p > e.best_p {
            e.best_p = p;
            e.attribution = attribution;
        }
        e.provenance.push(site);
    }
}

/// Extracts the detector error model after checking that every detector and
/// observable is deterministic.
pub fn extract_dem(circuit: &Circuit) -> Result<DetectorErrorModel, DemError> {
    let report = check_detector_determinism(circuit);
    if let Some(&index) = report.bad_detectors.first() {
        return Err(DemError::NondeterministicDetector { index });
    }
    if let Some(&index) = report.bad_observables.first() {
        return Err(DemError::NondeterministicObservable { index });
    }
    Ok(extract_dem_unchecked(circuit))
}

/// Extraction without the noiseless determinism check.
pub fn extract_dem_unchecked(circuit: &Circuit) -> DetectorErrorModel {
    let mut dem = DetectorErrorModel::skeleton(circuit);
    let nd = dem.num_detectors as u32;
    let np = circuit.num_patches().max(1) as u32;
    let patch_of = circuit.qubit_patch();
    let nq = circuit.num_qubits();

    let (dets, obs) = circuit.resolved_annotations();
    let nm = circuit.num_measurements();
    let mut record_dets: Vec<Vec<u32>> = vec![Vec::new(); nm];
    for (d, recs) in dets.iter().enumerate() {
        for &r in recs {
            record_dets[r].push(d as u32);
        }
    }
    let mut record_obs: Vec<Vec<u32>> = vec![Vec::new(); nm];
    for (o, recs) in obs.iter().enumerate() {
        for &r in recs {
            record_obs[r].push(o as u32);
        }
    }
    // ids a record flip maps to when caused by an error on `q`
    let record_ids = |r: usize, q: usize| -> Vec<u32> {
        let mut ids: Vec<u32> = record_dets[r].clone();
        ids.extend(record_obs[r].iter().map(|&o| nd + o * np + patch_of[q]));
        ids.sort_unstable();
        ids
    };

    let mut sx: Vec<Vec<u32>> = vec![Vec::new(); nq];
    let mut sz: Vec<Vec<u32>> = vec![Vec::new(); nq];
    let mut acc = Accumulator {
        num_detectors: nd,
        num_patches: np,
        entries: HashMap::new(),
    };
    let sens = |sx: &[Vec<u32>], sz: &[Vec<u32>], q: usize, p: Pauli| -> Vec<u32> {
        match p {
            Pauli::X => sx[q].clone(),
            Pauli::Z => sz[q].clone(),
            Pauli::Y => xor_sorted(&sx[q], &sz[q]),
        }
    };
    const PAULIS: [Option<Pauli>; 4] = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];

    let mut cursor = nm;
    for (idx, instr) in circuit.instructions.iter().enumerate().rev() {
        let site = |target: usize, outcome: u8| FaultSite {
            instruction: idx as u32,
            target: target as u32,
            outcome,
        };
        match instr {
            Instruction::MeasZ { targets, flip } => {
                cursor -= targets.len();
                for (j, &q) in targets.iter().enumerate().rev() {
                    let q = q as usize;
                    let ids = record_ids(cursor + j, q);
                    if let Some(p) = flip {
                        acc.add(&ids, *p, site(j, 0));
                    }
                    xor_into(&mut sx[q], &ids);
                    sz[q].clear();
                }
            }
            Instruction::Mpp(products) => {
                cursor -= products.len();
                for (j, prod) in products.iter().enumerate().rev() {
                    for &(pauli, q) in &prod.terms {
                        let q = q as usize;
                        let ids = record_ids(cursor + j, q);
                        let (px, pz) = pauli.bits();
                        if pz {
                            xor_into(&mut sx[q], &ids);
                        }
                        if px {
                            xor_into(&mut sz[q], &ids);
                        }
                    }
                }
            }
            Instruction::ResetZ(qs) | Instruction::ResetX(qs) => {
                for &q in qs {
                    sx[q as usize].clear();
                    sz[q as usize].clear();
                }
            }
            Instruction::H(qs) => {
                for &q in qs {
                    let q = q as usize;
                    std::mem::swap(&mut sx[q], &mut sz[q]);
                }
            }
            Instruction::S(qs) => {
                for &q in qs {
                    let q = q as usize;
                    sx[q] = xor_sorted(&sx[q], &sz[q]);
                }
            }
            Instruction::Cx(pairs) => {
                for &(c, t) in pairs.iter().rev() {
                    let (c, t) = (c as usize, t as usize);
                    sx[c] = xor_sorted(&sx[c], &sx[t]);
                    sz[t] = xor_sorted(&sz[t], &sz[c]);
                }
            }
            Instruction::Depol1 { p, targets } => {
                for (j, &q) in targets.iter().enumerate() {
                    for (k, pauli) in PAULIS.iter().enumerate().skip(1) {
                        let ids = sens(&sx, &sz, q as usize, pauli.expect("nonidentity"));
                        acc.add(&ids, p / 3.0, site(j, k as u8));
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
                            let sa = pa.map(|p| sens(&sx, &sz, a as usize, p)).unwrap_or_default();
                            let sb = pb.map(|p| sens(&sx, &sz, b as usize, p)).unwrap_or_default();
                            acc.add(&xor_sorted(&sa, &sb), p / 15.0, site(j, (4 * ka + kb) as u8));
                        }
                    }
                }
            }
            _ => {}
        }
    }

    let mut mechanisms: Vec<ErrorMechanism> = acc
        .entries
        .into_iter()
        .map(|((detectors, observables), e)| {
            let mut provenance = e.provenance;
            provenance.sort_unstable_by_key(|s| (s.instruction, s.target, s.outcome));
            ErrorMechanism {
                probability: e.p,
                detectors,
                observables,
                attribution: e.attribution,
                provenance,
            }
        })
        .collect();
    mechanisms.sort_by(|a, b| {
        (&a.detectors, &a.observables).cmp(&(&b.detectors, &b.observables))
    });
    dem.mechanisms = mechanisms;
    dem
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        apply_noise_model, build_memory_circuit, build_tproxy_circuit, Basis, NoiseParams,
        TProxyParams,
    };

    #[test]
    fn xor_sorted_is_symmetric_difference() {
        assert_eq!(xor_sorted(&[1, 3, 5], &[3, 4]), vec![1, 4, 5]);
        assert_eq!(xor_sorted(&[], &[2]), vec![2]);
        assert!(xor_sorted(&[7], &[7]).is_empty());
    }

    #[test]
    fn interior_measurement_flip_is_timelike_pair() {
        let c = build_memory_circuit(3, 3, Basis::Z).unwrap();
        let noisy = apply_noise_model(&c, &NoiseParams::uniform(1e-3)).unwrap();
        let dem = extract_dem(&noisy).unwrap();
        let info = noisy.detector_info();
        // a readout flip on an ancilla links one stabilizer across consecutive rounds
        let mut found = 0;
        for m in &dem.mechanisms {
            let ancilla_flip = m.provenance.iter().any(|s| {
                s.outcome == 0
                    && match &noisy.instructions[s.instruction as usize] {
                        Instruction::MeasZ { targets, .. } => {
                            noisy.qubits[targets[s.target as usize] as usize].kind
                                != crate::circuit::QubitKind::Data
                        }
                        _ => false,
                    }
            });
            if ancilla_flip {
                assert!(m.observables.is_empty());
                assert!(m.detectors.len() <= 2);
                if m.detectors.len() == 2 {
                    let (a, b) = (&info[m.detectors[0] as usize], &info[m.detectors[1] as usize]);
                    assert_eq!(a.coord, b.coord);
                    assert_eq!(b.time, a.time + 1);
                    found += 1;
                }
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn tproxy_has_three_detector_mechanisms_across_patches() {
        let (c, _) = build_tproxy_circuit(&TProxyParams::new(3, 1)).unwrap();
        let noisy = apply_noise_model(&c, &NoiseParams::uniform(1e-3)).unwrap();
        let dem = extract_dem(&noisy).unwrap();
        let cross = dem
            .mechanisms
            .iter()
            .filter(|m| {
                m.detectors.len() == 3 && {
                    let ps: std::collections::BTreeSet<u32> =
                        m.detectors.iter().map(|&d| dem.detector_patch[d as usize]).collect();
                    ps.len() == 2
                }
            })
            .count();
        assert!(cross > 0);
        dem.validate().unwrap();
    }
}
