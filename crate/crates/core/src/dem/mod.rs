//! Detector error models: extraction, text format, ghost decomposition and sampling.

mod decompose;
mod extract;
mod sample;

pub use decompose::{
    ghost_decompose, ghost_decompose_flagged, partition_dem, Component, ComponentRole, DecomposedDem, GhostPair,
    PatchProblem,
};
pub use extract::{extract_dem, extract_dem_unchecked};
pub use sample::{sample_dem, sample_dem_shot, shot_rng, DemSampler, Shot};

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{DemError, ParseError};

/// One circuit fault outcome that contributed to a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FaultSite {
    /// Index of the noise instruction in the circuit.
    pub instruction: u32,
    /// Target (qubit, pair or record) position inside the instruction.
    pub target: u32,
    /// Nonzero Pauli outcome index; `0` for a measurement flip.
    pub outcome: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMechanism {
    pub probability: f64,
    pub detectors: Vec<u32>,
    pub observables: Vec<u32>,
    /// Observable flips split by the patch whose logical sheet they cross,
    /// as sorted `(observable, patch)` pairs. Their XOR over patches equals
    /// `observables`.
    pub attribution: Vec<(u32, u32)>,
    pub provenance: Vec<FaultSite>,
}

impl ErrorMechanism {
    pub fn new(probability: f64, detectors: Vec<u32>, attribution: Vec<(u32, u32)>) -> Self {
        let observables = net_observables(&attribution);
        ErrorMechanism {
            probability,
            detectors,
            observables,
            attribution,
            provenance: Vec::new(),
        }
    }
}

pub(crate) fn net_observables(attribution: &[(u32, u32)]) -> Vec<u32> {
    let mut counts: BTreeMap<u32, bool> = BTreeMap::new();
    for &(o, _) in attribution {
        *counts.entry(o).or_default() ^= true;
    }
    counts.into_iter().filter(|&(_, odd)| odd).map(|(o, _)| o).collect()
}

/// Probability that an odd number of two independent events fire.
pub fn odd_combine(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct DetectorErrorModel {
    pub mechanisms: Vec<ErrorMechanism>,
    pub num_detectors: usize,
    pub num_observables: usize,
    pub detector_patch: Vec<u32>,
    pub detector_time: Vec<u32>,
    pub detector_sector: Vec<u8>,
}

impl DetectorErrorModel {
    /// Empty model carrying the detector metadata of `circuit`.
    pub fn skeleton(circuit: &Circuit) -> Self {
        let info = circuit.detector_info();
        DetectorErrorModel {
            mechanisms: Vec::new(),
            num_detectors: info.len(),
            num_observables: circuit.num_observables(),
            detector_patch: info.iter().map(|d| d.patch).collect(),
            detector_time: info.iter().map(|d| d.time).collect(),
            detector_sector: info.iter().map(|d| d.sector).collect(),
        }
    }

    pub fn num_patches(&self) -> usize {
        self.detector_patch.iter().map(|&p| p as usize + 1).max().unwrap_or(0)
    }

    pub fn max_time(&self) -> u32 {
        self.detector_time.iter().copied().max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), DemError> {
        for m in &self.mechanisms {
            if !(m.probability > 0.0 && m.probability <= 0.5) {
                return Err(DemError::BadProbability(m.probability));
            }
            if let Some(&d) = m.detectors.iter().find(|&&d| d as usize >= self.num_detectors) {
                return Err(DemError::DetectorOutOfRange(d as usize));
            }
        }
        Ok(())
    }

    /// Index of the mechanism with exactly this symptom, if present.
    pub fn find(&self, detectors: &[u32], observables: &[u32]) -> Option<usize> {
        self.mechanisms
            .iter()
            .position(|m| m.detectors == detectors && m.observables == observables)
    }

    /// Parses the text format written by [`DetectorErrorModel::to_text`].
    pub fn from_text(text: &str) -> Result<Self, ParseError> {
        parse_dem(text)
    }

    /// Text form: header lines, then one `error(p) D.. L<k>@<patch>..` line per mechanism.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "detectors {}", self.num_detectors);
        let _ = writeln!(out, "observables {}", self.num_observables);
        for d in 0..self.num_detectors {
            let _ = writeln!(out, "patch D{d} {}", self.detector_patch[d]);
            let _ = writeln!(out, "time D{d} {}", self.detector_time[d]);
            let _ = writeln!(out, "sector D{d} {}", self.detector_sector[d]);
        }
        for m in &self.mechanisms {
            let _ = write!(out, "error({})", m.probability);
            for d in &m.detectors {
                let _ = write!(out, " D{d}");
            }
            for (o, p) in &m.attribution {
                let _ = write!(out, " L{o}@{p}");
            }
            out.push('\n');
        }
        out
    }
}

fn parse_dem(text: &str) -> Result<DetectorErrorModel, ParseError> {
    let mut dem = DetectorErrorModel::default();
    let det_index = |line: usize, tok: &str, n: usize| -> Result<usize, ParseError> {
        let d: usize = tok
            .strip_prefix('D')
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ParseError::new(line, tok, "expected D<index>"))?;
        if d >= n {
            return Err(ParseError::new(line, tok, "detector index out of range"));
        }
        Ok(d)
    };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let Some(&head) = toks.first() else { continue };
        if head.starts_with('#') {
            continue;
        }
        let num = |tok: &str| -> Result<u64, ParseError> {
            tok.parse()
                .map_err(|_| ParseError::new(line, tok, "expected an integer"))
        };
        let arg = |k: usize| -> Result<&str, ParseError> {
            toks.get(k)
                .copied()
                .ok_or_else(|| ParseError::new(line, head, "missing argument"))
        };
        match head {
            "detectors" => {
                dem.num_detectors = num(arg(1)?)? as usize;
                dem.detector_patch = vec![0; dem.num_detectors];
                dem.detector_time = vec![0; dem.num_detectors];
                dem.detector_sector = vec![0; dem.num_detectors];
            }
            "observables" => dem.num_observables = num(arg(1)?)? as usize,
            "patch" | "time" | "sector" => {
                let d = det_index(line, arg(1)?, dem.num_detectors)?;
                let v = num(arg(2)?)?;
                match head {
                    "patch" => dem.detector_patch[d] = v as u32,
                    "time" => dem.detector_time[d] = v as u32,
                    _ => dem.detector_sector[d] = v as u8,
                }
            }
            _ if head.starts_with("error(") && head.ends_with(')') => {
                let p: f64 = head[6..head.len() - 1]
                    .parse()
                    .map_err(|_| ParseError::new(line, head, "expected a probability"))?;
                let mut dets = Vec::new();
                let mut attribution = Vec::new();
                for tok in &toks[1..] {
                    if tok.starts_with('D') {
                        dets.push(det_index(line, tok, dem.num_detectors)? as u32);
                    } else if let Some(rest) = tok.strip_prefix('L') {
                        let (o, patch) = rest.split_once('@').unwrap_or((rest, "0"));
                        let o = num(o)? as u32;
                        if o as usize >= dem.num_observables {
                            return Err(ParseError::new(line, *tok, "observable index out of range"));
                        }
                        attribution.push((o, num(patch)? as u32));
                    } else {
                        return Err(ParseError::new(line, *tok, "unexpected token"));
                    }
                }
                dets.sort_unstable();
                attribution.sort_unstable();
                dem.mechanisms.push(ErrorMechanism::new(p, dets, attribution));
            }
            _ => return Err(ParseError::new(line, head, "unknown DEM line")),
        }
    }
    Ok(dem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odd_combination() {
        assert_eq!(odd_combine(0.1, 0.0), 0.1);
        assert!((odd_combine(0.1, 0.2) - 0.26).abs() < 1e-15);
        assert!((odd_combine(0.5, 0.3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn net_observables_cancel_across_patches() {
        assert_eq!(net_observables(&[(0, 0), (0, 1), (2, 1)]), vec![2]);
    }

    #[test]
    fn text_round_trip() {
        let mut dem = DetectorErrorModel {
            num_detectors: 3,
            num_observables: 2,
            detector_patch: vec![0, 0, 1],
            detector_time: vec![0, 1, 1],
            detector_sector: vec![0, 0, 1],
            mechanisms: Vec::new(),
        };
        dem.mechanisms
            .push(ErrorMechanism::new(0.1 + 0.2, vec![0, 2], vec![(1, 1)]));
        dem.mechanisms
            .push(ErrorMechanism::new(1e-5, vec![1], vec![(0, 0), (0, 1)]));
        let back = DetectorErrorModel::from_text(&dem.to_text()).unwrap();
        assert_eq!(back, dem);
    }

    #[test]
    fn parse_errors_carry_line() {
        let e = DetectorErrorModel::from_text("detectors 2\nobservables 0\nerror(0.1) D5\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.token, "D5");
    }
}
