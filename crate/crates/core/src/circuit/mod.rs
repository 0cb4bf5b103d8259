//! Stabilizer-circuit representation and the benchmark circuit builders.
//!
//! Qubit coordinates are stored doubled so that the half-integer lattice of
//! the rotated surface code maps onto integers: data qubits sit at odd
//! doubled coordinates and ancillas at even ones.

mod builder;
mod families;
pub mod layout;
mod noise;
mod text;

pub use builder::{CircuitBuilder, CnotOrientation, PatchId};
pub use families::{
    build_deep_clifford_circuit, build_memory_circuit, build_tproxy_circuit, DeepCliffordParams,
    TProxyParams, TProxySchedule, TGateInfo,
};
pub use noise::{apply_noise_model, NoiseParams};
pub use text::{parse_circuit, serialize_circuit};

use crate::error::CircuitError;
use serde::{Deserialize, Serialize};

pub type QubitId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitKind {
    Data,
    AncillaX,
    AncillaZ,
}

impl QubitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QubitKind::Data => "data",
            QubitKind::AncillaX => "ancilla-x",
            QubitKind::AncillaZ => "ancilla-z",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        match s {
            "data" => Some(QubitKind::Data),
            "ancilla-x" => Some(QubitKind::AncillaX),
            "ancilla-z" => Some(QubitKind::AncillaZ),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitDecl {
    pub id: QubitId,
    /// Doubled lattice coordinate.
    pub coord: (i32, i32),
    pub patch: u32,
    pub kind: QubitKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// (x, z) symplectic bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Option<Pauli> {
        match (x, z) {
            (true, false) => Some(Pauli::X),
            (true, true) => Some(Pauli::Y),
            (false, true) => Some(Pauli::Z),
            (false, false) => None,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A Pauli product measured by one MPP target; `negated` flips the reported outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PauliProduct {
    pub negated: bool,
    pub terms: Vec<(Pauli, QubitId)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Instruction {
    ResetZ(Vec<QubitId>),
    ResetX(Vec<QubitId>),
    /// Z-basis measurement; `flip` is the classical readout-flip probability.
    MeasZ {
        targets: Vec<QubitId>,
        flip: Option<f64>,
    },
    Mpp(Vec<PauliProduct>),
    H(Vec<QubitId>),
    S(Vec<QubitId>),
    X(Vec<QubitId>),
    Y(Vec<QubitId>),
    Z(Vec<QubitId>),
    Cx(Vec<(QubitId, QubitId)>),
    Tick,
    Depol1 {
        p: f64,
        targets: Vec<QubitId>,
    },
    Depol2 {
        p: f64,
        pairs: Vec<(QubitId, QubitId)>,
    },
    Detector(DetectorAnnotation),
    Observable {
        index: u32,
        recs: Vec<i64>,
    },
}

impl Instruction {
    pub fn measurement_count(&self) -> usize {
        match self {
            Instruction::MeasZ { targets, .. } => targets.len(),
            Instruction::Mpp(products) => products.len(),
            _ => 0,
        }
    }

    pub fn is_noise(&self) -> bool {
        matches!(
            self,
            Instruction::Depol1 { .. }
                | Instruction::Depol2 { .. }
                | Instruction::MeasZ { flip: Some(_), .. }
        )
    }

    /// Qubits acted on by a gate-like instruction (not noise or annotations).
    pub fn gate_qubits(&self) -> Vec<QubitId> {
        match self {
            Instruction::ResetZ(t)
            | Instruction::ResetX(t)
            | Instruction::H(t)
            | Instruction::S(t)
            | Instruction::X(t)
            | Instruction::Y(t)
            | Instruction::Z(t) => t.clone(),
            Instruction::MeasZ { targets, .. } => targets.clone(),
            Instruction::Mpp(products) => products
                .iter()
                .flat_map(|p| p.terms.iter().map(|&(_, q)| q))
                .collect(),
            Instruction::Cx(pairs) => pairs.iter().flat_map(|&(a, b)| [a, b]).collect(),
            _ => Vec::new(),
        }
    }
}

/// Detector coordinates: round index `t`, doubled position `(x, y)` of the
/// stabilizer, and the matching sector (`0` or `1`) the detector belongs to
/// inside its patch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorAnnotation {
    pub t: u32,
    pub x: i32,
    pub y: i32,
    pub sector: u8,
    pub recs: Vec<i64>,
}

/// Per-detector metadata resolved from a circuit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorInfo {
    pub time: u32,
    pub coord: (i32, i32),
    pub patch: u32,
    pub sector: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Circuit {
    pub qubits: Vec<QubitDecl>,
    pub instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn num_qubits(&self) -> usize {
        self.qubits.iter().map(|q| q.id as usize + 1).max().unwrap_or(0)
    }

    pub fn num_measurements(&self) -> usize {
        self.instructions.iter().map(|i| i.measurement_count()).sum()
    }

    pub fn num_detectors(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Detector(_)))
            .count()
    }

    pub fn num_observables(&self) -> usize {
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Observable { index, .. } => Some(*index as usize + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn num_patches(&self) -> usize {
        self.qubits.iter().map(|q| q.patch as usize + 1).max().unwrap_or(0)
    }

    pub fn is_noisy(&self) -> bool {
        self.instructions.iter().any(Instruction::is_noise)
    }

    pub fn qubit_patch(&self) -> Vec<u32> {
        let mut out = vec![0; self.num_qubits()];
        for q in &self.qubits {
            out[q.id as usize] = q.patch;
        }
        out
    }

    /// Resolves every detector to (time, position, patch, sector). The patch
    /// is the owner of the qubit declared at the detector's position.
    pub fn detector_info(&self) -> Vec<DetectorInfo> {
        let by_coord: std::collections::HashMap<(i32, i32), u32> =
            self.qubits.iter().map(|q| (q.coord, q.patch)).collect();
        self.instructions
            .iter()
            .filter_map(|i| match i {
                Instruction::Detector(a) => Some(DetectorInfo {
                    time: a.t,
                    coord: (a.x, a.y),
                    patch: by_coord.get(&(a.x, a.y)).copied().unwrap_or(0),
                    sector: a.sector,
                }),
                _ => None,
            })
            .collect()
    }

    /// Checks that every record offset resolves to an earlier measurement.
    pub fn validate_records(&self) -> Result<(), CircuitError> {
        let mut seen = 0usize;
        for instr in &self.instructions {
            let recs: &[i64] = match instr {
                Instruction::Detector(a) => &a.recs,
                Instruction::Observable { recs, .. } => recs,
                other => {
                    seen += other.measurement_count();
                    continue;
                }
            };
            for &r in recs {
                if r >= 0 || (-r) as usize > seen {
                    return Err(CircuitError::RecordOutOfRange {
                        offset: r,
                        available: seen,
                    });
                }
            }
        }
        Ok(())
    }

    /// Absolute record indices for each detector and observable.
    pub fn resolved_annotations(&self) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut seen = 0usize;
        let mut dets = Vec::new();
        let mut obs: Vec<Vec<usize>> = vec![Vec::new(); self.num_observables()];
        for instr in &self.instructions {
            match instr {
                Instruction::Detector(a) => dets.push(
                    a.recs
                        .iter()
                        .map(|&r| (seen as i64 + r) as usize)
                        .collect(),
                ),
                Instruction::Observable { index, recs } => {
                    // repeated OBSERVABLE lines for the same index accumulate by XOR
                    let entry = &mut obs[*index as usize];
                    for &r in recs {
                        let abs = (seen as i64 + r) as usize;
                        if let Some(pos) = entry.iter().position(|&e| e == abs) {
                            entry.swap_remove(pos);
                        } else {
                            entry.push(abs);
                        }
                    }
                }
                other => seen += other.measurement_count(),
            }
        }
        (dets, obs)
    }

    pub fn count_matching(&self, pred: impl Fn(&Instruction) -> bool) -> usize {
        self.instructions.iter().filter(|i| pred(i)).count()
    }
}
