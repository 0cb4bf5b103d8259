use serde::{Deserialize, Serialize};

use super::{Circuit, Instruction, QubitId};
use crate::error::CircuitError;

/// Circuit-level depolarizing noise strengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Two-qubit depolarizing strength after each CX.
    pub p2: f64,
    /// Single-qubit depolarizing strength after resets, single-qubit gates and measurements.
    pub p1: f64,
    /// Classical flip probability of each Z measurement.
    pub p_meas: f64,
    /// Single-qubit depolarizing strength per idle layer.
    pub p_idle: f64,
}

impl NoiseParams {
    /// Standard model: `p` on CX and readout, `p / 10` elsewhere.
    pub fn uniform(p: f64) -> Self {
        NoiseParams {
            p2: p,
            p1: p / 10.0,
            p_meas: p,
            p_idle: p / 10.0,
        }
    }

    fn validate(&self) -> Result<(), CircuitError> {
        for v in [self.p2, self.p1, self.p_meas, self.p_idle] {
            if !(0.0..0.5).contains(&v) {
                return Err(CircuitError::BadProbability(v));
            }
        }
        Ok(())
    }
}

/// Inserts noise channels into a noiseless circuit.
///
/// Layers are the spans between TICKs. Each qubit is considered live from the
/// first layer that touches it to the last one, and receives idle noise in
/// live layers where it is not acted on. Layers containing an MPP are treated
/// as ideal and get no noise at all.
pub fn apply_noise_model(circuit: &Circuit, noise: &NoiseParams) -> Result<Circuit, CircuitError> {
    noise.validate()?;
    if circuit.is_noisy() {
        return Err(CircuitError::AlreadyNoisy);
    }
    let nq = circuit.num_qubits();
    let layers: Vec<&[Instruction]> = circuit
        .instructions
        .split(|i| matches!(i, Instruction::Tick))
        .collect();

    let mut first = vec![usize::MAX; nq];
    let mut last = vec![0usize; nq];
    for (l, layer) in layers.iter().enumerate() {
        for instr in *layer {
            for q in instr.gate_qubits() {
                let q = q as usize;
                first[q] = first[q].min(l);
                last[q] = l;
            }
        }
    }

    let mut out = Vec::with_capacity(circuit.instructions.len() * 2);
    for (l, layer) in layers.iter().enumerate() {
        if l > 0 {
            out.push(Instruction::Tick);
        }
        let ideal = layer.iter().any(|i| matches!(i, Instruction::Mpp(_)));
        let mut touched = vec![false; nq];
        for instr in *layer {
            if ideal {
                out.push(instr.clone());
                continue;
            }
            for q in instr.gate_qubits() {
                touched[q as usize] = true;
            }
            match instr {
                Instruction::Cx(pairs) => {
                    out.push(instr.clone());
                    if noise.p2 > 0.0 {
                        out.push(Instruction::Depol2 {
                            p: noise.p2,
                            pairs: pairs.clone(),
                        });
                    }
                }
                Instruction::MeasZ { targets, .. } => {
                    out.push(Instruction::MeasZ {
                        targets: targets.clone(),
                        flip: (noise.p_meas > 0.0).then_some(noise.p_meas),
                    });
                    push_depol1(&mut out, noise.p1, targets);
                }
                Instruction::ResetZ(t)
                | Instruction::ResetX(t)
                | Instruction::H(t)
                | Instruction::S(t)
                | Instruction::X(t)
                | Instruction::Y(t)
                | Instruction::Z(t) => {
                    out.push(instr.clone());
                    push_depol1(&mut out, noise.p1, t);
                }
                _ => out.push(instr.clone()),
            }
        }
        if !ideal && noise.p_idle > 0.0 {
            // idle noise goes before any trailing annotations so that it stays
            // inside the layer it belongs to
            let idle: Vec<QubitId> = (0..nq)
                .filter(|&q| !touched[q] && first[q] <= l && l <= last[q])
                .map(|q| q as QubitId)
                .collect();
            if !idle.is_empty() {
                let at = out
                    .iter()
                    .rposition(|i| {
                        !matches!(i, Instruction::Detector(_) | Instruction::Observable { .. })
                    })
                    .map_or(0, |p| p + 1);
                // only the annotations of this layer can sit after `at`
                out.insert(
                    at,
                    Instruction::Depol1 {
                        p: noise.p_idle,
                        targets: idle,
                    },
                );
            }
        }
    }
    Ok(Circuit {
        qubits: circuit.qubits.clone(),
        instructions: out,
    })
}

fn push_depol1(out: &mut Vec<Instruction>, p: f64, targets: &[QubitId]) {
    if p > 0.0 && !targets.is_empty() {
        out.push(Instruction::Depol1 {
            p,
            targets: targets.to_vec(),
        });
    }
}
