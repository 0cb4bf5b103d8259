use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::builder::{CircuitBuilder, CnotOrientation, PatchId, TransversalGate};
use super::{Basis, Circuit, Pauli, PauliProduct, QubitId};
use crate::error::CircuitError;

fn check_distance(d: usize) -> Result<(), CircuitError> {
    if d < 3 || d.is_multiple_of(2) {
        Err(CircuitError::BadDistance(d))
    } else {
        Ok(())
    }
}

/// Single-patch memory experiment: prepare, `rounds` rounds, transversal readout.
pub fn build_memory_circuit(d: usize, rounds: usize, basis: Basis) -> Result<Circuit, CircuitError> {
    check_distance(d)?;
    if rounds < 1 {
        return Err(CircuitError::NoRounds);
    }
    let mut b = CircuitBuilder::new();
    let p = b.add_patch(d)?;
    b.init_patches(&[(p, basis)])?;
    for _ in 0..rounds {
        b.syndrome_round(&[p])?;
    }
    let sites = match basis {
        Basis::Z => b.layout(p).logical_z_sites(),
        Basis::X => b.layout(p).logical_x_sites(),
    };
    let recs = b.measure_data(p, basis)?;
    let obs: Vec<usize> = sites.iter().map(|&s| recs[s]).collect();
    b.observable(0, &obs);
    Ok(b.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeepCliffordParams {
    pub d: usize,
    pub rounds_per_layer: usize,
    pub layers: usize,
    pub n_qubits: usize,
    pub seed: u64,
}

impl DeepCliffordParams {
    pub fn new(d: usize, rounds_per_layer: usize, layers: usize, seed: u64) -> Self {
        DeepCliffordParams {
            d,
            rounds_per_layer,
            layers,
            n_qubits: 4,
            seed,
        }
    }

    /// Spacetime volume per layer and logical qubit, `(n_r + 1) d^2`.
    pub fn spacetime_volume(&self) -> usize {
        (self.rounds_per_layer + 1) * self.d * self.d
    }
}

/// Signed physical Pauli operator, tracked through the Clifford layers.
#[derive(Debug, Clone)]
struct TrackedPauli {
    sign: bool,
    x: Vec<bool>,
    z: Vec<bool>,
}

impl TrackedPauli {
    fn h(&mut self, q: usize) {
        self.sign ^= self.x[q] & self.z[q];
        std::mem::swap(&mut self.x[q], &mut self.z[q]);
    }

    fn pauli(&mut self, q: usize, p: Pauli) {
        let (px, pz) = p.bits();
        // conjugation by P flips the sign iff the operator anticommutes with P
        self.sign ^= (self.x[q] & pz) ^ (self.z[q] & px);
    }

    fn cx(&mut self, c: usize, t: usize) {
        self.sign ^= self.x[c] & self.z[t] & !(self.x[t] ^ self.z[c]);
        self.x[t] ^= self.x[c];
        self.z[c] ^= self.z[t];
    }

    fn product(&self) -> PauliProduct {
        let terms = (0..self.x.len())
            .filter_map(|q| Pauli::from_bits(self.x[q], self.z[q]).map(|p| (p, q as QubitId)))
            .collect();
        PauliProduct {
            negated: self.sign,
            terms,
        }
    }
}

/// Random deep Clifford benchmark: every logical qubit starts in |+> (reset
/// plus one syndrome round), each
/// layer applies a random transversal gate from {H, X, Y, Z} per qubit, two
/// transversal CNOTs on a random pairing with random orientation, then
/// `rounds_per_layer` rounds. The evolved logical stabilizer generators are
/// read out noiselessly at the end, one observable each.
pub fn build_deep_clifford_circuit(params: &DeepCliffordParams) -> Result<Circuit, CircuitError> {
    check_distance(params.d)?;
    if params.n_qubits == 0 || params.n_qubits % 2 == 1 {
        return Err(CircuitError::InvalidParameter(format!(
            "n_qubits must be even and positive, got {}",
            params.n_qubits
        )));
    }
    if params.layers < 1 {
        return Err(CircuitError::InvalidParameter("layers must be >= 1".into()));
    }
    if params.rounds_per_layer < 1 {
        return Err(CircuitError::NoRounds);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = CircuitBuilder::new();
    let patches: Vec<PatchId> = (0..params.n_qubits)
        .map(|_| b.add_patch(params.d))
        .collect::<Result<_, _>>()?;
    let inits: Vec<(PatchId, Basis)> = patches.iter().map(|&p| (p, Basis::X)).collect();
    b.init_patches(&inits)?;
    // projects the product state onto the code space
    b.syndrome_round(&patches)?;

    let nq = params.n_qubits * (2 * params.d * params.d);
    let mut gens: Vec<TrackedPauli> = patches
        .iter()
        .map(|&p| {
            let mut t = TrackedPauli {
                sign: false,
                x: vec![false; nq],
                z: vec![false; nq],
            };
            for s in b.layout(p).logical_x_sites() {
                t.x[b.data_qubit(p, s) as usize] = true;
            }
            t
        })
        .collect();
    let sites = params.d * params.d;

    for _ in 0..params.layers {
        let mut gates = Vec::new();
        for &p in &patches {
            let g = match rng.gen_range(0..4) {
                0 => TransversalGate::H,
                1 => TransversalGate::X,
                2 => TransversalGate::Y,
                _ => TransversalGate::Z,
            };
            for s in 0..sites {
                let q = b.data_qubit(p, s) as usize;
                for t in gens.iter_mut() {
                    match g {
                        TransversalGate::H => t.h(q),
                        TransversalGate::X => t.pauli(q, Pauli::X),
                        TransversalGate::Y => t.pauli(q, Pauli::Y),
                        TransversalGate::Z => t.pauli(q, Pauli::Z),
                    }
                }
            }
            gates.push((p, g));
        }
        b.transversal_gates(&gates)?;

        let mut order = patches.clone();
        order.shuffle(&mut rng);
        let mut pairs = Vec::new();
        for chunk in order.chunks(2) {
            let (mut c, mut t) = (chunk[0], chunk[1]);
            if rng.gen_bool(0.5) {
                std::mem::swap(&mut c, &mut t);
            }
            for s in 0..sites {
                let qc = b.data_qubit(c, s) as usize;
                let qt = b.data_qubit(t, s) as usize;
                for g in gens.iter_mut() {
                    g.cx(qc, qt);
                }
            }
            pairs.push((c, t));
        }
        b.transversal_cnots(&pairs)?;
        for _ in 0..params.rounds_per_layer {
            b.syndrome_round(&patches)?;
        }
    }

    b.measure_stabilizers_mpp(&patches)?;
    for (k, g) in gens.iter().enumerate() {
        let rec = b.mpp(g.product());
        b.observable(k as u32, &[rec]);
    }
    Ok(b.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TProxyParams {
    pub d: usize,
    pub n_tgates: usize,
    pub n_buf: usize,
    pub n_sep: usize,
    pub extra_rounds: usize,
    pub orientation: CnotOrientation,
}

impl TProxyParams {
    pub fn new(d: usize, n_tgates: usize) -> Self {
        TProxyParams {
            d,
            n_tgates,
            n_buf: 1,
            n_sep: 3,
            extra_rounds: 0,
            orientation: CnotOrientation::default(),
        }
    }
}

/// Timing of one teleportation proxy inside a built circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TGateInfo {
    pub observable: u32,
    pub carrier: u32,
    pub survivor: u32,
    /// Index of the first syndrome round after the transversal CNOT.
    pub first_round_after_cnot: u32,
}

impl TGateInfo {
    /// Last round visible to a window that waits `n_buf` rounds after the CNOT.
    pub fn horizon(&self, n_buf: usize) -> u32 {
        self.first_round_after_cnot + n_buf as u32 - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TProxySchedule {
    pub gates: Vec<TGateInfo>,
    /// Round index of the survivor's final transversal readout.
    pub final_readout_round: u32,
    pub n_buf: usize,
}

impl TProxySchedule {
    /// Window length at which the window for `gate` covers the whole
    /// circuit, final readout included.
    pub fn full_n_buf(&self, gate: usize) -> usize {
        (self.final_readout_round - self.gates[gate].first_round_after_cnot) as usize + 1
    }

    /// Largest `n_buf` whose window ends before the survivor's final readout.
    pub fn max_n_buf(&self, gate: usize) -> usize {
        self.full_n_buf(gate) - 1
    }
}

/// Teleportation proxy: a chain of transversal CNOTs between the current
/// carrier and a fresh patch, each followed by `n_buf` rounds and a
/// transversal Z readout of the carrier. The survivor gets
/// `n_sep - n_buf` further rounds before the next CNOT; the fresh patch for
/// the next gate is prepared in |0> and joins for the last of those rounds.
pub fn build_tproxy_circuit(params: &TProxyParams) -> Result<(Circuit, TProxySchedule), CircuitError> {
    check_distance(params.d)?;
    if params.n_buf < 1 {
        return Err(CircuitError::InvalidParameter("n_buf must be >= 1".into()));
    }
    if params.n_tgates < 1 {
        return Err(CircuitError::InvalidParameter("n_tgates must be >= 1".into()));
    }
    if params.n_sep < params.n_buf + 2 {
        return Err(CircuitError::InvalidParameter(format!(
            "n_sep ({}) must be at least n_buf + 2 ({})",
            params.n_sep,
            params.n_buf + 2
        )));
    }
    let post = params.n_sep - params.n_buf;
    let mut b = CircuitBuilder::new();
    let mut carrier = b.add_patch(params.d)?;
    let mut fresh = b.add_patch(params.d)?;
    b.init_patches(&[(carrier, Basis::Z), (fresh, Basis::Z)])?;
    b.syndrome_round(&[carrier, fresh])?;
    let mut gates = Vec::new();
    let mut final_readout_round = 0;
    for k in 0..params.n_tgates {
        let pair = match params.orientation {
            CnotOrientation::FreshControls => (fresh, carrier),
            CnotOrientation::CarrierControls => (carrier, fresh),
        };
        b.transversal_cnots(&[pair])?;
        let first_round_after_cnot = b.current_round();
        for _ in 0..params.n_buf {
            b.syndrome_round(&[carrier, fresh])?;
        }
        let sites = b.layout(carrier).logical_z_sites();
        let recs = b.measure_data(carrier, Basis::Z)?;
        let obs: Vec<usize> = sites.iter().map(|&s| recs[s]).collect();
        b.observable(k as u32, &obs);
        gates.push(TGateInfo {
            observable: k as u32,
            carrier: carrier as u32,
            survivor: fresh as u32,
            first_round_after_cnot,
        });
        let survivor = fresh;
        if k + 1 < params.n_tgates {
            for _ in 0..post - 1 {
                b.syndrome_round(&[survivor])?;
            }
            let next = b.add_patch(params.d)?;
            b.init_patches(&[(next, Basis::Z)])?;
            b.syndrome_round(&[survivor, next])?;
            carrier = survivor;
            fresh = next;
        } else {
            for _ in 0..post + params.extra_rounds {
                b.syndrome_round(&[survivor])?;
            }
            final_readout_round = b.current_round();
            b.measure_data(survivor, Basis::Z)?;
        }
    }
    Ok((
        b.finish(),
        TProxySchedule {
            gates,
            final_readout_round,
            n_buf: params.n_buf,
        },
    ))
}
