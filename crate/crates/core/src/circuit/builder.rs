use super::layout::PatchLayout;
use super::{
    Basis, Circuit, DetectorAnnotation, Instruction, Pauli, PauliProduct, QubitDecl, QubitId,
    QubitKind,
};
use crate::error::CircuitError;

pub type PatchId = usize;

/// Which side of a teleportation CNOT the measured (carrier) patch sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum CnotOrientation {
    /// Fresh patch is the control, the carrier is the target and is measured.
    #[default]
    FreshControls,
    /// Carrier is the control and is measured.
    CarrierControls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransversalGate {
    H,
    X,
    Y,
    Z,
}

/// Running expectation of one stabilizer: its value is the XOR of `recs`
/// and of the random bits `vars` (outcomes fixed by preparation but not yet
/// observed). It is deterministic once `vars` is empty.
#[derive(Debug, Clone, Default)]
struct Tracked {
    recs: Vec<usize>,
    vars: Vec<usize>,
    sector: u8,
}

impl Tracked {
    fn xor_with(&mut self, other: &Tracked) {
        for &r in &other.recs {
            toggle(&mut self.recs, r);
        }
        for &v in &other.vars {
            toggle(&mut self.vars, v);
        }
    }
}

fn toggle(set: &mut Vec<usize>, r: usize) {
    if let Some(p) = set.iter().position(|&x| x == r) {
        set.swap_remove(p);
    } else {
        set.push(r);
    }
}

#[derive(Debug, Clone)]
struct PatchState {
    layout: PatchLayout,
    site_to_qubit: Vec<QubitId>,
    ancillas: Vec<QubitId>,
    tracked: Vec<Tracked>,
    origin_x: i32,
    initialized: bool,
    measured: bool,
    rounds: usize,
}

/// Incremental builder for multi-patch rotated surface-code circuits with
/// detector bookkeeping through transversal gates.
#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    qubits: Vec<QubitDecl>,
    instructions: Vec<Instruction>,
    meas_count: usize,
    patches: Vec<PatchState>,
    next_round: u32,
    next_x: i32,
    next_var: usize,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_patch(&mut self, d: usize) -> Result<PatchId, CircuitError> {
        if d < 3 || d.is_multiple_of(2) {
            return Err(CircuitError::BadDistance(d));
        }
        let layout = PatchLayout::new(d);
        let patch = self.patches.len();
        let origin_x = self.next_x;
        self.next_x += 2 * d as i32 + 4;
        let mut site_to_qubit = Vec::with_capacity(d * d);
        for s in 0..d * d {
            let (i, j) = layout.site_coord(s);
            let id = self.qubits.len() as QubitId;
            self.qubits.push(QubitDecl {
                id,
                coord: (origin_x + 2 * i as i32 + 1, 2 * j as i32 + 1),
                patch: patch as u32,
                kind: QubitKind::Data,
            });
            site_to_qubit.push(id);
        }
        let mut ancillas = Vec::new();
        for st in &layout.stabilizers {
            let id = self.qubits.len() as QubitId;
            self.qubits.push(QubitDecl {
                id,
                coord: (origin_x + 2 * st.pos.0 as i32, 2 * st.pos.1 as i32),
                patch: patch as u32,
                kind: match st.basis {
                    Basis::X => QubitKind::AncillaX,
                    Basis::Z => QubitKind::AncillaZ,
                },
            });
            ancillas.push(id);
        }
        let tracked = vec![Tracked::default(); layout.stabilizers.len()];
        self.patches.push(PatchState {
            layout,
            site_to_qubit,
            ancillas,
            tracked,
            origin_x,
            initialized: false,
            measured: false,
            rounds: 0,
        });
        Ok(patch)
    }

    pub fn distance(&self, patch: PatchId) -> usize {
        self.patches[patch].layout.d
    }

    pub fn layout(&self, patch: PatchId) -> &PatchLayout {
        &self.patches[patch].layout
    }

    /// Physical qubit currently playing data site `s` of `patch`.
    pub fn data_qubit(&self, patch: PatchId, site: usize) -> QubitId {
        self.patches[patch].site_to_qubit[site]
    }

    pub fn rounds_done(&self, patch: PatchId) -> usize {
        self.patches[patch].rounds
    }

    pub fn is_initialized(&self, patch: PatchId) -> bool {
        self.patches[patch].initialized
    }

    /// Index of the next syndrome-extraction round.
    pub fn current_round(&self) -> u32 {
        self.next_round
    }

    pub fn measurement_count(&self) -> usize {
        self.meas_count
    }

    fn live(&self, patch: PatchId) -> Result<&PatchState, CircuitError> {
        let p = &self.patches[patch];
        if p.measured {
            return Err(CircuitError::PatchMeasured(patch));
        }
        if !p.initialized {
            return Err(CircuitError::PatchNotInitialized(patch));
        }
        Ok(p)
    }

    pub fn tick(&mut self) {
        self.instructions.push(Instruction::Tick);
    }

    /// Resets every data qubit of the listed patches in one layer.
    pub fn init_patches(&mut self, patches: &[(PatchId, Basis)]) -> Result<(), CircuitError> {
        let mut rz = Vec::new();
        let mut rx = Vec::new();
        for &(patch, basis) in patches {
            let p = &mut self.patches[patch];
            if p.measured {
                return Err(CircuitError::PatchMeasured(patch));
            }
            p.initialized = true;
            for (k, st) in p.layout.stabilizers.iter().enumerate() {
                let vars = if st.basis == basis {
                    Vec::new()
                } else {
                    self.next_var += 1;
                    vec![self.next_var - 1]
                };
                p.tracked[k] = Tracked {
                    recs: Vec::new(),
                    vars,
                    sector: match st.basis {
                        Basis::Z => 0,
                        Basis::X => 1,
                    },
                };
            }
            match basis {
                Basis::Z => rz.extend(p.site_to_qubit.iter().copied()),
                Basis::X => rx.extend(p.site_to_qubit.iter().copied()),
            }
        }
        if !rz.is_empty() {
            self.instructions.push(Instruction::ResetZ(rz));
        }
        if !rx.is_empty() {
            self.instructions.push(Instruction::ResetX(rx));
        }
        self.tick();
        Ok(())
    }

    fn emit_detector(&mut self, patch: PatchId, k: usize, t: u32, recs: &[usize]) {
        let p = &self.patches[patch];
        let pos = p.layout.stabilizers[k].pos;
        let mut rel: Vec<i64> = recs
            .iter()
            .map(|&r| r as i64 - self.meas_count as i64)
            .collect();
        rel.sort_unstable_by(|a, b| b.cmp(a));
        self.instructions.push(Instruction::Detector(DetectorAnnotation {
            t,
            x: p.origin_x + 2 * pos.0 as i32,
            y: 2 * pos.1 as i32,
            sector: p.tracked[k].sector,
            recs: rel,
        }));
    }

    /// Records a measurement of stabilizer `k` of `patch` whose value is the
    /// XOR of `measured`. Returns the detector records when the outcome was
    /// deterministic; otherwise one random bit is solved for and eliminated
    /// from every tracked expectation. The stabilizer's expectation becomes
    /// `measured` either way.
    fn observe(&mut self, patch: PatchId, k: usize, measured: &[usize]) -> Option<Vec<usize>> {
        let cur = self.patches[patch].tracked[k].clone();
        let mut delta = Tracked {
            recs: cur.recs.clone(),
            vars: cur.vars.clone(),
            sector: cur.sector,
        };
        for &r in measured {
            toggle(&mut delta.recs, r);
        }
        match cur.vars.iter().min() {
            None => {
                self.patches[patch].tracked[k].recs = measured.to_vec();
                Some(delta.recs)
            }
            Some(&pivot) => {
                for st in &mut self.patches {
                    for tr in &mut st.tracked {
                        if tr.vars.contains(&pivot) {
                            tr.xor_with(&delta);
                        }
                    }
                }
                None
            }
        }
    }

    /// One lockstep syndrome-extraction round on the listed patches.
    pub fn syndrome_round(&mut self, patches: &[PatchId]) -> Result<(), CircuitError> {
        for &p in patches {
            self.live(p)?;
        }
        let mut rz = Vec::new();
        let mut rx = Vec::new();
        for &p in patches {
            let st = &self.patches[p];
            for (k, s) in st.layout.stabilizers.iter().enumerate() {
                match s.basis {
                    Basis::Z => rz.push(st.ancillas[k]),
                    Basis::X => rx.push(st.ancillas[k]),
                }
            }
        }
        self.instructions.push(Instruction::ResetZ(rz));
        self.instructions.push(Instruction::ResetX(rx.clone()));
        self.tick();
        for step in 0..4 {
            let mut pairs = Vec::new();
            for &p in patches {
                let st = &self.patches[p];
                for (k, s) in st.layout.stabilizers.iter().enumerate() {
                    if let Some(site) = s.schedule[step] {
                        let data = st.site_to_qubit[site];
                        let anc = st.ancillas[k];
                        pairs.push(match s.basis {
                            Basis::Z => (data, anc),
                            Basis::X => (anc, data),
                        });
                    }
                }
            }
            self.instructions.push(Instruction::Cx(pairs));
            self.tick();
        }
        self.instructions.push(Instruction::H(rx));
        self.tick();
        let mut targets = Vec::new();
        let mut owners = Vec::new();
        for &p in patches {
            let st = &self.patches[p];
            for k in 0..st.ancillas.len() {
                targets.push(st.ancillas[k]);
                owners.push((p, k));
            }
        }
        self.instructions.push(Instruction::MeasZ {
            targets,
            flip: None,
        });
        let first = self.meas_count;
        self.meas_count += owners.len();
        let t = self.next_round;
        for (offset, &(p, k)) in owners.iter().enumerate() {
            if let Some(recs) = self.observe(p, k, &[first + offset]) {
                self.emit_detector(p, k, t, &recs);
            }
        }
        for &p in patches {
            self.patches[p].rounds += 1;
        }
        self.next_round += 1;
        self.tick();
        Ok(())
    }

    /// Simultaneous transversal CNOTs, each `(control, target)`.
    ///
    /// Z-type stabilizers of the target absorb the control's expectation and
    /// X-type stabilizers of the control absorb the target's, which yields
    /// the three-measurement detectors in the following round.
    pub fn transversal_cnots(&mut self, pairs: &[(PatchId, PatchId)]) -> Result<(), CircuitError> {
        let mut cx = Vec::new();
        for &(c, t) in pairs {
            if c == t {
                return Err(CircuitError::InvalidParameter(
                    "CNOT control and target must differ".into(),
                ));
            }
            let dc = self.live(c)?.layout.d;
            let dt = self.live(t)?.layout.d;
            if dc != dt {
                return Err(CircuitError::DistanceMismatch(c, t));
            }
            for s in 0..dc * dc {
                cx.push((self.patches[c].site_to_qubit[s], self.patches[t].site_to_qubit[s]));
            }
        }
        self.instructions.push(Instruction::Cx(cx));
        self.tick();
        for &(c, t) in pairs {
            for k in 0..self.patches[c].tracked.len() {
                match self.patches[c].layout.stabilizers[k].basis {
                    Basis::Z => {
                        let src = self.patches[c].tracked[k].clone();
                        self.patches[t].tracked[k].xor_with(&src);
                    }
                    Basis::X => {
                        let src = self.patches[t].tracked[k].clone();
                        self.patches[c].tracked[k].xor_with(&src);
                    }
                }
            }
        }
        Ok(())
    }

    /// One layer of transversal single-qubit gates. A Hadamard is applied
    /// physically to every data qubit and the patch's site labels are turned a
    /// quarter so that the stabilizer layout returns to standard orientation.
    pub fn transversal_gates(
        &mut self,
        gates: &[(PatchId, TransversalGate)],
    ) -> Result<(), CircuitError> {
        let mut hs = Vec::new();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut zs = Vec::new();
        for &(p, g) in gates {
            let qubits = self.live(p)?.site_to_qubit.clone();
            match g {
                TransversalGate::H => hs.extend(qubits),
                TransversalGate::X => xs.extend(qubits),
                TransversalGate::Y => ys.extend(qubits),
                TransversalGate::Z => zs.extend(qubits),
            }
        }
        for (list, make) in [
            (hs, Instruction::H as fn(Vec<QubitId>) -> Instruction),
            (xs, Instruction::X),
            (ys, Instruction::Y),
            (zs, Instruction::Z),
        ] {
            if !list.is_empty() {
                self.instructions.push(make(list));
            }
        }
        self.tick();
        for &(p, g) in gates {
            if g != TransversalGate::H {
                continue;
            }
            let st = &mut self.patches[p];
            let n = st.site_to_qubit.len();
            let mut relabeled = vec![0; n];
            for s in 0..n {
                relabeled[st.layout.rotate_site(s)] = st.site_to_qubit[s];
            }
            st.site_to_qubit = relabeled;
            let mut tracked = vec![Tracked::default(); st.tracked.len()];
            for k in 0..st.tracked.len() {
                let img = st
                    .layout
                    .stabilizer_index(st.layout.rotate_pos(st.layout.stabilizers[k].pos))
                    .expect("rotation maps stabilizers onto stabilizers");
                tracked[img] = st.tracked[k].clone();
            }
            st.tracked = tracked;
        }
        Ok(())
    }

    /// Transversal single-basis readout of every data qubit. Emits the
    /// space-like detectors of the readout basis and returns the record index
    /// of each data site.
    pub fn measure_data(&mut self, patch: PatchId, basis: Basis) -> Result<Vec<usize>, CircuitError> {
        let qubits = self.live(patch)?.site_to_qubit.clone();
        if basis == Basis::X {
            self.instructions.push(Instruction::H(qubits.clone()));
            self.tick();
        }
        self.instructions.push(Instruction::MeasZ {
            targets: qubits.clone(),
            flip: None,
        });
        let first = self.meas_count;
        self.meas_count += qubits.len();
        let site_rec: Vec<usize> = (0..qubits.len()).map(|s| first + s).collect();
        let t = self.next_round;
        let nstab = self.patches[patch].tracked.len();
        for k in 0..nstab {
            let stab = &self.patches[patch].layout.stabilizers[k];
            if stab.basis != basis {
                continue;
            }
            let measured: Vec<usize> = stab.support().map(|site| site_rec[site]).collect();
            if let Some(recs) = self.observe(patch, k, &measured) {
                self.emit_detector(patch, k, t, &recs);
            }
        }
        self.patches[patch].measured = true;
        self.tick();
        Ok(site_rec)
    }

    /// Noiseless Pauli-product readout of every stabilizer of the listed
    /// patches, with detectors against the tracked expectations.
    pub fn measure_stabilizers_mpp(&mut self, patches: &[PatchId]) -> Result<(), CircuitError> {
        let mut products = Vec::new();
        let mut owners = Vec::new();
        for &p in patches {
            let st = self.live(p)?;
            for (k, s) in st.layout.stabilizers.iter().enumerate() {
                let pauli = match s.basis {
                    Basis::X => Pauli::X,
                    Basis::Z => Pauli::Z,
                };
                products.push(PauliProduct {
                    negated: false,
                    terms: s.support().map(|site| (pauli, st.site_to_qubit[site])).collect(),
                });
                owners.push((p, k));
            }
        }
        self.instructions.push(Instruction::Mpp(products));
        let first = self.meas_count;
        self.meas_count += owners.len();
        let t = self.next_round;
        for (offset, &(p, k)) in owners.iter().enumerate() {
            if let Some(recs) = self.observe(p, k, &[first + offset]) {
                self.emit_detector(p, k, t, &recs);
            }
        }
        Ok(())
    }

    /// Appends one MPP and returns its record index.
    pub fn mpp(&mut self, product: PauliProduct) -> usize {
        self.instructions.push(Instruction::Mpp(vec![product]));
        self.meas_count += 1;
        self.meas_count - 1
    }

    pub fn observable(&mut self, index: u32, recs: &[usize]) {
        let rel = recs
            .iter()
            .map(|&r| r as i64 - self.meas_count as i64)
            .collect();
        self.instructions
            .push(Instruction::Observable { index, recs: rel });
    }

    pub fn finish(mut self) -> Circuit {
        while matches!(self.instructions.last(), Some(Instruction::Tick)) {
            self.instructions.pop();
        }
        Circuit {
            qubits: self.qubits,
            instructions: self.instructions,
        }
    }
}
