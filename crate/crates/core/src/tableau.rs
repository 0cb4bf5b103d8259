//! Stabilizer tableau with symbolic measurement outcomes.
//!
//! Every row phase is a constant bit XOR a set of free variables, one per
//! random measurement outcome. A detector is deterministic exactly when the
//! variables cancel in the XOR of its records. Pauli faults only move the
//! constant part, so the same simulator doubles as a brute-force reference for
//! fault propagation.

use crate::circuit::{Circuit, Instruction, Pauli, PauliProduct, QubitId};

/// A measurement outcome: `constant` XOR the listed random variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymBit {
    pub constant: bool,
    vars: Vec<u64>,
}

impl SymBit {
    fn var(k: usize) -> Self {
        let mut vars = vec![0; k / 64 + 1];
        vars[k / 64] |= 1 << (k % 64);
        SymBit {
            constant: false,
            vars,
        }
    }

    pub fn xor_with(&mut self, other: &SymBit) {
        self.constant ^= other.constant;
        if self.vars.len() < other.vars.len() {
            self.vars.resize(other.vars.len(), 0);
        }
        for (a, b) in self.vars.iter_mut().zip(&other.vars) {
            *a ^= b;
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.vars.iter().all(|&w| w == 0)
    }
}

/// A Pauli fault (or a classical record flip) injected after instruction `after`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectedFault {
    Pauli {
        after: usize,
        qubit: QubitId,
        pauli: Pauli,
    },
    FlipRecord(usize),
}

struct Tableau {
    n: usize,
    w: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    /// Phases of stabilizer rows only; destabilizer phases are never read.
    phase: Vec<SymBit>,
    next_var: usize,
}

/// Sum of the `i` exponents when multiplying Pauli row 1 into row 2, mod 4.
fn g_sum(x1: &[u64], z1: &[u64], x2: &[u64], z2: &[u64]) -> u32 {
    let mut pos = 0u32;
    let mut neg = 0u32;
    for k in 0..x1.len() {
        let (a, b, c, d) = (x1[k], z1[k], x2[k], z2[k]);
        let y1 = a & b;
        let xo = a & !b;
        let zo = !a & b;
        let p = (y1 & d & !c) | (xo & d & c) | (zo & c & !d);
        let m = (y1 & c & !d) | (xo & d & !c) | (zo & c & d);
        pos += p.count_ones();
        neg += m.count_ones();
    }
    (pos + 4 * x1.len() as u32 * 64 - neg) % 4
}

impl Tableau {
    fn new(n: usize) -> Self {
        let w = n.div_ceil(64).max(1);
        let mut t = Tableau {
            n,
            w,
            x: vec![0; 2 * n * w],
            z: vec![0; 2 * n * w],
            phase: vec![SymBit::default(); n],
            next_var: 0,
        };
        for q in 0..n {
            t.x[q * w + q / 64] |= 1 << (q % 64);
            t.z[(n + q) * w + q / 64] |= 1 << (q % 64);
        }
        t
    }

    #[inline]
    fn bit(v: &[u64], w: usize, r: usize, q: usize) -> bool {
        (v[r * w + q / 64] >> (q % 64)) & 1 == 1
    }

    fn xb(&self, r: usize, q: usize) -> bool {
        Self::bit(&self.x, self.w, r, q)
    }

    fn zb(&self, r: usize, q: usize) -> bool {
        Self::bit(&self.z, self.w, r, q)
    }

    fn flip_phase_where(&mut self, q: usize, f: impl Fn(bool, bool) -> bool) {
        for r in 0..self.n {
            let row = self.n + r;
            if f(self.xb(row, q), self.zb(row, q)) {
                self.phase[r].constant ^= true;
            }
        }
    }

    fn h(&mut self, q: usize) {
        let (w, wi, m) = (self.w, q / 64, 1u64 << (q % 64));
        for r in 0..2 * self.n {
            let xi = self.x[r * w + wi] & m;
            let zi = self.z[r * w + wi] & m;
            if r >= self.n && xi != 0 && zi != 0 {
                self.phase[r - self.n].constant ^= true;
            }
            self.x[r * w + wi] = (self.x[r * w + wi] & !m) | zi;
            self.z[r * w + wi] = (self.z[r * w + wi] & !m) | xi;
        }
    }

    fn s(&mut self, q: usize) {
        let (w, wi, m) = (self.w, q / 64, 1u64 << (q % 64));
        for r in 0..2 * self.n {
            let xi = self.x[r * w + wi] & m;
            let zi = self.z[r * w + wi] & m;
            if r >= self.n && xi != 0 && zi != 0 {
                self.phase[r - self.n].constant ^= true;
            }
            self.z[r * w + wi] ^= xi;
        }
    }

    fn pauli(&mut self, q: usize, p: Pauli) {
        let (px, pz) = p.bits();
        self.flip_phase_where(q, |x, z| (x & pz) ^ (z & px));
    }

    fn cx(&mut self, c: usize, t: usize) {
        let w = self.w;
        for r in 0..2 * self.n {
            let xc = Self::bit(&self.x, w, r, c);
            let zc = Self::bit(&self.z, w, r, c);
            let xt = Self::bit(&self.x, w, r, t);
            let zt = Self::bit(&self.z, w, r, t);
            if r >= self.n && xc && zt && !(xt ^ zc) {
                self.phase[r - self.n].constant ^= true;
            }
            if xc {
                self.x[r * w + t / 64] ^= 1 << (t % 64);
            }
            if zt {
                self.z[r * w + c / 64] ^= 1 << (c % 64);
            }
        }
    }

    /// Row `h` := row `i` * row `h`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let w = self.w;
        let (xi, zi) = (
            self.x[i * w..(i + 1) * w].to_vec(),
            self.z[i * w..(i + 1) * w].to_vec(),
        );
        if h >= self.n {
            let g = g_sum(&xi, &zi, &self.x[h * w..(h + 1) * w], &self.z[h * w..(h + 1) * w]);
            debug_assert!(g.is_multiple_of(2));
            let src = self.phase[i - self.n].clone();
            let dst = &mut self.phase[h - self.n];
            dst.xor_with(&src);
            dst.constant ^= g == 2;
        }
        for k in 0..w {
            self.x[h * w + k] ^= xi[k];
            self.z[h * w + k] ^= zi[k];
        }
    }

    fn measure_z(&mut self, q: usize) -> SymBit {
        let n = self.n;
        let w = self.w;
        if let Some(p) = (n..2 * n).find(|&r| self.xb(r, q)) {
            for i in 0..2 * n {
                if i != p && self.xb(i, q) {
                    self.rowsum(i, p);
                }
            }
            let (src, dst) = (p * w, (p - n) * w);
            self.x.copy_within(src..src + w, dst);
            self.z.copy_within(src..src + w, dst);
            for k in 0..w {
                self.x[src + k] = 0;
                self.z[src + k] = 0;
            }
            self.z[src + q / 64] |= 1 << (q % 64);
            let v = SymBit::var(self.next_var);
            self.next_var += 1;
            self.phase[p - n] = v.clone();
            v
        } else {
            let mut sx = vec![0u64; w];
            let mut sz = vec![0u64; w];
            let mut out = SymBit::default();
            for i in 0..n {
                if self.xb(i, q) {
                    let r = n + i;
                    let rx = &self.x[r * w..(r + 1) * w];
                    let rz = &self.z[r * w..(r + 1) * w];
                    let g = g_sum(rx, rz, &sx, &sz);
                    out.xor_with(&self.phase[i]);
                    out.constant ^= g == 2;
                    for k in 0..w {
                        sx[k] ^= rx[k];
                        sz[k] ^= rz[k];
                    }
                }
            }
            out
        }
    }

    fn reset_z(&mut self, q: usize) {
        let m = self.measure_z(q);
        // conditional X: rows anticommuting with X pick up the outcome
        for r in 0..self.n {
            if self.zb(self.n + r, q) {
                self.phase[r].xor_with(&m);
            }
        }
    }

    fn measure_product(&mut self, prod: &PauliProduct) -> SymBit {
        let qs: Vec<usize> = prod.terms.iter().map(|&(_, q)| q as usize).collect();
        if qs.is_empty() {
            return SymBit {
                constant: prod.negated,
                vars: Vec::new(),
            };
        }
        let to_z = |t: &mut Tableau, q: usize, p: Pauli| match p {
            Pauli::X => t.h(q),
            Pauli::Y => {
                t.s(q);
                t.s(q);
                t.s(q);
                t.h(q);
            }
            Pauli::Z => {}
        };
        let from_z = |t: &mut Tableau, q: usize, p: Pauli| match p {
            Pauli::X => t.h(q),
            Pauli::Y => {
                t.h(q);
                t.s(q);
            }
            Pauli::Z => {}
        };
        for &(p, q) in &prod.terms {
            to_z(self, q as usize, p);
        }
        let last = *qs.last().expect("nonempty");
        for &q in &qs[..qs.len() - 1] {
            self.cx(q, last);
        }
        let mut m = self.measure_z(last);
        for &q in qs[..qs.len() - 1].iter().rev() {
            self.cx(q, last);
        }
        for &(p, q) in prod.terms.iter().rev() {
            from_z(self, q as usize, p);
        }
        m.constant ^= prod.negated;
        m
    }
}

/// Runs the circuit noiselessly apart from `faults` and returns every
/// measurement record in order. Noise channels in the circuit are ignored.
pub fn simulate_records(circuit: &Circuit, faults: &[InjectedFault]) -> Vec<SymBit> {
    let mut t = Tableau::new(circuit.num_qubits());
    let mut records = Vec::with_capacity(circuit.num_measurements());
    for (idx, instr) in circuit.instructions.iter().enumerate() {
        match instr {
            Instruction::ResetZ(qs) => qs.iter().for_each(|&q| t.reset_z(q as usize)),
            Instruction::ResetX(qs) => qs.iter().for_each(|&q| {
                t.reset_z(q as usize);
                t.h(q as usize);
            }),
            Instruction::MeasZ { targets, .. } => {
                for &q in targets {
                    let m = t.measure_z(q as usize);
                    records.push(m);
                }
            }
            Instruction::Mpp(products) => {
                for p in products {
                    let m = t.measure_product(p);
                    records.push(m);
                }
            }
            Instruction::H(qs) => qs.iter().for_each(|&q| t.h(q as usize)),
            Instruction::S(qs) => qs.iter().for_each(|&q| t.s(q as usize)),
            Instruction::X(qs) => qs.iter().for_each(|&q| t.pauli(q as usize, Pauli::X)),
            Instruction::Y(qs) => qs.iter().for_each(|&q| t.pauli(q as usize, Pauli::Y)),
            Instruction::Z(qs) => qs.iter().for_each(|&q| t.pauli(q as usize, Pauli::Z)),
            Instruction::Cx(pairs) => pairs.iter().for_each(|&(a, b)| t.cx(a as usize, b as usize)),
            _ => {}
        }
        for f in faults {
            match *f {
                InjectedFault::Pauli { after, qubit, pauli } if after == idx => {
                    t.pauli(qubit as usize, pauli)
                }
                _ => {}
            }
        }
    }
    for f in faults {
        if let InjectedFault::FlipRecord(r) = *f {
            records[r].constant ^= true;
        }
    }
    records
}

/// Detector and observable values from measurement records.
pub fn annotation_values(circuit: &Circuit, records: &[SymBit]) -> (Vec<SymBit>, Vec<SymBit>) {
    let (dets, obs) = circuit.resolved_annotations();
    let fold = |recs: &Vec<usize>| {
        let mut acc = SymBit::default();
        for &r in recs {
            acc.xor_with(&records[r]);
        }
        acc
    };
    (dets.iter().map(fold).collect(), obs.iter().map(fold).collect())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DeterminismReport {
    pub bad_detectors: Vec<usize>,
    pub bad_observables: Vec<usize>,
}

impl DeterminismReport {
    pub fn is_ok(&self) -> bool {
        self.bad_detectors.is_empty() && self.bad_observables.is_empty()
    }
}

/// Noiseless check that every detector and observable has a fixed value of 0.
pub fn check_detector_determinism(circuit: &Circuit) -> DeterminismReport {
    let records = simulate_records(circuit, &[]);
    let (dets, obs) = annotation_values(circuit, &records);
    let bad = |v: &[SymBit]| {
        v.iter()
            .enumerate()
            .filter(|(_, b)| !b.is_deterministic() || b.constant)
            .map(|(i, _)| i)
            .collect()
    };
    DeterminismReport {
        bad_detectors: bad(&dets),
        bad_observables: bad(&obs),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        build_deep_clifford_circuit, build_memory_circuit, build_tproxy_circuit, Basis,
        DeepCliffordParams, DetectorAnnotation, QubitDecl, QubitKind, TProxyParams,
    };

    fn bare(n: u32, instructions: Vec<Instruction>) -> Circuit {
        Circuit {
            qubits: (0..n)
                .map(|id| QubitDecl {
                    id,
                    coord: (2 * id as i32 + 1, 1),
                    patch: 0,
                    kind: QubitKind::Data,
                })
                .collect(),
            instructions,
        }
    }

    fn det(recs: Vec<i64>) -> Instruction {
        Instruction::Detector(DetectorAnnotation {
            t: 0,
            x: 1,
            y: 1,
            sector: 0,
            recs,
        })
    }

    #[test]
    fn bell_pair_parities() {
        let c = bare(
            2,
            vec![
                Instruction::ResetZ(vec![0, 1]),
                Instruction::H(vec![0]),
                Instruction::Cx(vec![(0, 1)]),
                Instruction::Mpp(vec![PauliProduct {
                    negated: false,
                    terms: vec![(Pauli::X, 0), (Pauli::X, 1)],
                }]),
                Instruction::Mpp(vec![PauliProduct {
                    negated: true,
                    terms: vec![(Pauli::Y, 0), (Pauli::Y, 1)],
                }]),
                Instruction::MeasZ {
                    targets: vec![0, 1],
                    flip: None,
                },
                det(vec![-3]),
                det(vec![-4]),
                det(vec![-1, -2]),
                det(vec![-1]),
            ],
        );
        let r = check_detector_determinism(&c);
        // XX = +1, YY = -1 reported negated as 0, ZZ = +1, single Z random
        assert_eq!(r.bad_detectors, vec![3]);
    }

    #[test]
    fn y_conjugation_through_s() {
        let c = bare(
            1,
            vec![
                Instruction::ResetX(vec![0]),
                Instruction::S(vec![0]),
                Instruction::Mpp(vec![PauliProduct {
                    negated: false,
                    terms: vec![(Pauli::Y, 0)],
                }]),
                det(vec![-1]),
            ],
        );
        assert!(check_detector_determinism(&c).is_ok());
    }

    #[test]
    fn fault_injection_flips_constant() {
        let c = bare(
            1,
            vec![
                Instruction::ResetZ(vec![0]),
                Instruction::MeasZ {
                    targets: vec![0],
                    flip: None,
                },
            ],
        );
        let r = simulate_records(
            &c,
            &[InjectedFault::Pauli {
                after: 0,
                qubit: 0,
                pauli: Pauli::Y,
            }],
        );
        assert!(r[0].constant && r[0].is_deterministic());
        let r = simulate_records(&c, &[InjectedFault::FlipRecord(0)]);
        assert!(r[0].constant);
    }

    #[test]
    fn builders_are_deterministic() {
        for basis in [Basis::X, Basis::Z] {
            let c = build_memory_circuit(3, 3, basis).unwrap();
            assert!(check_detector_determinism(&c).is_ok(), "{basis:?}");
        }
        let (c, _) = build_tproxy_circuit(&TProxyParams::new(3, 3)).unwrap();
        assert!(check_detector_determinism(&c).is_ok());
        for seed in 0..4 {
            let c = build_deep_clifford_circuit(&DeepCliffordParams::new(3, 1, 6, seed)).unwrap();
            let r = check_detector_determinism(&c);
            assert!(r.is_ok(), "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn anticommuting_detector_is_flagged() {
        let mut c = build_memory_circuit(3, 2, Basis::Z).unwrap();
        // an X-type stabilizer compared against the first round is random
        let first_x = c
            .instructions
            .iter()
            .position(|i| matches!(i, Instruction::MeasZ { .. }))
            .unwrap();
        let n_anc = c.instructions[first_x].measurement_count() as i64;
        let k = crate::circuit::layout::PatchLayout::new(3)
            .stabilizers
            .iter()
            .position(|s| s.basis == Basis::X)
            .unwrap() as i64;
        c.instructions.insert(first_x + 1, det(vec![k - n_anc]));
        let r = check_detector_determinism(&c);
        assert_eq!(r.bad_detectors, vec![0]);
    }
}
