//! Line-based circuit text format.
//!
//! ```text
//! QUBIT 0 0.5 0.5 0 data
//! RESET_Z 0 1 2
//! CX 0 9 1 10
//! DEPOL2(0.001) 0 9 1 10
//! MEAS_Z 9 10 MEASFLIP(0.001)
//! DETECTOR(3,1,0,0) rec[-1] rec[-9]
//! OBSERVABLE(0) rec[-3] rec[-6] rec[-9]
//! MPP X0*X1 !Z2*Z3
//! TICK
//! ```
//!
//! Coordinates are printed at lattice scale (half the stored doubled value).
//! Detector coordinates are `(t, x, y, sector)`. Lines starting with `#` are
//! comments.

use std::fmt::Write;

use super::{
    Circuit, DetectorAnnotation, Instruction, Pauli, PauliProduct, QubitDecl, QubitId, QubitKind,
};
use crate::error::ParseError;

fn half(v: i32) -> f64 {
    v as f64 / 2.0
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn recs(r: &[i64]) -> String {
    join(r.iter().map(|k| format!("rec[{k}]")))
}

pub fn serialize_circuit(circuit: &Circuit) -> String {
    let mut out = String::new();
    for q in &circuit.qubits {
        let _ = writeln!(
            out,
            "QUBIT {} {} {} {} {}",
            q.id,
            half(q.coord.0),
            half(q.coord.1),
            q.patch,
            q.kind.as_str()
        );
    }
    for instr in &circuit.instructions {
        let line = match instr {
            Instruction::ResetZ(t) => format!("RESET_Z {}", join(t)),
            Instruction::ResetX(t) => format!("RESET_X {}", join(t)),
            Instruction::MeasZ { targets, flip } => match flip {
                Some(p) => format!("MEAS_Z {} MEASFLIP({p})", join(targets)),
                None => format!("MEAS_Z {}", join(targets)),
            },
            Instruction::Mpp(products) => {
                let parts = products.iter().map(|p| {
                    let body = p
                        .terms
                        .iter()
                        .map(|(pauli, q)| format!("{}{}", pauli.letter(), q))
                        .collect::<Vec<_>>()
                        .join("*");
                    if p.negated {
                        format!("!{body}")
                    } else {
                        body
                    }
                });
                format!("MPP {}", join(parts))
            }
            Instruction::H(t) => format!("H {}", join(t)),
            Instruction::S(t) => format!("S {}", join(t)),
            Instruction::X(t) => format!("X {}", join(t)),
            Instruction::Y(t) => format!("Y {}", join(t)),
            Instruction::Z(t) => format!("Z {}", join(t)),
            Instruction::Cx(pairs) => {
                format!("CX {}", join(pairs.iter().flat_map(|&(a, b)| [a, b])))
            }
            Instruction::Tick => "TICK".to_string(),
            Instruction::Depol1 { p, targets } => format!("DEPOL1({p}) {}", join(targets)),
            Instruction::Depol2 { p, pairs } => {
                format!("DEPOL2({p}) {}", join(pairs.iter().flat_map(|&(a, b)| [a, b])))
            }
            Instruction::Detector(a) => format!(
                "DETECTOR({},{},{},{}) {}",
                a.t,
                half(a.x),
                half(a.y),
                a.sector,
                recs(&a.recs)
            ),
            Instruction::Observable { index, recs: r } => {
                format!("OBSERVABLE({index}) {}", recs(r))
            }
        };
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

struct LineCtx<'a> {
    line: usize,
    text: &'a str,
}

impl LineCtx<'_> {
    fn err(&self, token: &str, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, token, msg)
    }

    fn int<T: std::str::FromStr>(&self, tok: &str) -> Result<T, ParseError> {
        tok.parse().map_err(|_| self.err(tok, "expected an integer"))
    }

    fn doubled(&self, tok: &str) -> Result<i32, ParseError> {
        let v: f64 = tok.parse().map_err(|_| self.err(tok, "expected a coordinate"))?;
        let d = v * 2.0;
        if d.fract() != 0.0 || !d.is_finite() {
            return Err(self.err(tok, "coordinate must be a multiple of 0.5"));
        }
        Ok(d as i32)
    }

    fn prob(&self, tok: &str) -> Result<f64, ParseError> {
        let p: f64 = tok.parse().map_err(|_| self.err(tok, "expected a probability"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(self.err(tok, "probability outside [0, 1]"));
        }
        Ok(p)
    }

    fn qubits(&self, toks: &[&str]) -> Result<Vec<QubitId>, ParseError> {
        toks.iter().map(|t| self.int(t)).collect()
    }

    fn pairs(&self, toks: &[&str]) -> Result<Vec<(QubitId, QubitId)>, ParseError> {
        if toks.len() % 2 == 1 {
            return Err(self.err(toks[toks.len() - 1], "odd number of pair targets"));
        }
        let q = self.qubits(toks)?;
        Ok(q.chunks(2).map(|c| (c[0], c[1])).collect())
    }

    fn recs(&self, toks: &[&str]) -> Result<Vec<i64>, ParseError> {
        toks.iter()
            .map(|t| {
                let inner = t
                    .strip_prefix("rec[")
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| self.err(t, "expected rec[-k]"))?;
                let k: i64 = self.int(inner)?;
                if k >= 0 {
                    return Err(self.err(t, "record offsets must be negative"));
                }
                Ok(k)
            })
            .collect()
    }

    fn product(&self, tok: &str) -> Result<PauliProduct, ParseError> {
        let (negated, body) = match tok.strip_prefix('!') {
            Some(b) => (true, b),
            None => (false, tok),
        };
        let terms = body
            .split('*')
            .map(|term| {
                let mut chars = term.chars();
                let pauli = match chars.next() {
                    Some('X') => Pauli::X,
                    Some('Y') => Pauli::Y,
                    Some('Z') => Pauli::Z,
                    _ => return Err(self.err(tok, "expected X, Y or Z in Pauli product")),
                };
                Ok((pauli, self.int(chars.as_str())?))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(PauliProduct { negated, terms })
    }
}

/// Splits `NAME(args)` into the name and its comma-separated arguments.
fn opcode_args(head: &str) -> (&str, Vec<&str>) {
    match head.find('(') {
        Some(open) if head.ends_with(')') => {
            let args = head[open + 1..head.len() - 1].split(',').map(str::trim).collect();
            (&head[..open], args)
        }
        _ => (head, Vec::new()),
    }
}

pub fn parse_circuit(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit = Circuit::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ctx = LineCtx { line: n + 1, text: line };
        let toks: Vec<&str> = line.split_whitespace().collect();
        let (op, args) = opcode_args(toks[0]);
        let rest = &toks[1..];
        let expect_args = |k: usize| -> Result<(), ParseError> {
            if args.len() != k {
                Err(ctx.err(toks[0], format!("expected {k} argument(s)")))
            } else {
                Ok(())
            }
        };
        let instr = match op {
            "QUBIT" => {
                if rest.len() != 5 {
                    return Err(ctx.err(ctx.text, "QUBIT needs id, x, y, patch, kind"));
                }
                let kind = QubitKind::from_str(rest[4])
                    .ok_or_else(|| ctx.err(rest[4], "unknown qubit kind"))?;
                let id: QubitId = ctx.int(rest[0])?;
                if circuit.qubits.iter().any(|q| q.id == id) {
                    return Err(ctx.err(rest[0], "duplicate qubit id"));
                }
                circuit.qubits.push(QubitDecl {
                    id,
                    coord: (ctx.doubled(rest[1])?, ctx.doubled(rest[2])?),
                    patch: ctx.int(rest[3])?,
                    kind,
                });
                continue;
            }
            "RESET_Z" => Instruction::ResetZ(ctx.qubits(rest)?),
            "RESET_X" => Instruction::ResetX(ctx.qubits(rest)?),
            "H" => Instruction::H(ctx.qubits(rest)?),
            "S" => Instruction::S(ctx.qubits(rest)?),
            "X" => Instruction::X(ctx.qubits(rest)?),
            "Y" => Instruction::Y(ctx.qubits(rest)?),
            "Z" => Instruction::Z(ctx.qubits(rest)?),
            "CX" => Instruction::Cx(ctx.pairs(rest)?),
            "TICK" => Instruction::Tick,
            "MEAS_Z" => {
                let mut targets = rest;
                let mut flip = None;
                if let Some(last) = rest.last() {
                    let (name, a) = opcode_args(last);
                    if name == "MEASFLIP" {
                        if a.len() != 1 {
                            return Err(ctx.err(last, "MEASFLIP takes one probability"));
                        }
                        flip = Some(ctx.prob(a[0])?);
                        targets = &rest[..rest.len() - 1];
                    }
                }
                Instruction::MeasZ {
                    targets: ctx.qubits(targets)?,
                    flip,
                }
            }
            "MPP" => Instruction::Mpp(
                rest.iter()
                    .map(|t| ctx.product(t))
                    .collect::<Result<_, _>>()?,
            ),
            "DEPOL1" => {
                expect_args(1)?;
                Instruction::Depol1 {
                    p: ctx.prob(args[0])?,
                    targets: ctx.qubits(rest)?,
                }
            }
            "DEPOL2" => {
                expect_args(1)?;
                Instruction::Depol2 {
                    p: ctx.prob(args[0])?,
                    pairs: ctx.pairs(rest)?,
                }
            }
            "DETECTOR" => {
                expect_args(4)?;
                Instruction::Detector(DetectorAnnotation {
                    t: ctx.int(args[0])?,
                    x: ctx.doubled(args[1])?,
                    y: ctx.doubled(args[2])?,
                    sector: ctx.int(args[3])?,
                    recs: ctx.recs(rest)?,
                })
            }
            "OBSERVABLE" => {
                expect_args(1)?;
                Instruction::Observable {
                    index: ctx.int(args[0])?,
                    recs: ctx.recs(rest)?,
                }
            }
            _ => return Err(ctx.err(toks[0], "unknown opcode")),
        };
        circuit.instructions.push(instr);
    }
    let declared: std::collections::HashSet<QubitId> = circuit.qubits.iter().map(|q| q.id).collect();
    for instr in &circuit.instructions {
        let mut used = instr.gate_qubits();
        match instr {
            Instruction::Depol1 { targets, .. } => used.extend(targets),
            Instruction::Depol2 { pairs, .. } => used.extend(pairs.iter().flat_map(|&(a, b)| [a, b])),
            _ => {}
        }
        if let Some(q) = used.iter().find(|q| !declared.contains(q)) {
            return Err(ParseError::new(0, q.to_string(), "qubit used but never declared"));
        }
    }
    circuit
        .validate_records()
        .map_err(|e| ParseError::new(0, "rec", e.to_string()))?;
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{
        apply_noise_model, build_deep_clifford_circuit, build_memory_circuit, build_tproxy_circuit,
        Basis, DeepCliffordParams, NoiseParams, TProxyParams,
    };

    #[test]
    fn round_trip_noisy_memory() {
        let c = build_memory_circuit(3, 3, Basis::X).unwrap();
        let c = apply_noise_model(&c, &NoiseParams::uniform(0.0013)).unwrap();
        let text = serialize_circuit(&c);
        assert_eq!(parse_circuit(&text).unwrap(), c);
    }

    #[test]
    fn round_trip_with_mpp() {
        let c = build_deep_clifford_circuit(&DeepCliffordParams::new(3, 1, 3, 7)).unwrap();
        let text = serialize_circuit(&c);
        assert!(text.contains("MPP "));
        assert_eq!(parse_circuit(&text).unwrap(), c);
        let (c, _) = build_tproxy_circuit(&TProxyParams::new(3, 2)).unwrap();
        assert_eq!(parse_circuit(&serialize_circuit(&c)).unwrap(), c);
    }

    #[test]
    fn awkward_probability_survives() {
        let p = 0.1 + 0.2;
        let c = Circuit {
            qubits: vec![QubitDecl {
                id: 0,
                coord: (1, 1),
                patch: 0,
                kind: QubitKind::Data,
            }],
            instructions: vec![Instruction::Depol1 {
                p,
                targets: vec![0],
            }],
        };
        let back = parse_circuit(&serialize_circuit(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn reports_line_and_token() {
        let text = "QUBIT 0 0.5 0.5 0 data\nH 0\nFOO 0\n";
        let e = parse_circuit(text).unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.token, "FOO");
        let e = parse_circuit("QUBIT 0 0.5 0.5 0 data\nMEAS_Z 0\nDETECTOR(0,0,0,0) rec[3]\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(e.token, "rec[3]");
        assert!(parse_circuit("QUBIT 0 0.5 0.5 0 data\nMEAS_Z 0\nOBSERVABLE(0) rec[-2]\n").is_err());
    }
}
