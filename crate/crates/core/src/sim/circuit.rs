//! Tick-annotated noisy Clifford circuit representation with a plain-text
//! format (one instruction per line, `#` comments, `TICK` separators).
//!
//! Measurement flips are carried on the measurement instruction itself; a
//! zero probability means a noiseless measurement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Instr {
    Tick,
    Reset(usize),
    H(usize),
    Cnot(usize, usize),
    Measure { q: usize, flip: f64 },
    MeasureReset { q: usize, flip: f64 },
    Dep1 { q: usize, p: f64 },
    Dep2 { a: usize, b: usize, p: f64 },
}

impl Instr {
    pub fn is_record(&self) -> bool {
        matches!(self, Instr::Measure { .. } | Instr::MeasureReset { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    pub instrs: Vec<Instr>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            instrs: Vec::new(),
        }
    }

    pub fn push(&mut self, instr: Instr) -> usize {
        self.instrs.push(instr);
        self.instrs.len() - 1
    }

    /// Record index produced by pushing a measurement now.
    pub fn next_record(&self) -> usize {
        self.instrs.iter().filter(|i| i.is_record()).count()
    }

    pub fn num_records(&self) -> usize {
        self.next_record()
    }

    pub fn emit(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# qubits {}\n", self.num_qubits));
        for instr in &self.instrs {
            match *instr {
                Instr::Tick => out.push_str("TICK\n"),
                Instr::Reset(q) => out.push_str(&format!("R {q}\n")),
                Instr::H(q) => out.push_str(&format!("H {q}\n")),
                Instr::Cnot(a, b) => out.push_str(&format!("CX {a} {b}\n")),
                Instr::Measure { q, flip } => {
                    if flip > 0.0 {
                        out.push_str(&format!("M {q} {flip}\n"))
                    } else {
                        out.push_str(&format!("M {q}\n"))
                    }
                }
                Instr::MeasureReset { q, flip } => {
                    if flip > 0.0 {
                        out.push_str(&format!("MR {q} {flip}\n"))
                    } else {
                        out.push_str(&format!("MR {q}\n"))
                    }
                }
                Instr::Dep1 { q, p } => out.push_str(&format!("DEP1 {q} {p}\n")),
                Instr::Dep2 { a, b, p } => out.push_str(&format!("DEP2 {a} {b} {p}\n")),
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Circuit> {
        let mut c = Circuit::new(0);
        let mut max_q = 0usize;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                if let Some(rest) = raw.trim().strip_prefix("# qubits ") {
                    if let Ok(n) = rest.trim().parse::<usize>() {
                        c.num_qubits = c.num_qubits.max(n);
                    }
                }
                continue;
            }
            let mut parts = line.split_whitespace();
            let op = parts.next().unwrap();
            let mut next_usize = |name: &str| -> Result<usize> {
                parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::CircuitParse {
                        line: lineno + 1,
                        msg: format!("expected {name}"),
                    })
            };
            let instr = match op {
                "TICK" => Instr::Tick,
                "R" => Instr::Reset(next_usize("qubit")?),
                "H" => Instr::H(next_usize("qubit")?),
                "CX" => Instr::Cnot(next_usize("control")?, next_usize("target")?),
                "M" | "MR" => {
                    let q = next_usize("qubit")?;
                    let flip = parts.next().map(|s| s.parse::<f64>()).transpose().map_err(
                        |_| Error::CircuitParse {
                            line: lineno + 1,
                            msg: "bad flip probability".into(),
                        },
                    )?;
                    let flip = flip.unwrap_or(0.0);
                    if op == "M" {
                        Instr::Measure { q, flip }
                    } else {
                        Instr::MeasureReset { q, flip }
                    }
                }
                "DEP1" => {
                    let q = next_usize("qubit")?;
                    let p: f64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::CircuitParse {
                            line: lineno + 1,
                            msg: "expected probability".into(),
                        })?;
                    Instr::Dep1 { q, p }
                }
                "DEP2" => {
                    let a = next_usize("qubit a")?;
                    let b = next_usize("qubit b")?;
                    let p: f64 = parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::CircuitParse {
                            line: lineno + 1,
                            msg: "expected probability".into(),
                        })?;
                    Instr::Dep2 { a, b, p }
                }
                other => {
                    return Err(Error::CircuitParse {
                        line: lineno + 1,
                        msg: format!("unknown instruction {other:?}"),
                    })
                }
            };
            for q in instr_qubits(&instr) {
                max_q = max_q.max(q + 1);
            }
            c.push(instr);
        }
        c.num_qubits = c.num_qubits.max(max_q);
        Ok(c)
    }
}

pub fn instr_qubits(instr: &Instr) -> Vec<usize> {
    match *instr {
        Instr::Tick => vec![],
        Instr::Reset(q) | Instr::H(q) => vec![q],
        Instr::Cnot(a, b) | Instr::Dep2 { a, b, .. } => vec![a, b],
        Instr::Measure { q, .. } | Instr::MeasureReset { q, .. } | Instr::Dep1 { q, .. } => vec![q],
    }
}
