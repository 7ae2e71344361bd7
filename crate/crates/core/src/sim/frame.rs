//! Pauli-frame sampling.
//!
//! A single noiseless reference run fixes every measurement record; each shot
//! then tracks only the Pauli deviation from that reference, which is cheap
//! (two bit-vectors) and exactly reproduces the full stabilizer dynamics for
//! Clifford circuits with Pauli noise. `sample_tableau` replays the same
//! fault coins through the full tableau simulator so the two samplers can be
//! compared record for record.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::circuit::{Circuit, Instr};
use super::tableau::{Outcome, Pauli, Tableau};

/// One noiseless pass fixing the record every shot deviates from.
/// Non-deterministic projections use coins from `seed`.
pub fn noiseless_reference(circuit: &Circuit, seed: u64) -> Vec<bool> {
    let mut t = Tableau::new(circuit.num_qubits);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut records = Vec::new();
    for instr in &circuit.instrs {
        match *instr {
            Instr::Tick | Instr::Dep1 { .. } | Instr::Dep2 { .. } => {}
            Instr::Reset(q) => t.reset(q, &mut rng),
            Instr::H(q) => t.h(q),
            Instr::Cnot(a, b) => t.cnot(a, b),
            Instr::Measure { q, .. } => {
                let (bit, _) = t.measure(q, Outcome::Random, &mut rng);
                records.push(bit);
            }
            Instr::MeasureReset { q, .. } => {
                let (bit, _) = t.measure(q, Outcome::Random, &mut rng);
                if bit {
                    t.pauli(q, Pauli::X);
                }
                records.push(bit);
            }
        }
    }
    records
}

fn draw_flip<R: Rng>(rng: &mut R, flip: f64) -> bool {
    flip > 0.0 && rng.gen::<f64>() < flip
}

fn draw_dep1<R: Rng>(rng: &mut R, p: f64) -> Option<Pauli> {
    if rng.gen::<f64>() < p {
        Some(match rng.gen_range(0..3u8) {
            0 => Pauli::X,
            1 => Pauli::Y,
            _ => Pauli::Z,
        })
    } else {
        None
    }
}

fn two_qubit_pauli(idx: u8) -> (Option<Pauli>, Option<Pauli>) {
    // idx in 1..16 over {I,X,Y,Z}^2 minus II.
    let decode = |v: u8| match v {
        0 => None,
        1 => Some(Pauli::X),
        2 => Some(Pauli::Y),
        _ => Some(Pauli::Z),
    };
    (decode(idx / 4), decode(idx % 4))
}

fn draw_dep2<R: Rng>(rng: &mut R, p: f64) -> Option<(Option<Pauli>, Option<Pauli>)> {
    if rng.gen::<f64>() < p {
        Some(two_qubit_pauli(rng.gen_range(1..16u8)))
    } else {
        None
    }
}

#[derive(Debug, Clone)]
pub struct Frame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl Frame {
    pub fn new(n: usize) -> Self {
        Frame {
            x: vec![false; n],
            z: vec![false; n],
        }
    }

    pub fn apply(&mut self, q: usize, p: Pauli) {
        match p {
            Pauli::X => self.x[q] ^= true,
            Pauli::Z => self.z[q] ^= true,
            Pauli::Y => {
                self.x[q] ^= true;
                self.z[q] ^= true;
            }
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        self.x[t] ^= self.x[c];
        self.z[c] ^= self.z[t];
    }

    pub fn h(&mut self, q: usize) {
        std::mem::swap(&mut self.x[q], &mut self.z[q]);
    }

    pub fn clear(&mut self, q: usize) {
        self.x[q] = false;
        self.z[q] = false;
    }
}

/// One noisy shot against a fixed reference. Fault coins and collapse coins
/// come from separate streams so fault injection order stays comparable
/// across samplers.
pub fn sample_frame<R: Rng, C: Rng>(
    circuit: &Circuit,
    reference: &[bool],
    fault_rng: &mut R,
    collapse_rng: &mut C,
) -> Vec<bool> {
    let mut f = Frame::new(circuit.num_qubits);
    let mut records = Vec::with_capacity(reference.len());
    for instr in &circuit.instrs {
        match *instr {
            Instr::Tick => {}
            Instr::Reset(q) => f.clear(q),
            Instr::H(q) => f.h(q),
            Instr::Cnot(a, b) => f.cnot(a, b),
            Instr::Measure { q, flip } => {
                let flipped = draw_flip(fault_rng, flip);
                records.push(reference[records.len()] ^ f.x[q] ^ flipped);
                // Collapse scrambles the Z component of the frame.
                f.z[q] ^= collapse_rng.gen::<bool>();
            }
            Instr::MeasureReset { q, flip } => {
                let flipped = draw_flip(fault_rng, flip);
                records.push(reference[records.len()] ^ f.x[q] ^ flipped);
                f.clear(q);
            }
            Instr::Dep1 { q, p } => {
                if let Some(e) = draw_dep1(fault_rng, p) {
                    f.apply(q, e);
                }
            }
            Instr::Dep2 { a, b, p } => {
                if let Some((ea, eb)) = draw_dep2(fault_rng, p) {
                    if let Some(e) = ea {
                        f.apply(a, e);
                    }
                    if let Some(e) = eb {
                        f.apply(b, e);
                    }
                }
            }
        }
    }
    records
}

/// How `sample_tableau` decides non-deterministic outcomes.
pub enum TableauOutcomes<'a> {
    Free(u64),
    /// Pin each record to this pre-recorded shot (post-flip values).
    Forced(&'a [bool]),
}

/// Full tableau execution of the same noisy shot: identical fault-coin
/// stream as `sample_frame`, outcomes either free or forced to a frame shot.
pub fn sample_tableau<R: Rng>(
    circuit: &Circuit,
    outcomes: TableauOutcomes<'_>,
    fault_rng: &mut R,
) -> Vec<bool> {
    let mut t = Tableau::new(circuit.num_qubits);
    let mut free_rng = ChaCha12Rng::seed_from_u64(match outcomes {
        TableauOutcomes::Free(seed) => seed,
        TableauOutcomes::Forced(_) => 0,
    });
    let mut records: Vec<bool> = Vec::new();
    for instr in &circuit.instrs {
        match *instr {
            Instr::Tick => {}
            Instr::Reset(q) => t.reset(q, &mut free_rng),
            Instr::H(q) => t.h(q),
            Instr::Cnot(a, b) => t.cnot(a, b),
            Instr::Measure { q, flip } | Instr::MeasureReset { q, flip } => {
                let flipped = draw_flip(fault_rng, flip);
                let mode = match outcomes {
                    TableauOutcomes::Free(_) => Outcome::Random,
                    // Forced records are post-flip; undo the flip to pin the
                    // underlying quantum outcome.
                    TableauOutcomes::Forced(bits) => Outcome::Forced(bits[records.len()] ^ flipped),
                };
                let (bit, _det) = t.measure(q, mode, &mut free_rng);
                if matches!(*instr, Instr::MeasureReset { .. }) && bit {
                    t.pauli(q, Pauli::X);
                }
                records.push(bit ^ flipped);
            }
            Instr::Dep1 { q, p } => {
                if let Some(e) = draw_dep1(fault_rng, p) {
                    t.pauli(q, e);
                }
            }
            Instr::Dep2 { a, b, p } => {
                if let Some((ea, eb)) = draw_dep2(fault_rng, p) {
                    if let Some(e) = ea {
                        t.pauli(a, e);
                    }
                    if let Some(e) = eb {
                        t.pauli(b, e);
                    }
                }
            }
        }
    }
    records
}

/// Deterministically propagate a single injected Pauli fault and report which
/// records flip. `after` is the instruction index the fault lands after.
/// Valid because record flips depend only on the X component of the frame and
/// measured qubits in our circuits are reset before reuse.
pub fn flipped_records(circuit: &Circuit, after: usize, fault: &[(usize, Pauli)]) -> Vec<usize> {
    let mut f = Frame::new(circuit.num_qubits);
    let mut rec = circuit.instrs[..=after]
        .iter()
        .filter(|i| i.is_record())
        .count();
    for &(q, p) in fault {
        f.apply(q, p);
    }
    let mut out = Vec::new();
    for instr in &circuit.instrs[after + 1..] {
        match *instr {
            Instr::Tick | Instr::Dep1 { .. } | Instr::Dep2 { .. } => {}
            Instr::Reset(q) => f.clear(q),
            Instr::H(q) => f.h(q),
            Instr::Cnot(a, b) => f.cnot(a, b),
            Instr::Measure { q, .. } => {
                if f.x[q] {
                    out.push(rec);
                }
                rec += 1;
            }
            Instr::MeasureReset { q, .. } => {
                if f.x[q] {
                    out.push(rec);
                }
                rec += 1;
                f.clear(q);
            }
        }
    }
    out
}
