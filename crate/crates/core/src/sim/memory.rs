//! Memory-experiment circuit: prepare |0..0>, run `r` noisy syndrome rounds,
//! then read out every data qubit through its scheduled modality fragment.
//!
//! Round layout is four CNOT layers. X checks couple in the order NW, NE,
//! SW, SE (measure is control); Z checks in NW, SW, NE, SE (data is
//! control). The interleaving keeps shared data/measure pairs in the same
//! layer order for both families and gives each data qubit at most one gate
//! per layer, and the X-family hook errors it admits are horizontal, i.e.
//! parallel to the horizontal logical Z and therefore harmless to it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Role};
use crate::modalities::{build_fragment, ClassicalMap, FragOp, ModalityInstance};
use crate::noise::{idle_depolarize_prob, DeviceProfile};
use crate::scheduler::Schedule;

use super::circuit::{Circuit, Instr};

const X_ORDER: [(i32, i32); 4] = [(-1, -1), (-1, 1), (1, -1), (1, 1)];
const Z_ORDER: [(i32, i32); 4] = [(-1, -1), (1, -1), (-1, 1), (1, 1)];

/// Where each data qubit's readout value lives in the record stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadoutBit {
    Single(usize),
    /// Record index of a joint parity bit shared with the paired qubit.
    Joint(usize),
}

#[derive(Debug, Clone)]
pub struct RecordLayout {
    pub rounds: usize,
    /// Per layer (index 0 is the noiseless preparation round, then rounds
    /// 1..=r): measure qubit id -> record index.
    pub check_records: Vec<BTreeMap<usize, usize>>,
    /// One entry per scheduled instance: (instance, terminal record, tick).
    pub readout: Vec<(ModalityInstance, usize, usize)>,
    /// Data qubit id -> where its readout bit lives.
    pub data_bits: BTreeMap<usize, ReadoutBit>,
}

#[derive(Debug, Clone)]
pub struct MemoryCircuit {
    pub circuit: Circuit,
    pub layout: RecordLayout,
}

fn coord_map(lat: &Lattice) -> BTreeMap<(i32, i32), usize> {
    lat.qubits.iter().map(|q| (q.coord, q.index)).collect()
}

fn emit_round(
    c: &mut Circuit,
    lat: &Lattice,
    coords: &BTreeMap<(i32, i32), usize>,
    profile: &DeviceProfile,
    noisy: bool,
) -> BTreeMap<usize, usize> {
    let x_measures: Vec<usize> = lat
        .measures
        .iter()
        .copied()
        .filter(|&m| lat.qubits[m].role == Role::MeasureX)
        .collect();
    for &m in &x_measures {
        c.push(Instr::H(m));
    }
    for layer in 0..4 {
        for &m in &lat.measures {
            let mc = lat.qubits[m].coord;
            let is_x = lat.qubits[m].role == Role::MeasureX;
            let delta = if is_x { X_ORDER[layer] } else { Z_ORDER[layer] };
            let Some(&d) = coords.get(&(mc.0 + delta.0, mc.1 + delta.1)) else {
                continue;
            };
            debug_assert!(lat.is_data(d));
            let (ctl, tgt) = if is_x { (m, d) } else { (d, m) };
            c.push(Instr::Cnot(ctl, tgt));
            if noisy {
                c.push(Instr::Dep2 {
                    a: ctl,
                    b: tgt,
                    p: profile.ger,
                });
            }
        }
    }
    for &m in &x_measures {
        c.push(Instr::H(m));
    }
    let mut records = BTreeMap::new();
    for &m in &lat.measures {
        let flip = if noisy { profile.mer[m] } else { 0.0 };
        records.insert(m, c.next_record());
        c.push(Instr::MeasureReset { q: m, flip });
    }
    if noisy && profile.round_depol > 0.0 {
        for &d in &lat.data {
            c.push(Instr::Dep1 {
                q: d,
                p: profile.round_depol,
            });
        }
    }
    c.push(Instr::Tick);
    records
}

/// Assemble the full memory circuit for a schedule.
pub fn build_memory_circuit(
    lat: &Lattice,
    sched: &Schedule,
    profile: &DeviceProfile,
    rounds: usize,
    beta: f64,
) -> Result<MemoryCircuit> {
    if rounds == 0 {
        return Err(Error::Config("rounds must be at least 1".into()));
    }
    sched.validate(lat)?;
    profile.validate(lat)?;
    let coords = coord_map(lat);
    let mut c = Circuit::new(lat.num_qubits());
    for q in 0..lat.num_qubits() {
        c.push(Instr::Reset(q));
    }
    c.push(Instr::Tick);

    let mut check_records = Vec::with_capacity(rounds + 1);
    check_records.push(emit_round(&mut c, lat, &coords, profile, false));
    for _ in 0..rounds {
        check_records.push(emit_round(&mut c, lat, &coords, profile, true));
    }

    let idle_p = idle_depolarize_prob(profile, 1, beta);
    let mut readout = Vec::new();
    let mut data_bits = BTreeMap::new();
    for (t, tick) in sched.ticks.iter().enumerate() {
        for inst in tick {
            let frag = build_fragment(inst, lat)?;
            let mut terminal = None;
            for op in &frag.ops {
                match *op {
                    FragOp::Reset(q) => {
                        c.push(Instr::Reset(q));
                    }
                    FragOp::Cnot(a, b) => {
                        c.push(Instr::Cnot(a, b));
                        c.push(Instr::Dep2 {
                            a,
                            b,
                            p: profile.ger,
                        });
                    }
                    FragOp::Measure(q) | FragOp::MeasureReset(q) => {
                        debug_assert_eq!(q, inst.measured);
                        debug_assert!(terminal.is_none(), "one terminal measurement per fragment");
                        terminal = Some(c.next_record());
                        let instr = if matches!(op, FragOp::Measure(_)) {
                            Instr::Measure {
                                q,
                                flip: profile.mer[q],
                            }
                        } else {
                            Instr::MeasureReset {
                                q,
                                flip: profile.mer[q],
                            }
                        };
                        c.push(instr);
                    }
                }
            }
            let rec = terminal.ok_or_else(|| {
                Error::InvalidModality("fragment lacks a terminal measurement".into())
            })?;
            match frag.classical_map {
                ClassicalMap::Identity => {
                    data_bits.insert(inst.targets[0], ReadoutBit::Single(rec));
                }
                ClassicalMap::PairParity => {
                    for &q in &inst.targets {
                        data_bits.insert(q, ReadoutBit::Joint(rec));
                    }
                }
            }
            readout.push((inst.clone(), rec, t));
        }
        if idle_p > 0.0 {
            for (&q, &w) in &sched.wait {
                if w > t {
                    c.push(Instr::Dep1 { q, p: idle_p });
                }
            }
        }
        c.push(Instr::Tick);
    }

    for &d in &lat.data {
        if !data_bits.contains_key(&d) {
            return Err(Error::IncompleteAssignment(format!(
                "data qubit {d} has no readout bit"
            )));
        }
    }

    Ok(MemoryCircuit {
        circuit: c,
        layout: RecordLayout {
            rounds,
            check_records,
            readout,
            data_bits,
        },
    })
}

impl RecordLayout {
    /// Record indices whose XOR reconstructs the parity of a data-qubit set
    /// from the terminal readout. Joint bits enter once for each covered
    /// pair; every pair member must lie inside `support`.
    pub fn reconstruction(&self, support: &[usize]) -> Result<Vec<usize>> {
        let mut recs = Vec::new();
        for &q in support {
            match self.data_bits.get(&q) {
                None => return Err(Error::UnknownQubit(q)),
                Some(ReadoutBit::Single(r)) => recs.push(*r),
                Some(ReadoutBit::Joint(r)) => {
                    if !recs.contains(r) {
                        recs.push(*r);
                    }
                }
            }
        }
        Ok(recs)
    }

    pub fn num_records(&self) -> usize {
        self.check_records.iter().map(|m| m.len()).sum::<usize>() + self.readout.len()
    }
}
