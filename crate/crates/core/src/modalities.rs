//! Measurement-transfer modalities: the schedulable readout units.
//!
//! Each modality resolves the Z-basis readout of one data qubit (or one
//! groupable boundary pair) by physically measuring some qubit, possibly
//! after a shallow CNOT fragment that relocates the outcome. Helpers are
//! reset up front, so the measure-reset correction of the transfer operator
//! drops out and the published two-qubit gate counts apply:
//! D-M 0, MR-M 1, MR-PM 2, DR-PM 3, DR-M 4.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::noise::DeviceProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModalityKind {
    /// Direct Z-basis measurement of the target.
    Dm,
    /// Transfer onto an adjacent measure qubit.
    Mrm,
    /// Transfer onto an adjacent data qubit through the interleaved measure qubit.
    Drm,
    /// Joint pair parity onto the shared measure qubit.
    Mrpm,
    /// Joint pair parity onto one pair member.
    Drpm,
}

impl ModalityKind {
    pub fn is_parity(self) -> bool {
        matches!(self, ModalityKind::Mrpm | ModalityKind::Drpm)
    }

    pub fn label(self) -> &'static str {
        match self {
            ModalityKind::Dm => "D-M",
            ModalityKind::Mrm => "MR-M",
            ModalityKind::Drm => "DR-M",
            ModalityKind::Mrpm => "MR-PM",
            ModalityKind::Drpm => "DR-PM",
        }
    }
}

/// Two-qubit gate count of a modality's fragment.
pub fn gate_count(kind: ModalityKind) -> usize {
    match kind {
        ModalityKind::Dm => 0,
        ModalityKind::Mrm => 1,
        ModalityKind::Mrpm => 2,
        ModalityKind::Drpm => 3,
        ModalityKind::Drm => 4,
    }
}

/// One schedulable readout unit: a lone data qubit or a groupable pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Unit {
    Single(usize),
    Pair(usize, usize),
}

impl Unit {
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            Unit::Single(q) => vec![q],
            Unit::Pair(a, b) => vec![a, b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModalityInstance {
    pub kind: ModalityKind,
    /// Qubits whose readout this instance resolves (1 or 2).
    pub targets: Vec<usize>,
    /// The qubit physically measured.
    pub measured: usize,
    /// All qubits the fragment touches, sorted.
    pub participants: Vec<usize>,
    pub gate_count: usize,
}

impl ModalityInstance {
    fn new(kind: ModalityKind, targets: Vec<usize>, measured: usize, mut extra: Vec<usize>) -> Self {
        let mut participants = targets.clone();
        participants.append(&mut extra);
        participants.sort_unstable();
        participants.dedup();
        ModalityInstance {
            gate_count: gate_count(kind),
            kind,
            targets,
            measured,
            participants,
        }
    }

    /// Data-qubit participants that are not targets. These must have fired
    /// their own readout (and thus be resettable) before this instance runs.
    pub fn data_helpers<'a>(&'a self, lat: &'a Lattice) -> impl Iterator<Item = usize> + 'a {
        self.participants
            .iter()
            .copied()
            .filter(move |q| lat.is_data(*q) && !self.targets.contains(q))
    }

    pub fn unit(&self) -> Unit {
        match self.targets.as_slice() {
            [q] => Unit::Single(*q),
            [a, b] => Unit::Pair(*a.min(b), *a.max(b)),
            _ => unreachable!("targets are 1 or 2 qubits"),
        }
    }
}

/// All legal modality instances for a readout unit, deterministic order.
pub fn enumerate_modalities(lat: &Lattice, unit: Unit) -> Result<Vec<ModalityInstance>> {
    let mut out = Vec::new();
    match unit {
        Unit::Single(d) => {
            if !lat.is_data(d) {
                return Err(Error::UnknownQubit(d));
            }
            out.push(ModalityInstance::new(ModalityKind::Dm, vec![d], d, vec![]));
            for &m in lat.neighbors(d)? {
                out.push(ModalityInstance::new(
                    ModalityKind::Mrm,
                    vec![d],
                    m,
                    vec![m],
                ));
            }
            for &m in lat.neighbors(d)? {
                for &d2 in lat.neighbors(m)? {
                    if d2 != d {
                        out.push(ModalityInstance::new(
                            ModalityKind::Drm,
                            vec![d],
                            d2,
                            vec![m, d2],
                        ));
                    }
                }
            }
        }
        Unit::Pair(a, b) => {
            if !lat.is_groupable(a, b) {
                return Err(Error::NotGroupable(a, b));
            }
            let m = lat
                .shared_measure(a, b)
                .expect("groupable pair has a shared measure");
            out.push(ModalityInstance::new(
                ModalityKind::Mrpm,
                vec![a, b],
                m,
                vec![m],
            ));
            for sink in [a.min(b), a.max(b)] {
                out.push(ModalityInstance::new(
                    ModalityKind::Drpm,
                    vec![a, b],
                    sink,
                    vec![m],
                ));
            }
        }
    }
    Ok(out)
}

/// Cost of an independent (single-target) modality: MER of the measured
/// qubit plus the gate-count term.
pub fn cost_ind(inst: &ModalityInstance, p: &DeviceProfile) -> Result<f64> {
    if inst.kind.is_parity() {
        return Err(Error::InvalidModality(format!(
            "cost_ind on parity kind {:?}",
            inst.kind
        )));
    }
    Ok(p.mer[inst.measured] + inst.gate_count as f64 * p.ger)
}

/// Cost of a joint pair modality. DR-PM books the better pair member's MER
/// regardless of which member is the sink.
pub fn cost_joint(inst: &ModalityInstance, p: &DeviceProfile) -> Result<f64> {
    match inst.kind {
        ModalityKind::Drpm => {
            let m1 = p.mer[inst.targets[0]];
            let m2 = p.mer[inst.targets[1]];
            Ok(m1.min(m2) + inst.gate_count as f64 * p.ger)
        }
        ModalityKind::Mrpm => Ok(p.mer[inst.measured] + inst.gate_count as f64 * p.ger),
        _ => Err(Error::InvalidModality(format!(
            "cost_joint on single kind {:?}",
            inst.kind
        ))),
    }
}

/// Cost of any instance under its own metric.
pub fn cost(inst: &ModalityInstance, p: &DeviceProfile) -> f64 {
    if inst.kind.is_parity() {
        cost_joint(inst, p).expect("parity kind")
    } else {
        cost_ind(inst, p).expect("single kind")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FragOp {
    Reset(usize),
    Cnot(usize, usize),
    Measure(usize),
    MeasureReset(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassicalMap {
    /// The raw bit is the target's readout bit.
    Identity,
    /// The raw bit is the pair's parity bit.
    PairParity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitFragment {
    pub ops: Vec<FragOp>,
    pub classical_map: ClassicalMap,
}

impl CircuitFragment {
    pub fn cnot_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| matches!(op, FragOp::Cnot(..)))
            .count()
    }

    /// One instruction per line: `R q`, `CX a b`, `M q`, `MR q`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for op in &self.ops {
            match op {
                FragOp::Reset(q) => out.push_str(&format!("R {q}\n")),
                FragOp::Cnot(a, b) => out.push_str(&format!("CX {a} {b}\n")),
                FragOp::Measure(q) => out.push_str(&format!("M {q}\n")),
                FragOp::MeasureReset(q) => out.push_str(&format!("MR {q}\n")),
            }
        }
        out
    }
}

fn require_edge(lat: &Lattice, a: usize, b: usize) -> Result<()> {
    if lat.neighbors(a)?.contains(&b) {
        Ok(())
    } else {
        Err(Error::InvalidModality(format!(
            "CNOT ({a}, {b}) is not a lattice edge"
        )))
    }
}

/// Build the circuit fragment for a modality instance. Non-target
/// participants are reset up front; the CNOT count equals the kind's table
/// value and every CNOT respects the lattice edge set.
pub fn build_fragment(inst: &ModalityInstance, lat: &Lattice) -> Result<CircuitFragment> {
    let mut ops = Vec::new();
    for &q in &inst.participants {
        if !inst.targets.contains(&q) {
            ops.push(FragOp::Reset(q));
        }
    }
    let classical_map = match inst.kind {
        ModalityKind::Dm => {
            ops.push(FragOp::Measure(inst.measured));
            ClassicalMap::Identity
        }
        ModalityKind::Mrm => {
            let d = inst.targets[0];
            let m = inst.measured;
            require_edge(lat, d, m)?;
            ops.push(FragOp::Cnot(d, m));
            ops.push(FragOp::Measure(m));
            ClassicalMap::Identity
        }
        ModalityKind::Drm => {
            // Transfer d -> d2 through the interleaved measure qubit m:
            // copy, forward, uncompute, and the folded measure-reset
            // correction (a fourth CNOT from the emptied helper).
            let d = inst.targets[0];
            let d2 = inst.measured;
            let m = *inst
                .participants
                .iter()
                .find(|&&q| !lat.is_data(q))
                .ok_or_else(|| Error::InvalidModality("DR-M without measure helper".into()))?;
            require_edge(lat, d, m)?;
            require_edge(lat, d2, m)?;
            ops.push(FragOp::Cnot(d, m));
            ops.push(FragOp::Cnot(m, d2));
            ops.push(FragOp::Cnot(d, m));
            ops.push(FragOp::Cnot(m, d2));
            ops.push(FragOp::Measure(d2));
            ClassicalMap::Identity
        }
        ModalityKind::Mrpm => {
            let m = inst.measured;
            for &t in &inst.targets {
                require_edge(lat, t, m)?;
            }
            for &t in &inst.targets {
                ops.push(FragOp::Cnot(t, m));
            }
            ops.push(FragOp::Measure(m));
            ClassicalMap::PairParity
        }
        ModalityKind::Drpm => {
            let sink = inst.measured;
            let other = *inst
                .targets
                .iter()
                .find(|&&t| t != sink)
                .expect("pair has two targets");
            let m = *inst
                .participants
                .iter()
                .find(|&&q| !lat.is_data(q))
                .ok_or_else(|| Error::InvalidModality("DR-PM without measure helper".into()))?;
            require_edge(lat, sink, m)?;
            require_edge(lat, other, m)?;
            ops.push(FragOp::Cnot(other, m));
            ops.push(FragOp::Cnot(m, sink));
            ops.push(FragOp::Cnot(other, m));
            ops.push(FragOp::Measure(sink));
            ClassicalMap::PairParity
        }
    };
    let frag = CircuitFragment { ops, classical_map };
    debug_assert_eq!(frag.cnot_count(), inst.gate_count);
    Ok(frag)
}

/// Fold the parity of an ordered qubit chain onto `sink` (a chain member),
/// routing each link through a shared measure qubit when the two chain
/// members are not edge-adjacent. The sink's Z-basis outcome equals the
/// chain's joint parity bit.
pub fn parity_chain(lat: &Lattice, qubits: &[usize], sink: usize) -> Result<CircuitFragment> {
    if qubits.len() < 2 {
        return Err(Error::InvalidModality("parity chain needs n >= 2".into()));
    }
    let sink_pos = qubits
        .iter()
        .position(|&q| q == sink)
        .ok_or_else(|| Error::InvalidModality("sink not in chain".into()))?;
    let mut ops = Vec::new();
    let mut helpers = Vec::new();
    // Fold both sides of the chain toward the sink.
    let mut fold = |ops: &mut Vec<FragOp>, from: usize, to: usize| -> Result<()> {
        if lat.neighbors(from)?.contains(&to) {
            ops.push(FragOp::Cnot(from, to));
            return Ok(());
        }
        let m = lat.shared_measure(from, to).ok_or_else(|| {
            Error::InvalidModality(format!("no routing between {from} and {to}"))
        })?;
        helpers.push(m);
        ops.push(FragOp::Cnot(from, m));
        ops.push(FragOp::Cnot(m, to));
        ops.push(FragOp::Cnot(from, m));
        Ok(())
    };
    let mut body = Vec::new();
    for i in (sink_pos + 1..qubits.len()).rev() {
        fold(&mut body, qubits[i], qubits[i - 1])?;
    }
    for i in 0..sink_pos {
        fold(&mut body, qubits[i], qubits[i + 1])?;
    }
    helpers.sort_unstable();
    helpers.dedup();
    for m in helpers {
        ops.push(FragOp::Reset(m));
    }
    ops.extend(body);
    ops.push(FragOp::Measure(sink));
    Ok(CircuitFragment {
        ops,
        classical_map: ClassicalMap::PairParity,
    })
}
