//! Detector definitions and the decoding graph.
//!
//! Detectors compare each check's record against the previous layer
//! (preparation layer included); final detectors compare the last Z-check
//! round against the parity reconstructed from the terminal data readout.
//! Every elementary fault in the circuit is enumerated once, propagated
//! deterministically, and its flipped-detector signature is turned into a
//! graph edge (detector-detector or detector-boundary). Signatures touching
//! both check families factor into one component per family; rare residual
//! multi-detector components are decomposed over already-seen edges.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::lattice::{CheckType, Lattice};
use crate::noise::DeviceProfile;
use crate::scheduler::Schedule;

use super::circuit::{Circuit, Instr};
use super::frame::flipped_records;
use super::memory::{build_memory_circuit, MemoryCircuit};
use super::tableau::Pauli;

#[derive(Debug, Clone)]
pub struct Detector {
    /// Records whose XOR is the detector bit.
    pub records: Vec<usize>,
    pub family: CheckType,
    pub measure: usize,
    /// Layer compared against its predecessor; `rounds + 1` marks a final
    /// readout detector.
    pub round: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    /// `None` is the boundary.
    pub b: Option<usize>,
    pub prob: f64,
    pub weight: f64,
    pub obs: bool,
}

#[derive(Debug, Clone)]
pub struct DetectorGraph {
    pub detectors: Vec<Detector>,
    pub edges: Vec<Edge>,
    /// Records whose XOR is the logical observable.
    pub observable: Vec<usize>,
    pub num_records: usize,
}

impl DetectorGraph {
    pub fn syndrome(&self, records: &[bool]) -> Vec<bool> {
        self.detectors
            .iter()
            .map(|d| d.records.iter().fold(false, |acc, &r| acc ^ records[r]))
            .collect()
    }

    pub fn observable_bit(&self, records: &[bool]) -> bool {
        self.observable.iter().fold(false, |acc, &r| acc ^ records[r])
    }
}

/// Define all detectors and the observable for a memory circuit.
pub fn build_detectors(lat: &Lattice, mc: &MemoryCircuit) -> Result<(Vec<Detector>, Vec<usize>)> {
    let layout = &mc.layout;
    let mut detectors = Vec::new();
    for t in 1..=layout.rounds {
        for (&m, &rec) in &layout.check_records[t] {
            let prev = layout.check_records[t - 1][&m];
            let family = lat
                .support_of(m)
                .map(|s| s.pauli)
                .ok_or(Error::UnknownQubit(m))?;
            detectors.push(Detector {
                records: vec![prev, rec],
                family,
                measure: m,
                round: t,
            });
        }
    }
    for sup in lat.stabilizer_supports() {
        if sup.pauli != lat.readout_check_type {
            continue;
        }
        let mut records = vec![layout.check_records[layout.rounds][&sup.measure]];
        records.extend(layout.reconstruction(&sup.data_support)?);
        detectors.push(Detector {
            records,
            family: sup.pauli,
            measure: sup.measure,
            round: layout.rounds + 1,
        });
    }
    let observable = layout.reconstruction(&lat.logical_z)?;
    Ok((detectors, observable))
}

/// (sorted detector ids, observable flipped) for one injected fault.
type Signature = (Vec<usize>, bool);

fn fault_signature(
    circuit: &Circuit,
    after: usize,
    fault: &[(usize, Pauli)],
    det_of_record: &HashMap<usize, Vec<usize>>,
    obs_records: &HashMap<usize, ()>,
) -> Signature {
    let flips = flipped_records(circuit, after, fault);
    signature_of_flips(&flips, det_of_record, obs_records)
}

fn signature_of_flips(
    flips: &[usize],
    det_of_record: &HashMap<usize, Vec<usize>>,
    obs_records: &HashMap<usize, ()>,
) -> Signature {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut obs = false;
    for r in flips {
        if let Some(dets) = det_of_record.get(r) {
            for &d in dets {
                *counts.entry(d).or_insert(0) += 1;
            }
        }
        obs ^= obs_records.contains_key(r);
    }
    let dets = counts
        .into_iter()
        .filter(|(_, c)| c % 2 == 1)
        .map(|(d, _)| d)
        .collect();
    (dets, obs)
}

fn xor_prob(p: f64, q: f64) -> f64 {
    p + q - 2.0 * p * q
}

const ALL_PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

fn two_qubit_branches() -> Vec<(Option<Pauli>, Option<Pauli>)> {
    let opts = [None, Some(Pauli::X), Some(Pauli::Y), Some(Pauli::Z)];
    let mut out = Vec::with_capacity(15);
    for &a in &opts {
        for &b in &opts {
            if a.is_some() || b.is_some() {
                out.push((a, b));
            }
        }
    }
    out
}

/// Build the decoding graph for a schedule by exhaustive single-fault
/// enumeration over the memory circuit.
pub fn build_detector_graph(
    lat: &Lattice,
    sched: &Schedule,
    profile: &DeviceProfile,
    rounds: usize,
    beta: f64,
) -> Result<DetectorGraph> {
    let mc = build_memory_circuit(lat, sched, profile, rounds, beta)?;
    build_detector_graph_for(lat, &mc)
}

pub fn build_detector_graph_for(lat: &Lattice, mc: &MemoryCircuit) -> Result<DetectorGraph> {
    let (detectors, observable) = build_detectors(lat, mc)?;
    let circuit = &mc.circuit;

    let mut det_of_record: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, det) in detectors.iter().enumerate() {
        for &r in &det.records {
            det_of_record.entry(r).or_default().push(i);
        }
    }
    let obs_records: HashMap<usize, ()> = observable.iter().map(|&r| (r, ())).collect();

    // Accumulate signature -> probability over all elementary faults.
    let mut sigs: BTreeMap<Signature, f64> = BTreeMap::new();
    let mut add = |sig: Signature, p: f64| {
        if sig.0.is_empty() && !sig.1 {
            return;
        }
        let slot = sigs.entry(sig).or_insert(0.0);
        *slot = xor_prob(*slot, p);
    };
    let mut rec = 0usize;
    for (i, instr) in circuit.instrs.iter().enumerate() {
        match *instr {
            Instr::Dep1 { q, p } if p > 0.0 => {
                for pa in ALL_PAULIS {
                    add(
                        fault_signature(circuit, i, &[(q, pa)], &det_of_record, &obs_records),
                        p / 3.0,
                    );
                }
            }
            Instr::Dep2 { a, b, p } if p > 0.0 => {
                for (ea, eb) in two_qubit_branches() {
                    let mut fault = Vec::new();
                    if let Some(e) = ea {
                        fault.push((a, e));
                    }
                    if let Some(e) = eb {
                        fault.push((b, e));
                    }
                    add(
                        fault_signature(circuit, i, &fault, &det_of_record, &obs_records),
                        p / 15.0,
                    );
                }
            }
            _ => {}
        }
        if let Instr::Measure { flip, .. } | Instr::MeasureReset { flip, .. } = *instr {
            if flip > 0.0 {
                add(
                    signature_of_flips(&[rec], &det_of_record, &obs_records),
                    flip,
                );
            }
            rec += 1;
        }
    }

    // Split mixed-family signatures; X-family components never carry the
    // observable (it is reconstructed purely from Z-family data).
    let mut components: BTreeMap<Signature, f64> = BTreeMap::new();
    for ((dets, obs), p) in sigs {
        let (z, x): (Vec<usize>, Vec<usize>) = dets
            .into_iter()
            .partition(|&d| detectors[d].family == CheckType::Z);
        if z.is_empty() && obs {
            return Err(Error::Config(
                "single fault flips the observable without any Z-family detector".into(),
            ));
        }
        for (part, part_obs) in [(z, obs), (x, false)] {
            if part.is_empty() && !part_obs {
                continue;
            }
            let slot = components.entry((part, part_obs)).or_insert(0.0);
            *slot = xor_prob(*slot, p);
        }
    }

    // Graph edges: components with at most two detectors map directly;
    // larger ones must decompose into a disjoint union of direct edges with
    // matching observable parity.
    let mut edge_probs: BTreeMap<(usize, Option<usize>, bool), f64> = BTreeMap::new();
    let mut leftovers: Vec<(Signature, f64)> = Vec::new();
    for ((dets, obs), p) in components {
        match dets.as_slice() {
            [a] => {
                let slot = edge_probs.entry((*a, None, obs)).or_insert(0.0);
                *slot = xor_prob(*slot, p);
            }
            [a, b] => {
                let slot = edge_probs.entry((*a, Some(*b), obs)).or_insert(0.0);
                *slot = xor_prob(*slot, p);
            }
            _ => leftovers.push(((dets, obs), p)),
        }
    }
    for ((dets, obs), p) in leftovers {
        let parts = decompose(&dets, obs, &edge_probs).ok_or_else(|| {
            Error::Config(format!(
                "fault signature over detectors {dets:?} does not decompose into graph edges"
            ))
        })?;
        for key in parts {
            let slot = edge_probs.entry(key).or_insert(0.0);
            *slot = xor_prob(*slot, p);
        }
    }

    // Same endpoint pair with both observable labels cannot be told apart by
    // a matching decoder; keep the likelier label.
    let mut best: BTreeMap<(usize, Option<usize>), (f64, bool)> = BTreeMap::new();
    for ((a, b, obs), p) in edge_probs {
        let e = best.entry((a, b)).or_insert((0.0, obs));
        if obs == e.1 {
            e.0 = xor_prob(e.0, p);
        } else if p > e.0 {
            *e = (p, obs);
        }
    }
    let mut edges: Vec<Edge> = best
        .into_iter()
        .map(|((a, b), (p, obs))| Edge {
            a,
            b,
            prob: p,
            weight: -p.min(0.5).max(1e-15).ln(),
            obs,
        })
        .collect();
    edges.sort_by(|l, r| (l.a, l.b).cmp(&(r.a, r.b)));

    Ok(DetectorGraph {
        detectors,
        edges,
        observable,
        num_records: mc.layout.num_records(),
    })
}

/// Try to cover `dets` by disjoint existing edges (pairs or boundary
/// singletons) whose observable labels XOR to `obs`.
fn decompose(
    dets: &[usize],
    obs: bool,
    edges: &BTreeMap<(usize, Option<usize>, bool), f64>,
) -> Option<Vec<(usize, Option<usize>, bool)>> {
    if dets.is_empty() {
        return if obs { None } else { Some(Vec::new()) };
    }
    let a = dets[0];
    let rest: Vec<usize> = dets[1..].to_vec();
    // Pair `a` with a later detector via an existing edge.
    for (k, &b) in rest.iter().enumerate() {
        let mut remaining = rest.clone();
        remaining.remove(k);
        for eobs in [false, true] {
            let key = (a.min(b), Some(a.max(b)), eobs);
            if edges.contains_key(&key) {
                if let Some(mut tail) = decompose(&remaining, obs ^ eobs, edges) {
                    tail.push(key);
                    return Some(tail);
                }
            }
        }
    }
    // Or send it to the boundary.
    for eobs in [false, true] {
        let key = (a, None, eobs);
        if edges.contains_key(&key) {
            if let Some(mut tail) = decompose(&rest, obs ^ eobs, edges) {
                tail.push(key);
                return Some(tail);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::noise::synthesize_profile;
    use crate::scheduler::{resolve_conflicts, select_local};

    fn graph(d: usize, rounds: usize) -> (Lattice, DetectorGraph) {
        let lat = build_lattice(d).unwrap();
        let p = synthesize_profile(&lat, 0.009, 0.004, 0.002, 3).unwrap();
        let a = select_local(&lat, &p).unwrap();
        let s = resolve_conflicts(&lat, &a, 9).unwrap();
        let g = build_detector_graph(&lat, &s, &p, rounds, 1.0).unwrap();
        (lat, g)
    }

    #[test]
    fn detector_counts() {
        let (lat, g) = graph(3, 2);
        let n_checks = lat.measures.len();
        let n_final = lat
            .stabilizer_supports()
            .iter()
            .filter(|s| s.pauli == CheckType::Z)
            .count();
        assert_eq!(g.detectors.len(), 2 * n_checks + n_final);
        assert!(!g.observable.is_empty());
    }

    #[test]
    fn every_fault_decomposes_and_probs_sane() {
        for (d, rounds) in [(3, 2), (3, 4), (5, 2)] {
            let (_, g) = graph(d, rounds);
            assert!(!g.edges.is_empty());
            for e in &g.edges {
                assert!(e.prob > 0.0 && e.prob < 0.5, "prob {}", e.prob);
                assert!(e.weight > 0.0);
                assert!(e.a < g.detectors.len());
                if let Some(b) = e.b {
                    assert!(b < g.detectors.len());
                    assert_ne!(e.a, b);
                }
            }
        }
    }

    #[test]
    fn edges_stay_within_one_family() {
        let (_, g) = graph(3, 3);
        for e in &g.edges {
            if let Some(b) = e.b {
                assert_eq!(g.detectors[e.a].family, g.detectors[b].family);
            }
        }
    }

    #[test]
    fn observable_edges_exist_only_in_z_family() {
        let (_, g) = graph(3, 2);
        assert!(g.edges.iter().any(|e| e.obs));
        for e in &g.edges {
            if e.obs {
                assert_eq!(g.detectors[e.a].family, CheckType::Z);
            }
        }
    }

    #[test]
    fn graph_is_deterministic() {
        let (_, g1) = graph(3, 2);
        let (_, g2) = graph(3, 2);
        assert_eq!(g1.edges, g2.edges);
    }
}
