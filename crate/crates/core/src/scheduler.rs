//! MS-local: greedy per-unit modality selection on the relaxed program, plus
//! conflict resolution by iterative temporal deferral, and an exhaustive
//! oracle used by the verification tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::modalities::{
    cost, cost_ind, cost_joint, enumerate_modalities, ModalityInstance, ModalityKind, Unit,
};
use crate::noise::DeviceProfile;

/// Readout units of a lattice in deterministic row-major order: groupable
/// pairs plus every unpaired data qubit.
pub fn units(lat: &Lattice) -> Vec<Unit> {
    let mut paired = std::collections::HashSet::new();
    for &(a, b) in &lat.groupable {
        paired.insert(a);
        paired.insert(b);
    }
    let mut out: Vec<Unit> = Vec::new();
    for &q in &lat.data {
        if let Some((a, b)) = lat.pair_of(q) {
            if q == a.min(b) {
                out.push(Unit::Pair(a.min(b), a.max(b)));
            }
        } else {
            out.push(Unit::Single(q));
        }
    }
    debug_assert_eq!(
        out.len(),
        lat.data.len() - paired.len() + lat.groupable.len()
    );
    out
}

/// A complete per-unit modality selection. Pairs carry either one joint
/// instance or two single instances (one per member).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub choice: Vec<(Unit, Vec<ModalityInstance>)>,
    pub covered: Vec<usize>,
}

impl Assignment {
    pub fn from_choices(choice: Vec<(Unit, Vec<ModalityInstance>)>) -> Self {
        let mut covered: Vec<usize> = choice
            .iter()
            .flat_map(|(_, insts)| insts.iter().flat_map(|i| i.targets.iter().copied()))
            .collect();
        covered.sort_unstable();
        Assignment { choice, covered }
    }

    pub fn instances(&self) -> impl Iterator<Item = &ModalityInstance> {
        self.choice.iter().flat_map(|(_, insts)| insts.iter())
    }

    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        let mut covered = self.covered.clone();
        covered.dedup();
        if covered.len() != self.covered.len() || covered != lat.data {
            return Err(Error::IncompleteAssignment(format!(
                "covered {} of {} data qubits",
                covered.len(),
                lat.data.len()
            )));
        }
        Ok(())
    }
}

/// Tick-indexed packing of an assignment's instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub ticks: Vec<Vec<ModalityInstance>>,
    pub tau: usize,
    /// Ticks each data qubit idles before its readout fires (0-based tick of
    /// its covering instance).
    pub wait: BTreeMap<usize, usize>,
}

impl Schedule {
    pub fn instances(&self) -> impl Iterator<Item = &ModalityInstance> {
        self.ticks.iter().flatten()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "tau": self.tau,
            "ticks": self.ticks,
            "wait": self.wait.iter().map(|(q, t)| (q.to_string(), t)).collect::<BTreeMap<_, _>>(),
        })
    }

    /// Per-tick participant disjointness plus exactly-once target coverage.
    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        for (t, tick) in self.ticks.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for inst in tick {
                for &q in &inst.participants {
                    if !seen.insert(q) {
                        return Err(Error::ScheduleMismatch(format!(
                            "qubit {q} used twice in tick {t}"
                        )));
                    }
                }
            }
        }
        let mut covered: Vec<usize> = self
            .instances()
            .flat_map(|i| i.targets.iter().copied())
            .collect();
        covered.sort_unstable();
        if covered != lat.data {
            return Err(Error::ScheduleMismatch(
                "targets do not cover the data qubits exactly once".into(),
            ));
        }
        if self.tau != self.ticks.len() {
            return Err(Error::ScheduleMismatch("tau != tick count".into()));
        }
        Ok(())
    }
}

fn tiebreak_key(c: f64, inst: &ModalityInstance) -> (f64, usize, usize) {
    (c, inst.gate_count, inst.measured)
}

fn best_single(
    lat: &Lattice,
    p: &DeviceProfile,
    q: usize,
) -> Result<(f64, ModalityInstance)> {
    let mut best: Option<(f64, ModalityInstance)> = None;
    for inst in enumerate_modalities(lat, Unit::Single(q))? {
        let c = cost_ind(&inst, p)?;
        let better = match &best {
            None => true,
            Some((bc, bi)) => tiebreak_key(c, &inst) < tiebreak_key(*bc, bi),
        };
        if better {
            best = Some((c, inst));
        }
    }
    Ok(best.expect("D-M always exists"))
}

/// Greedy modality selection: per-unit argmin of the relaxed objective.
/// Pairs adaptively choose between the best joint modality and the best
/// independent member measurements.
pub fn select_local(lat: &Lattice, p: &DeviceProfile) -> Result<Assignment> {
    p.validate(lat)?;
    let mut choice = Vec::new();
    for unit in units(lat) {
        match unit {
            Unit::Single(q) => {
                let (_, inst) = best_single(lat, p, q)?;
                choice.push((unit, vec![inst]));
            }
            Unit::Pair(a, b) => {
                let mut best_joint: Option<(f64, ModalityInstance)> = None;
                for inst in enumerate_modalities(lat, unit)? {
                    let c = cost_joint(&inst, p)?;
                    let better = match &best_joint {
                        None => true,
                        Some((bc, bi)) => tiebreak_key(c, &inst) < tiebreak_key(*bc, bi),
                    };
                    if better {
                        best_joint = Some((c, inst));
                    }
                }
                let (cj, joint) = best_joint.expect("pair has joint modalities");
                let (ca, ia) = best_single(lat, p, a)?;
                let (cb, ib) = best_single(lat, p, b)?;
                // Ties broken toward fewer gates, then lower measured index.
                let joint_key = (cj, joint.gate_count, joint.measured);
                let ind_key = (
                    ca + cb,
                    ia.gate_count + ib.gate_count,
                    ia.measured.min(ib.measured),
                );
                if joint_key <= ind_key {
                    choice.push((unit, vec![joint]));
                } else {
                    choice.push((unit, vec![ia, ib]));
                }
            }
        }
    }
    let a = Assignment::from_choices(choice);
    a.validate(lat)?;
    Ok(a)
}

/// Sum of chosen instance costs (joint instances counted once per pair).
pub fn total_cost(a: &Assignment, p: &DeviceProfile) -> Result<f64> {
    if a.choice.is_empty() {
        return Err(Error::IncompleteAssignment("empty assignment".into()));
    }
    let mut sum = 0.0;
    for inst in a.instances() {
        sum += cost(inst, p);
    }
    Ok(sum)
}

/// First-fit temporal deferral. Instances are visited in row-major target
/// order (with a seedable tiebreak); each is placed in the earliest tick
/// where its participants are free and every data-qubit helper's own readout
/// has already fired in an earlier tick. Mutually-blocking transfer cycles
/// fall back to direct measurement of the stuck targets.
pub fn resolve_conflicts(
    lat: &Lattice,
    a: &Assignment,
    order_seed: u64,
) -> Result<Schedule> {
    a.validate(lat)?;
    let mut order: Vec<ModalityInstance> = a.instances().cloned().collect();
    order.sort_by_key(|inst| {
        let coord = lat.qubits[inst.targets[0]].coord;
        (coord, mix(order_seed, inst.measured as u64))
    });

    let mut ticks: Vec<Vec<ModalityInstance>> = Vec::new();
    let mut fired_tick: BTreeMap<usize, usize> = BTreeMap::new(); // data qubit -> tick
    let mut remaining = order;

    while !remaining.is_empty() {
        let mut progressed = false;
        let mut still = Vec::new();
        for inst in remaining.drain(..) {
            let helpers: Vec<usize> = inst.data_helpers(lat).collect();
            if helpers.iter().any(|h| !fired_tick.contains_key(h)) {
                still.push(inst);
                continue;
            }
            let min_tick = helpers
                .iter()
                .map(|h| fired_tick[h] + 1)
                .max()
                .unwrap_or(0);
            let mut t = min_tick;
            loop {
                if t == ticks.len() {
                    ticks.push(Vec::new());
                }
                let busy = ticks[t]
                    .iter()
                    .any(|other| other.participants.iter().any(|q| inst.participants.contains(q)));
                if !busy {
                    for &target in &inst.targets {
                        fired_tick.insert(target, t);
                    }
                    ticks[t].push(inst);
                    progressed = true;
                    break;
                }
                t += 1;
            }
        }
        if !progressed && !still.is_empty() {
            // Transfer cycle: every remaining instance waits on a helper that
            // is itself unplaced. Break it deterministically by direct
            // measurement of the first stuck instance's targets.
            let stuck = still.remove(0);
            for &q in &stuck.targets {
                let dm = ModalityInstance {
                    kind: ModalityKind::Dm,
                    targets: vec![q],
                    measured: q,
                    participants: vec![q],
                    gate_count: 0,
                };
                still.push(dm);
            }
        }
        remaining = still;
    }

    let wait = fired_tick;
    let sched = Schedule {
        tau: ticks.len(),
        ticks,
        wait,
    };
    sched.validate(lat)?;
    Ok(sched)
}

fn mix(seed: u64, v: u64) -> u64 {
    // splitmix64 step; only used as a deterministic tiebreak
    let mut z = seed.wrapping_add(v).wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Exact minimum of the relaxed program by exhaustive per-unit enumeration.
/// The objective is separable across units, so the minimum is the sum of
/// per-unit minima over every candidate option.
pub fn oracle_min(lat: &Lattice, p: &DeviceProfile) -> Result<f64> {
    if lat.distance > 5 {
        return Err(Error::SearchSpaceTooLarge(lat.distance as u128));
    }
    p.validate(lat)?;
    let mut sum = 0.0;
    for unit in units(lat) {
        match unit {
            Unit::Single(_) => {
                let best = enumerate_modalities(lat, unit)?
                    .iter()
                    .map(|i| cost_ind(i, p).unwrap())
                    .fold(f64::INFINITY, f64::min);
                sum += best;
            }
            Unit::Pair(a, b) => {
                let best_joint = enumerate_modalities(lat, unit)?
                    .iter()
                    .map(|i| cost_joint(i, p).unwrap())
                    .fold(f64::INFINITY, f64::min);
                let best_a = enumerate_modalities(lat, Unit::Single(a))?
                    .iter()
                    .map(|i| cost_ind(i, p).unwrap())
                    .fold(f64::INFINITY, f64::min);
                let best_b = enumerate_modalities(lat, Unit::Single(b))?
                    .iter()
                    .map(|i| cost_ind(i, p).unwrap())
                    .fold(f64::INFINITY, f64::min);
                sum += best_joint.min(best_a + best_b);
            }
        }
    }
    Ok(sum)
}

/// The all-D-M baseline assignment ("Original" readout).
pub fn all_dm(lat: &Lattice) -> Assignment {
    let choice = units(lat)
        .into_iter()
        .map(|unit| {
            let insts = unit
                .targets()
                .into_iter()
                .map(|q| ModalityInstance {
                    kind: ModalityKind::Dm,
                    targets: vec![q],
                    measured: q,
                    participants: vec![q],
                    gate_count: 0,
                })
                .collect();
            (unit, insts)
        })
        .collect();
    Assignment::from_choices(choice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::noise::synthesize_profile;

    #[test]
    fn homogeneous_large_ger_picks_all_dm() {
        let lat = build_lattice(3).unwrap();
        let mut p = synthesize_profile(&lat, 0.01, 0.0, 0.0, 0).unwrap();
        p.ger = 0.05;
        let a = select_local(&lat, &p).unwrap();
        for inst in a.instances() {
            assert_eq!(inst.kind, ModalityKind::Dm);
        }
        let c = total_cost(&a, &p).unwrap();
        assert!((c - 0.01 * 9.0).abs() < 1e-12);
    }

    #[test]
    fn mrm_chosen_when_neighbor_much_better() {
        let lat = build_lattice(3).unwrap();
        let mut p = synthesize_profile(&lat, 0.01, 0.0, 0.002, 0).unwrap();
        // center qubit 4 very noisy, all measures good
        p.mer[4] = 0.05;
        for &m in &lat.measures {
            p.mer[m] = 0.004;
        }
        let a = select_local(&lat, &p).unwrap();
        let inst = a
            .instances()
            .find(|i| i.targets == vec![4])
            .expect("center covered");
        assert_eq!(inst.kind, ModalityKind::Mrm);
    }

    #[test]
    fn mrpm_chosen_when_shared_measure_good() {
        let lat = build_lattice(3).unwrap();
        let mut p = synthesize_profile(&lat, 0.03, 0.0, 0.001, 0).unwrap();
        let (a, b) = lat.groupable[0];
        let m = lat.shared_measure(a, b).unwrap();
        p.mer[m] = 0.005;
        let asg = select_local(&lat, &p).unwrap();
        let (_, insts) = asg
            .choice
            .iter()
            .find(|(u, _)| *u == Unit::Pair(a.min(b), a.max(b)))
            .unwrap();
        assert_eq!(insts.len(), 1);
        assert_eq!(insts[0].kind, ModalityKind::Mrpm);
    }

    #[test]
    fn greedy_matches_oracle_on_random_profiles() {
        for d in [3, 5] {
            let lat = build_lattice(d).unwrap();
            for seed in 0..20 {
                let p = synthesize_profile(&lat, 0.012, 0.006, 0.002, seed).unwrap();
                let a = select_local(&lat, &p).unwrap();
                let c = total_cost(&a, &p).unwrap();
                let o = oracle_min(&lat, &p).unwrap();
                assert!((c - o).abs() < 1e-12, "d={d} seed={seed}: {c} vs {o}");
            }
        }
    }

    #[test]
    fn cost_never_exceeds_all_dm() {
        let lat = build_lattice(5).unwrap();
        for seed in 0..10 {
            let p = synthesize_profile(&lat, 0.015, 0.008, 0.002, seed).unwrap();
            let c = total_cost(&select_local(&lat, &p).unwrap(), &p).unwrap();
            let dm: f64 = lat.data.iter().map(|&q| p.mer[q]).sum();
            assert!(c <= dm + 1e-12);
        }
    }

    #[test]
    fn all_dm_packs_in_one_tick() {
        let lat = build_lattice(5).unwrap();
        let a = all_dm(&lat);
        let s = resolve_conflicts(&lat, &a, 0).unwrap();
        assert_eq!(s.tau, 1);
        assert!(s.wait.values().all(|&w| w == 0));
    }

    #[test]
    fn shared_measure_conflict_defers() {
        let lat = build_lattice(3).unwrap();
        // two MRM instances on the same measure qubit
        let m = *lat
            .stabilizer_supports()
            .iter()
            .find(|s| s.data_support.len() == 4)
            .map(|s| &s.measure)
            .unwrap();
        let support = lat.support_of(m).unwrap().data_support.clone();
        let mut choice = Vec::new();
        for &q in &lat.data {
            let inst = if q == support[0] || q == support[1] {
                ModalityInstance {
                    kind: ModalityKind::Mrm,
                    targets: vec![q],
                    measured: m,
                    participants: {
                        let mut v = vec![q, m];
                        v.sort_unstable();
                        v
                    },
                    gate_count: 1,
                }
            } else {
                ModalityInstance {
                    kind: ModalityKind::Dm,
                    targets: vec![q],
                    measured: q,
                    participants: vec![q],
                    gate_count: 0,
                }
            };
            choice.push((Unit::Single(q), vec![inst]));
        }
        let a = Assignment::from_choices(choice);
        let s = resolve_conflicts(&lat, &a, 0).unwrap();
        assert_eq!(s.tau, 2);
    }

    #[test]
    fn schedules_valid_and_deterministic_over_random_profiles() {
        for d in [3, 5, 7, 9] {
            let lat = build_lattice(d).unwrap();
            for seed in 0..5 {
                let p = synthesize_profile(&lat, 0.015, 0.008, 0.002, seed).unwrap();
                let a = select_local(&lat, &p).unwrap();
                let s1 = resolve_conflicts(&lat, &a, seed).unwrap();
                let s2 = resolve_conflicts(&lat, &a, seed).unwrap();
                assert_eq!(s1, s2);
                s1.validate(&lat).unwrap();
            }
        }
    }

    #[test]
    fn coverage_over_distances() {
        for d in (3..=11).step_by(2) {
            let lat = build_lattice(d).unwrap();
            for seed in 0..3 {
                let p = synthesize_profile(&lat, 0.012, 0.005, 0.002, seed).unwrap();
                let a = select_local(&lat, &p).unwrap();
                assert_eq!(a.covered, lat.data);
            }
        }
    }

    #[test]
    fn oracle_degenerate_cases() {
        let lat = build_lattice(3).unwrap();
        // uniform mer, positive ger: transfers strictly dominated, all D-M
        let p = synthesize_profile(&lat, 0.01, 0.0, 0.008, 0).unwrap();
        let o = oracle_min(&lat, &p).unwrap();
        assert!((o - 0.09).abs() < 1e-12);
        // ger = 0: every unit reaches its minimum reachable MER
        let p0 = synthesize_profile(&lat, 0.01, 0.004, 0.0, 1).unwrap();
        let o0 = oracle_min(&lat, &p0).unwrap();
        let greedy = total_cost(&select_local(&lat, &p0).unwrap(), &p0).unwrap();
        assert!((o0 - greedy).abs() < 1e-12);
        assert!(oracle_min(&build_lattice(7).unwrap(), &p).is_err());
    }

    #[test]
    fn empty_assignment_rejected() {
        let lat = build_lattice(3).unwrap();
        let p = synthesize_profile(&lat, 0.01, 0.0, 0.008, 0).unwrap();
        let empty = Assignment::from_choices(Vec::new());
        assert!(total_cost(&empty, &p).is_err());
        assert!(empty.validate(&lat).is_err());
    }
}
