//! Rotated surface-code lattice: qubit layout, stabilizer supports, boundary
//! structure and the groupable pair set.
//!
//! Doubled-coordinate layout: data qubits sit at odd (row, col) pairs
//! `(2i+1, 2j+1)` for `i, j in 0..d`; measure qubits sit at even pairs
//! `(2r, 2c)` for plaquette indices `r, c in 0..=d`. A plaquette at `(r, c)`
//! touches the data qubits at grid positions `(r-1..r, c-1..c)` that exist.
//!
//! Type assignment: a plaquette is X-type when `r + c` is even, Z-type when
//! odd. Top and bottom boundaries keep only their X-type weight-2 plaquettes,
//! left and right keep only Z-type. With this convention the logical Z
//! operator is the bottom data row, the groupable boundary pairs are exactly
//! the supports of the top/bottom weight-2 X stabilizers, and both members of
//! any groupable pair always appear together in every Z-type check that
//! contains either of them (which is what makes joint pair readout
//! reconstructible from Z-basis bits).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Data,
    MeasureX,
    MeasureZ,
}

/// Which stabilizer family is reconstructed from the final Z-basis readout.
///
/// The default is `Z`: products of Z operators are the parities that can be
/// recovered from Z-basis data bits, and groupable pair members co-occur in
/// every Z-type support. The `X` value exists for symmetry (an X-basis
/// readout experiment) but no such experiment is built here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckType {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qubit {
    pub index: usize,
    pub role: Role,
    /// Doubled-coordinate (row, col).
    pub coord: (i32, i32),
}

impl Qubit {
    pub fn is_data(&self) -> bool {
        self.role == Role::Data
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizerSupport {
    pub measure: usize,
    /// Row-major ordered data qubits, length 2 or 4.
    pub data_support: Vec<usize>,
    pub pauli: CheckType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub distance: usize,
    pub qubits: Vec<Qubit>,
    /// Data qubit ids, row-major. Always `0..d*d`.
    pub data: Vec<usize>,
    /// Measure qubit ids, row-major by doubled coordinate.
    pub measures: Vec<usize>,
    /// Unordered (data, measure) pairs, stored as (data, measure).
    pub edges: Vec<(usize, usize)>,
    /// Disjoint boundary pairs admitting joint parity readout, each the
    /// support of one weight-2 boundary stabilizer.
    pub groupable: Vec<(usize, usize)>,
    /// Bottom data row, left to right; length d.
    pub logical_z: Vec<usize>,
    pub readout_check_type: CheckType,
    supports: Vec<StabilizerSupport>,
    adjacency: Vec<Vec<usize>>,
}

/// Construct the rotated surface code of odd distance `d` (3..=15).
pub fn build_lattice(d: usize) -> Result<Lattice> {
    if d % 2 == 0 || !(3..=15).contains(&d) {
        return Err(Error::InvalidDistance(d));
    }

    let mut qubits = Vec::new();
    let mut data = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let index = qubits.len();
            qubits.push(Qubit {
                index,
                role: Role::Data,
                coord: (2 * i as i32 + 1, 2 * j as i32 + 1),
            });
            data.push(index);
        }
    }

    let data_at = |i: i64, j: i64| -> Option<usize> {
        if i < 0 || j < 0 || i >= d as i64 || j >= d as i64 {
            None
        } else {
            Some(i as usize * d + j as usize)
        }
    };

    // Plaquette (r, c) exists when it is interior, or when its type matches
    // its boundary: X on top/bottom rows, Z on left/right columns.
    let mut measures = Vec::new();
    let mut supports = Vec::new();
    let mut edges = Vec::new();
    for r in 0..=d {
        for c in 0..=d {
            let is_x = (r + c) % 2 == 0;
            let interior = (1..d).contains(&r) && (1..d).contains(&c);
            let on_top_bottom = (r == 0 || r == d) && (1..d).contains(&c);
            let on_left_right = (c == 0 || c == d) && (1..d).contains(&r);
            let exists = interior || (on_top_bottom && is_x) || (on_left_right && !is_x);
            if !exists {
                continue;
            }
            let index = qubits.len();
            let role = if is_x { Role::MeasureX } else { Role::MeasureZ };
            qubits.push(Qubit {
                index,
                role,
                coord: (2 * r as i32, 2 * c as i32),
            });
            measures.push(index);
            let mut support = Vec::new();
            for (di, dj) in [
                (r as i64 - 1, c as i64 - 1),
                (r as i64 - 1, c as i64),
                (r as i64, c as i64 - 1),
                (r as i64, c as i64),
            ] {
                if let Some(q) = data_at(di, dj) {
                    support.push(q);
                }
            }
            support.sort_unstable();
            for &q in &support {
                edges.push((q, index));
            }
            supports.push(StabilizerSupport {
                measure: index,
                data_support: support,
                pauli: if is_x { CheckType::X } else { CheckType::Z },
            });
        }
    }

    let mut adjacency = vec![Vec::new(); qubits.len()];
    for &(a, b) in &edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&q| (qubits[q].coord, q));
    }

    // Groupable pairs: supports of the weight-2 top/bottom boundary
    // stabilizers. Bottom row pairs columns (2i, 2i+1), top row (2i+1, 2i+2),
    // floor(d/2) pairs per row with one unpaired qubit left over.
    let mut groupable = Vec::new();
    for s in &supports {
        let (r, _) = (qubits[s.measure].coord.0 / 2, qubits[s.measure].coord.1 / 2);
        if s.data_support.len() == 2 && (r == 0 || r == d as i32) {
            groupable.push((s.data_support[0], s.data_support[1]));
        }
    }
    groupable.sort_unstable();
    debug_assert_eq!(groupable.len(), 2 * (d / 2));

    let logical_z: Vec<usize> = (0..d).map(|j| (d - 1) * d + j).collect();

    Ok(Lattice {
        distance: d,
        qubits,
        data,
        measures,
        edges,
        groupable,
        logical_z,
        readout_check_type: CheckType::Z,
        supports,
        adjacency,
    })
}

impl Lattice {
    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn stabilizer_supports(&self) -> &[StabilizerSupport] {
        &self.supports
    }

    pub fn support_of(&self, measure: usize) -> Option<&StabilizerSupport> {
        self.supports.iter().find(|s| s.measure == measure)
    }

    /// All qubits sharing an edge with `q`, in row-major coordinate order.
    pub fn neighbors(&self, q: usize) -> Result<&[usize]> {
        self.adjacency
            .get(q)
            .map(|v| v.as_slice())
            .ok_or(Error::UnknownQubit(q))
    }

    pub fn is_data(&self, q: usize) -> bool {
        self.qubits.get(q).map(|x| x.is_data()).unwrap_or(false)
    }

    /// Common measure-qubit neighbor of two data qubits. For a groupable pair
    /// this is the unique weight-2 boundary measure qubit between them; for
    /// other pairs the lowest-index common neighbor, if any.
    pub fn shared_measure(&self, d1: usize, d2: usize) -> Option<usize> {
        if !self.is_data(d1) || !self.is_data(d2) {
            return None;
        }
        if self.is_groupable(d1, d2) {
            let (a, b) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            return self
                .supports
                .iter()
                .find(|s| s.data_support == [a, b])
                .map(|s| s.measure);
        }
        let n2 = &self.adjacency[d2];
        self.adjacency[d1]
            .iter()
            .copied()
            .filter(|m| n2.contains(m))
            .min()
    }

    pub fn is_groupable(&self, d1: usize, d2: usize) -> bool {
        let key = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        self.groupable.binary_search(&key).is_ok()
    }

    /// Groupable pair containing `q`, if any.
    pub fn pair_of(&self, q: usize) -> Option<(usize, usize)> {
        self.groupable
            .iter()
            .copied()
            .find(|&(a, b)| a == q || b == q)
    }

    /// JSON dump used by golden-file tests and the `dump-lattice` subcommand.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "distance": self.distance,
            "data": self.data,
            "measures": self.measures.iter().map(|&m| serde_json::json!({
                "index": m,
                "pauli": self.support_of(m).map(|s| match s.pauli { CheckType::X => "X", CheckType::Z => "Z" }),
            })).collect::<Vec<_>>(),
            "edges": self.edges,
            "groupable": self.groupable,
            "logical_z": self.logical_z,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent enumeration oracle: count plaquettes of the standard
    /// rotated construction directly from the existence rule.
    fn oracle_counts(d: usize) -> (usize, usize, usize, usize) {
        let mut x = 0;
        let mut z = 0;
        let mut w2 = 0;
        for r in 0..=d {
            for c in 0..=d {
                let is_x = (r + c) % 2 == 0;
                let interior = (1..d).contains(&r) && (1..d).contains(&c);
                let tb = (r == 0 || r == d) && (1..d).contains(&c);
                let lr = (c == 0 || c == d) && (1..d).contains(&r);
                if interior || (tb && is_x) || (lr && !is_x) {
                    if is_x {
                        x += 1
                    } else {
                        z += 1
                    }
                    if !interior {
                        w2 += 1;
                    }
                }
            }
        }
        (d * d, x + z, x, w2)
    }

    #[test]
    fn d3_counts() {
        let lat = build_lattice(3).unwrap();
        assert_eq!(lat.data.len(), 9);
        assert_eq!(lat.measures.len(), 8);
        let x = lat
            .stabilizer_supports()
            .iter()
            .filter(|s| s.pauli == CheckType::X)
            .count();
        assert_eq!(x, 4);
        assert_eq!(lat.stabilizer_supports().len() - x, 4);
        assert_eq!(lat.groupable.len(), 2);
    }

    #[test]
    fn d5_counts() {
        let lat = build_lattice(5).unwrap();
        assert_eq!(lat.data.len(), 25);
        assert_eq!(lat.measures.len(), 24);
        assert_eq!(lat.logical_z.len(), 5);
    }

    #[test]
    fn count_law_matches_oracle() {
        for d in (3..=11).step_by(2) {
            let lat = build_lattice(d).unwrap();
            let (nd, nm, nx, w2) = oracle_counts(d);
            assert_eq!(lat.data.len(), nd);
            assert_eq!(lat.measures.len(), nm);
            assert_eq!(
                lat.stabilizer_supports()
                    .iter()
                    .filter(|s| s.pauli == CheckType::X)
                    .count(),
                nx
            );
            assert_eq!(
                lat.stabilizer_supports()
                    .iter()
                    .filter(|s| s.data_support.len() == 2)
                    .count(),
                w2
            );
            let support_sum: usize = lat
                .stabilizer_supports()
                .iter()
                .map(|s| s.data_support.len())
                .sum();
            assert_eq!(lat.edges.len(), support_sum);
        }
    }

    #[test]
    fn rejects_bad_distance() {
        assert!(build_lattice(4).is_err());
        assert!(build_lattice(1).is_err());
        assert!(build_lattice(17).is_err());
    }

    #[test]
    fn bipartite_edges() {
        for d in [3, 5, 7] {
            let lat = build_lattice(d).unwrap();
            for &(a, b) in &lat.edges {
                assert!(lat.qubits[a].is_data() != lat.qubits[b].is_data());
            }
        }
    }

    #[test]
    fn d3_support_lengths() {
        let lat = build_lattice(3).unwrap();
        let w2 = lat
            .stabilizer_supports()
            .iter()
            .filter(|s| s.data_support.len() == 2)
            .count();
        assert_eq!(lat.stabilizer_supports().len(), 8);
        assert_eq!(w2, 4);
    }

    #[test]
    fn data_membership_bounds() {
        for d in [3, 5, 9] {
            let lat = build_lattice(d).unwrap();
            for &q in &lat.data {
                let n = lat
                    .stabilizer_supports()
                    .iter()
                    .filter(|s| s.data_support.contains(&q))
                    .count();
                assert!((1..=4).contains(&n), "qubit {q} in {n} supports");
            }
        }
    }

    #[test]
    fn d3_corner_in_two_supports() {
        let lat = build_lattice(3).unwrap();
        // top-left corner data qubit
        let n = lat
            .stabilizer_supports()
            .iter()
            .filter(|s| s.data_support.contains(&0))
            .count();
        assert_eq!(n, 2);
        assert_eq!(lat.neighbors(0).unwrap().len(), 2);
    }

    #[test]
    fn bulk_measure_degree_four() {
        let lat = build_lattice(5).unwrap();
        for s in lat.stabilizer_supports() {
            let deg = lat.neighbors(s.measure).unwrap().len();
            assert_eq!(deg, s.data_support.len());
            assert!(deg == 2 || deg == 4);
        }
    }

    #[test]
    fn neighbors_of_data_are_measures() {
        let lat = build_lattice(5).unwrap();
        for &q in &lat.data {
            for &m in lat.neighbors(q).unwrap() {
                assert!(!lat.qubits[m].is_data());
            }
        }
        assert!(lat.neighbors(10_000).is_err());
    }

    #[test]
    fn groupable_pairs_are_weight2_supports() {
        for d in [3, 5, 7, 9] {
            let lat = build_lattice(d).unwrap();
            assert_eq!(lat.groupable.len(), 2 * (d / 2));
            let mut seen = std::collections::HashSet::new();
            for &(a, b) in &lat.groupable {
                assert!(seen.insert(a) && seen.insert(b), "pairs not disjoint");
                let m = lat.shared_measure(a, b).expect("shared measure");
                let s = lat.support_of(m).unwrap();
                assert_eq!(s.data_support, vec![a, b]);
                assert_eq!(s.pauli, CheckType::X);
            }
        }
    }

    /// Pair members co-occur in every Z-type support containing either; this
    /// is what makes joint pair bits reconstructible at Z-basis readout.
    #[test]
    fn pair_members_cooccur_in_z_supports() {
        for d in [3, 5, 7, 11] {
            let lat = build_lattice(d).unwrap();
            for &(a, b) in &lat.groupable {
                for s in lat.stabilizer_supports() {
                    if s.pauli == CheckType::Z {
                        assert_eq!(
                            s.data_support.contains(&a),
                            s.data_support.contains(&b),
                            "d={d} pair ({a},{b}) split by Z support of {}",
                            s.measure
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn shared_measure_cases() {
        let lat = build_lattice(3).unwrap();
        // Groupable bottom pair (6, 7): shared measure is the weight-2 X check.
        let (a, b) = lat.groupable[0];
        let m = lat.shared_measure(a, b).unwrap();
        assert_eq!(lat.support_of(m).unwrap().data_support, vec![a, b]);
        // Opposite corners share nothing.
        assert_eq!(lat.shared_measure(0, 8), None);
        // A bulk adjacent pair has a common measure but is not groupable.
        assert!(lat.shared_measure(0, 1).is_some());
        assert!(!lat.is_groupable(0, 1));
    }

    #[test]
    fn deterministic_construction() {
        let a = build_lattice(7).unwrap();
        let b = build_lattice(7).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a.to_json()).unwrap(),
            serde_json::to_string(&b.to_json()).unwrap()
        );
    }

    #[test]
    fn logical_z_commutes_with_x_supports() {
        for d in [3, 5, 7] {
            let lat = build_lattice(d).unwrap();
            for s in lat.stabilizer_supports() {
                if s.pauli == CheckType::X {
                    let overlap = s
                        .data_support
                        .iter()
                        .filter(|q| lat.logical_z.contains(q))
                        .count();
                    assert_eq!(overlap % 2, 0, "logical Z anticommutes with X check");
                }
            }
        }
    }
}
