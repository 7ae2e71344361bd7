//! Stabilizer-tableau simulator (Aaronson–Gottesman layout: n destabilizer
//! rows followed by n stabilizer rows, plus phase bits).
//!
//! Measurements come in three modes: `Random` draws the outcome of a
//! non-deterministic measurement from an RNG, `Forced` pins it to a supplied
//! bit, and both report whether the outcome was deterministic. The forced
//! mode is what lets an independent sampler's shot be replayed here and
//! checked bit for bit.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy)]
pub enum Outcome {
    Random,
    Forced(bool),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tableau {
    n: usize,
    // Row-major bit matrices, rows 0..n destabilizers, n..2n stabilizers.
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    r: Vec<bool>,
}

impl Tableau {
    pub fn new(n: usize) -> Self {
        let mut t = Tableau {
            n,
            x: vec![vec![false; n]; 2 * n],
            z: vec![vec![false; n]; 2 * n],
            r: vec![false; 2 * n],
        };
        for i in 0..n {
            t.x[i][i] = true;
            t.z[n + i][i] = true;
        }
        t
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn h(&mut self, q: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][q] && self.z[i][q];
            let tmp = self.x[i][q];
            self.x[i][q] = self.z[i][q];
            self.z[i][q] = tmp;
        }
    }

    pub fn s(&mut self, q: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][q] && self.z[i][q];
            self.z[i][q] ^= self.x[i][q];
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        for i in 0..2 * self.n {
            self.r[i] ^= self.x[i][c] && self.z[i][t] && (self.x[i][t] ^ self.z[i][c] ^ true);
            self.x[i][t] ^= self.x[i][c];
            self.z[i][c] ^= self.z[i][t];
        }
    }

    pub fn pauli(&mut self, q: usize, p: Pauli) {
        for i in 0..2 * self.n {
            match p {
                Pauli::X => self.r[i] ^= self.z[i][q],
                Pauli::Z => self.r[i] ^= self.x[i][q],
                Pauli::Y => self.r[i] ^= self.x[i][q] ^ self.z[i][q],
            }
        }
    }

    /// Phase exponent contribution of multiplying single-qubit Paulis
    /// (x1,z1)·(x2,z2), in {-1,0,1} (powers of i).
    fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
        match (x1, z1) {
            (false, false) => 0,
            (true, true) => (z2 as i32) - (x2 as i32),
            (true, false) => (z2 as i32) * (2 * (x2 as i32) - 1),
            (false, true) => (x2 as i32) * (1 - 2 * (z2 as i32)),
        }
    }

    /// Row h := row h * row i (Pauli product with phase bookkeeping).
    /// Anticommuting rows leave an odd phase; that only happens for
    /// destabilizer rows, whose phases carry no meaning.
    fn rowsum(&mut self, h: usize, i: usize) {
        let mut phase = 2 * (self.r[h] as i32) + 2 * (self.r[i] as i32);
        for j in 0..self.n {
            phase += Self::g(self.x[i][j], self.z[i][j], self.x[h][j], self.z[h][j]);
        }
        self.r[h] = phase.rem_euclid(4) == 2;
        for j in 0..self.n {
            self.x[h][j] ^= self.x[i][j];
            self.z[h][j] ^= self.z[i][j];
        }
    }

    /// Like `rowsum` but accumulating into an external scratch row.
    fn rowsum_into(&self, scratch: &mut ScratchRow, i: usize) {
        let mut phase = 2 * (scratch.r as i32) + 2 * (self.r[i] as i32);
        for j in 0..self.n {
            phase += Self::g(self.x[i][j], self.z[i][j], scratch.x[j], scratch.z[j]);
        }
        debug_assert_eq!(phase.rem_euclid(2), 0);
        scratch.r = phase.rem_euclid(4) == 2;
        for j in 0..self.n {
            scratch.x[j] ^= self.x[i][j];
            scratch.z[j] ^= self.z[i][j];
        }
    }

    /// Measure qubit `q` in the Z basis. Returns (outcome, deterministic).
    pub fn measure<R: Rng>(&mut self, q: usize, mode: Outcome, rng: &mut R) -> (bool, bool) {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&i| self.x[i][q]) {
            // Non-deterministic: outcome is a fresh coin (or the forced bit).
            let bit = match mode {
                Outcome::Random => rng.gen::<bool>(),
                Outcome::Forced(b) => b,
            };
            for i in 0..2 * n {
                if i != p && self.x[i][q] {
                    self.rowsum(i, p);
                }
            }
            // Old stabilizer row becomes the destabilizer for the new Z_q.
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.r[p - n] = self.r[p];
            self.x[p] = vec![false; n];
            self.z[p] = vec![false; n];
            self.z[p][q] = true;
            self.r[p] = bit;
            (bit, false)
        } else {
            let mut scratch = ScratchRow::new(n);
            for i in 0..n {
                if self.x[i][q] {
                    self.rowsum_into(&mut scratch, i + n);
                }
            }
            (scratch.r, true)
        }
    }

    /// Measure a multi-qubit Pauli product (each factor on a distinct qubit).
    pub fn measure_pauli<R: Rng>(
        &mut self,
        ops: &[(usize, Pauli)],
        mode: Outcome,
        rng: &mut R,
    ) -> (bool, bool) {
        let n = self.n;
        let mut px = vec![false; n];
        let mut pz = vec![false; n];
        for &(q, p) in ops {
            match p {
                Pauli::X => px[q] = true,
                Pauli::Z => pz[q] = true,
                Pauli::Y => {
                    px[q] = true;
                    pz[q] = true;
                }
            }
        }
        let anticommutes = |x: &[bool], z: &[bool]| -> bool {
            let mut sym = false;
            for j in 0..n {
                sym ^= (x[j] && pz[j]) ^ (z[j] && px[j]);
            }
            sym
        };
        if let Some(p) = (n..2 * n).find(|&i| anticommutes(&self.x[i], &self.z[i])) {
            let bit = match mode {
                Outcome::Random => rng.gen::<bool>(),
                Outcome::Forced(b) => b,
            };
            for i in 0..2 * n {
                if i != p && anticommutes(&self.x[i], &self.z[i]) {
                    self.rowsum(i, p);
                }
            }
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.r[p - n] = self.r[p];
            self.x[p] = px;
            self.z[p] = pz;
            self.r[p] = bit;
            (bit, false)
        } else {
            let mut scratch = ScratchRow::new(n);
            for i in 0..n {
                if anticommutes(&self.x[i], &self.z[i]) {
                    self.rowsum_into(&mut scratch, i + n);
                }
            }
            debug_assert_eq!(scratch.x, px);
            debug_assert_eq!(scratch.z, pz);
            (scratch.r, true)
        }
    }

    pub fn reset<R: Rng>(&mut self, q: usize, rng: &mut R) {
        let (bit, _) = self.measure(q, Outcome::Random, rng);
        if bit {
            self.pauli(q, Pauli::X);
        }
    }

    /// Canonical generating set of the stabilizer group: row-reduced, sorted.
    /// Two tableaus describe the same state iff these are equal.
    pub fn canonical_stabilizers(&self) -> Vec<(Vec<bool>, Vec<bool>, bool)> {
        let n = self.n;
        let mut t = self.clone();
        let mut row = n;
        // X block pivots, then Z block, per qubit.
        for pass in 0..2 {
            for q in 0..n {
                let bits = |t: &Tableau, i: usize| {
                    if pass == 0 {
                        t.x[i][q]
                    } else {
                        !t.x[i][q] && t.z[i][q]
                    }
                };
                if let Some(p) = (row..2 * n).find(|&i| bits(&t, i)) {
                    t.x.swap(row, p);
                    t.z.swap(row, p);
                    t.r.swap(row, p);
                    for i in n..2 * n {
                        if i != row && bits(&t, i) {
                            t.rowsum(i, row);
                        }
                    }
                    row += 1;
                }
            }
        }
        let mut gens: Vec<_> = (n..2 * n)
            .map(|i| (t.x[i].clone(), t.z[i].clone(), t.r[i]))
            .collect();
        gens.sort();
        gens
    }

    pub fn same_state(&self, other: &Tableau) -> bool {
        self.canonical_stabilizers() == other.canonical_stabilizers()
    }
}

struct ScratchRow {
    x: Vec<bool>,
    z: Vec<bool>,
    r: bool,
}

impl ScratchRow {
    fn new(n: usize) -> Self {
        ScratchRow {
            x: vec![false; n],
            z: vec![false; n],
            r: false,
        }
    }
}

/// Scramble a fresh |0..0> into a random stabilizer state (for tests).
pub fn random_state<R: Rng>(n: usize, depth: usize, rng: &mut R) -> Tableau {
    let mut t = Tableau::new(n);
    for _ in 0..depth {
        match rng.gen_range(0..3) {
            0 => t.h(rng.gen_range(0..n)),
            1 => t.s(rng.gen_range(0..n)),
            _ => {
                let a = rng.gen_range(0..n);
                let mut b = rng.gen_range(0..n);
                while b == a {
                    b = rng.gen_range(0..n);
                }
                t.cnot(a, b);
            }
        }
    }
    t
}
