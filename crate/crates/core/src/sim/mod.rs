//! Stabilizer simulation of the memory experiment: circuit construction,
//! tableau and Pauli-frame samplers, detector graph, union-find decoding,
//! and Monte-Carlo logical-error-rate estimation.

pub mod circuit;
pub mod decoder;
pub mod detector;
pub mod frame;
pub mod memory;
pub mod tableau;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::Result;
use crate::exec::{count_failures, map_shots, mix_seed};
use crate::lattice::Lattice;
use crate::noise::DeviceProfile;
use crate::scheduler::Schedule;

pub use circuit::{Circuit, Instr};
pub use decoder::decode;
pub use detector::{build_detector_graph, build_detectors, DetectorGraph};
pub use memory::{build_memory_circuit, MemoryCircuit, ReadoutBit, RecordLayout};

/// Streams for per-shot seed derivation.
const STREAM_REFERENCE: u64 = 0;
const STREAM_FAULT: u64 = 1;
const STREAM_COLLAPSE: u64 = 2;

/// Wilson 95% confidence interval for a binomial proportion.
pub fn wilson_ci(failures: u64, shots: u64) -> (f64, f64) {
    if shots == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959963984540054f64;
    let n = shots as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorEstimate {
    pub shots: u64,
    pub failures: u64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl ErrorEstimate {
    pub fn from_counts(failures: u64, shots: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_ci(failures, shots);
        ErrorEstimate {
            shots,
            failures,
            rate: failures as f64 / shots.max(1) as f64,
            ci_lo,
            ci_hi,
        }
    }
}

/// A memory experiment frozen for sampling: circuit, reference record and
/// decoding graph are built once, shots are cheap afterwards.
pub struct MemoryRun {
    pub mc: MemoryCircuit,
    pub graph: DetectorGraph,
    reference: Vec<bool>,
    seed: u64,
}

impl MemoryRun {
    pub fn prepare(
        lat: &Lattice,
        sched: &Schedule,
        profile: &DeviceProfile,
        rounds: usize,
        beta: f64,
        seed: u64,
    ) -> Result<Self> {
        let mc = build_memory_circuit(lat, sched, profile, rounds, beta)?;
        let graph = detector::build_detector_graph_for(lat, &mc)?;
        let reference = frame::noiseless_reference(&mc.circuit, mix_seed(seed, STREAM_REFERENCE, 0));
        Ok(MemoryRun {
            mc,
            graph,
            reference,
            seed,
        })
    }

    /// Whether shot `s` ends in a logical failure (decoder prediction
    /// disagrees with the actual observable flip).
    pub fn shot_fails(&self, s: u64) -> bool {
        let mut fault = ChaCha12Rng::seed_from_u64(mix_seed(self.seed, STREAM_FAULT, s));
        let mut collapse = ChaCha12Rng::seed_from_u64(mix_seed(self.seed, STREAM_COLLAPSE, s));
        let records = frame::sample_frame(&self.mc.circuit, &self.reference, &mut fault, &mut collapse);
        let syndrome = self.graph.syndrome(&records);
        let predicted = decode(&self.graph, &syndrome);
        let actual = self.graph.observable_bit(&records)
            ^ self.graph.observable_bit(&self.reference);
        predicted != actual
    }

    pub fn estimate(&self, shots: u64) -> ErrorEstimate {
        let failures = count_failures(shots, |s| self.shot_fails(s));
        ErrorEstimate::from_counts(failures, shots)
    }

    /// Raw per-shot failure flags, in shot order.
    pub fn failure_flags(&self, shots: u64) -> Vec<bool> {
        map_shots(shots, |s| self.shot_fails(s))
    }
}

/// Monte-Carlo logical error rate for a schedule.
pub fn logical_error_rate(
    lat: &Lattice,
    sched: &Schedule,
    profile: &DeviceProfile,
    rounds: usize,
    beta: f64,
    shots: u64,
    seed: u64,
) -> Result<ErrorEstimate> {
    Ok(MemoryRun::prepare(lat, sched, profile, rounds, beta, seed)?.estimate(shots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::noise::synthesize_profile;
    use crate::scheduler::{all_dm, resolve_conflicts, select_local};

    fn run(d: usize, seed: u64) -> MemoryRun {
        let lat = build_lattice(d).unwrap();
        let p = synthesize_profile(&lat, 0.009, 0.004, 0.002, 3).unwrap();
        let a = select_local(&lat, &p).unwrap();
        let s = resolve_conflicts(&lat, &a, 9).unwrap();
        MemoryRun::prepare(&lat, &s, &p, d, 1.0, seed).unwrap()
    }

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_ci(0, 100);
        assert!(lo.abs() < 1e-12);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_ci(50, 100);
        assert!(lo < 0.5 && hi > 0.5);
        assert!(hi - lo < 0.25);
    }

    #[test]
    fn estimates_are_deterministic_for_a_seed() {
        let r1 = run(3, 7).estimate(400);
        let r2 = run(3, 7).estimate(400);
        assert_eq!(r1, r2);
    }

    #[test]
    fn noiseless_never_fails() {
        let lat = build_lattice(3).unwrap();
        let quiet = DeviceProfile {
            name: "quiet".into(),
            mer: vec![0.0; lat.num_qubits()],
            ger: 0.0,
            round_depol: 0.0,
            idle_depol_per_tick: 0.0,
            seed: 0,
        };
        let s = resolve_conflicts(&lat, &all_dm(&lat), 1).unwrap();
        let est = logical_error_rate(&lat, &s, &quiet, 2, 1.0, 200, 5).unwrap();
        assert_eq!(est.failures, 0);
    }

    #[test]
    fn rate_is_small_but_nonzero_at_reasonable_noise() {
        let est = run(3, 11).estimate(3000);
        assert!(est.failures > 0, "no failures at moderate noise");
        assert!(est.rate < 0.35, "rate {} implausibly high", est.rate);
        assert!(est.ci_lo <= est.rate && est.rate <= est.ci_hi);
    }

    #[test]
    fn failure_flags_match_count() {
        let r = run(3, 13);
        let flags = r.failure_flags(500);
        let est = r.estimate(500);
        assert_eq!(flags.iter().filter(|&&f| f).count() as u64, est.failures);
    }
}
