//! Shot execution: data-parallel with rayon under the `parallel` feature,
//! plain loop otherwise. Each shot derives its own RNG seeds from the run
//! seed and shot index, so the two paths produce identical results.

/// SplitMix64 finalizer; cheap, well-mixed seed derivation.
pub fn mix_seed(seed: u64, stream: u64, shot: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(shot.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Count shots for which `shot_fails` returns true. Order-independent, so
/// the parallel and sequential paths agree exactly.
#[cfg(feature = "parallel")]
pub fn count_failures<F>(shots: u64, shot_fails: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    use rayon::prelude::*;
    (0..shots)
        .into_par_iter()
        .filter(|&s| shot_fails(s))
        .count() as u64
}

#[cfg(not(feature = "parallel"))]
pub fn count_failures<F>(shots: u64, shot_fails: F) -> u64
where
    F: Fn(u64) -> bool + Sync,
{
    (0..shots).filter(|&s| shot_fails(s)).count() as u64
}

/// Per-shot failure flags (used where the caller needs the raw sequence,
/// e.g. paired comparisons and bootstrap resampling).
#[cfg(feature = "parallel")]
pub fn map_shots<T, F>(shots: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..shots).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_shots<T, F>(shots: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..shots).map(f).collect()
}
