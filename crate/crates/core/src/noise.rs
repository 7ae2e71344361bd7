//! Per-qubit error profiles and the synthetic transforms used by the sweeps.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Floor/ceiling for measurement-flip probabilities.
pub const MER_FLOOR: f64 = 1e-6;
pub const MER_CEIL: f64 = 0.5;
/// Depolarizing probabilities are capped at the fully-mixing point.
pub const DEPOL_CEIL: f64 = 0.75;

pub const DEFAULT_ROUND_DEPOL: f64 = 0.001;
pub const DEFAULT_IDLE_DEPOL_PER_TICK: f64 = 0.0005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    /// Measurement error rate per qubit, indexed by lattice qubit id.
    pub mer: Vec<f64>,
    /// Uniform two-qubit gate error rate.
    pub ger: f64,
    /// Depolarizing probability per data qubit per syndrome round.
    pub round_depol: f64,
    /// Depolarizing probability per idle data qubit per scheduling tick.
    pub idle_depol_per_tick: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileTransform {
    /// Data-qubit MER scale; 1.0 is the unmodified profile.
    pub alpha: f64,
    /// MER spread scale about the mean; 1.0 is the unmodified profile.
    pub std_scale: f64,
    /// Idle degrade coefficient, multiplies `idle_depol_per_tick`.
    pub beta: f64,
}

impl Default for ProfileTransform {
    fn default() -> Self {
        ProfileTransform {
            alpha: 1.0,
            std_scale: 1.0,
            beta: 1.0,
        }
    }
}

/// On-disk profile schema. Either explicit per-qubit rates (`default_mer`
/// plus `mer_overrides`) or a synthetic distribution spec.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFile {
    pub name: String,
    pub ger: f64,
    #[serde(default)]
    pub default_mer: Option<f64>,
    #[serde(default)]
    pub mer_overrides: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    #[serde(default)]
    pub round_depol: Option<f64>,
    #[serde(default)]
    pub idle_depol_per_tick: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub mean_mer: f64,
    pub std_mer: f64,
}

fn clamp_mer(p: f64) -> f64 {
    p.clamp(MER_FLOOR, MER_CEIL)
}

fn check_prob(name: &str, value: f64, hi: f64) -> Result<()> {
    if !value.is_finite() || !(0.0..=hi).contains(&value) {
        return Err(Error::ProbabilityOutOfRange {
            name: name.to_string(),
            value,
        });
    }
    Ok(())
}

/// Load a profile file and populate it against a lattice.
pub fn load_profile(path: &Path, lat: &Lattice) -> Result<DeviceProfile> {
    let text = std::fs::read_to_string(path)?;
    let file: ProfileFile = serde_json::from_str(&text)?;
    profile_from_file(&file, lat)
}

pub fn profile_from_file(file: &ProfileFile, lat: &Lattice) -> Result<DeviceProfile> {
    check_prob("ger", file.ger, MER_CEIL)?;
    let round_depol = file.round_depol.unwrap_or(DEFAULT_ROUND_DEPOL);
    let idle = file.idle_depol_per_tick.unwrap_or(DEFAULT_IDLE_DEPOL_PER_TICK);
    check_prob("round_depol", round_depol, DEPOL_CEIL)?;
    check_prob("idle_depol_per_tick", idle, DEPOL_CEIL)?;

    let mut profile = if let Some(spec) = &file.synthetic {
        let mut p = synthesize_profile(lat, spec.mean_mer, spec.std_mer, file.ger, file.seed)?;
        p.name = file.name.clone();
        p
    } else {
        let default = file.default_mer.ok_or_else(|| {
            Error::InvalidProfile("profile needs default_mer or a synthetic spec".into())
        })?;
        check_prob("default_mer", default, MER_CEIL)?;
        DeviceProfile {
            name: file.name.clone(),
            mer: vec![default; lat.num_qubits()],
            ger: file.ger,
            round_depol,
            idle_depol_per_tick: idle,
            seed: file.seed,
        }
    };
    profile.round_depol = round_depol;
    profile.idle_depol_per_tick = idle;

    for (key, &value) in &file.mer_overrides {
        let q: usize = key
            .parse()
            .map_err(|_| Error::InvalidProfile(format!("bad qubit index {key:?}")))?;
        if q >= lat.num_qubits() {
            return Err(Error::ProfileMismatch(format!(
                "override for qubit {q} but lattice has {} qubits",
                lat.num_qubits()
            )));
        }
        check_prob(&format!("mer[{q}]"), value, MER_CEIL)?;
        profile.mer[q] = value;
    }
    Ok(profile)
}

/// Draw per-qubit MER i.i.d. from a normal(mean, std) clamped into
/// `[MER_FLOOR, MER_CEIL]`. Pure function of (lattice, parameters, seed).
pub fn synthesize_profile(
    lat: &Lattice,
    mean_mer: f64,
    std_mer: f64,
    ger: f64,
    seed: u64,
) -> Result<DeviceProfile> {
    check_prob("ger", ger, MER_CEIL)?;
    if !mean_mer.is_finite() || !std_mer.is_finite() || std_mer < 0.0 {
        return Err(Error::InvalidProfile(format!(
            "bad synthetic parameters mean={mean_mer} std={std_mer}"
        )));
    }
    let lo = mean_mer - 4.0 * std_mer;
    let hi = mean_mer + 4.0 * std_mer;
    if hi < MER_FLOOR || lo > MER_CEIL {
        return Err(Error::InvalidProfile(format!(
            "mean {mean_mer} +- 4 std {std_mer} not clampable into [{MER_FLOOR}, {MER_CEIL}]"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mer: Vec<f64> = if std_mer == 0.0 {
        vec![clamp_mer(mean_mer); lat.num_qubits()]
    } else {
        let dist = Normal::new(mean_mer, std_mer)
            .map_err(|e| Error::InvalidProfile(e.to_string()))?;
        (0..lat.num_qubits())
            .map(|_| clamp_mer(dist.sample(&mut rng)))
            .collect()
    };
    Ok(DeviceProfile {
        name: format!("synthetic-{seed}"),
        mer,
        ger,
        round_depol: DEFAULT_ROUND_DEPOL,
        idle_depol_per_tick: DEFAULT_IDLE_DEPOL_PER_TICK,
        seed,
    })
}

/// Scale data-qubit MER by `alpha`, leaving measure-qubit MER fixed.
pub fn scale_data_mer(p: &DeviceProfile, lat: &Lattice, alpha: f64) -> DeviceProfile {
    assert!(alpha >= 0.0 && alpha.is_finite(), "alpha must be >= 0");
    let mut out = p.clone();
    for &q in &lat.data {
        out.mer[q] = clamp_mer(alpha * p.mer[q]);
    }
    out
}

/// Rescale the MER spread about its mean: `mer <- mu + s * (mer - mu)`.
/// `s = 1` is the identity, `s = 0` collapses to the homogeneous mean.
pub fn scale_mer_std(p: &DeviceProfile, s: f64) -> DeviceProfile {
    assert!(s >= 0.0 && s.is_finite(), "std scale must be >= 0");
    if s == 1.0 {
        return p.clone();
    }
    let mu = p.mer.iter().sum::<f64>() / p.mer.len() as f64;
    let mut out = p.clone();
    for m in &mut out.mer {
        *m = clamp_mer(mu + s * (*m - mu));
    }
    out
}

/// Compounded idle depolarizing probability after `ticks_waited` ticks with
/// degrade coefficient `beta`, capped at the fully-mixing ceiling.
pub fn idle_depolarize_prob(p: &DeviceProfile, ticks_waited: usize, beta: f64) -> f64 {
    let per_tick = (beta * p.idle_depol_per_tick).clamp(0.0, DEPOL_CEIL);
    let kept = (1.0 - per_tick).powi(ticks_waited as i32);
    (1.0 - kept).clamp(0.0, DEPOL_CEIL)
}

impl DeviceProfile {
    /// Check the profile covers every lattice qubit with in-range rates.
    pub fn validate(&self, lat: &Lattice) -> Result<()> {
        if self.mer.len() != lat.num_qubits() {
            return Err(Error::ProfileMismatch(format!(
                "{} MER entries for {} qubits",
                self.mer.len(),
                lat.num_qubits()
            )));
        }
        for (q, &m) in self.mer.iter().enumerate() {
            if !(0.0..=MER_CEIL).contains(&m) {
                return Err(Error::ProbabilityOutOfRange {
                    name: format!("mer[{q}]"),
                    value: m,
                });
            }
        }
        check_prob("ger", self.ger, MER_CEIL)?;
        check_prob("round_depol", self.round_depol, DEPOL_CEIL)?;
        check_prob("idle_depol_per_tick", self.idle_depol_per_tick, DEPOL_CEIL)?;
        Ok(())
    }

    pub fn mean_mer(&self) -> f64 {
        self.mer.iter().sum::<f64>() / self.mer.len() as f64
    }
}
