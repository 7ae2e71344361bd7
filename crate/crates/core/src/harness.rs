//! Experiment orchestration: memory runs across distances and schedulers,
//! parameter sweeps, effective-code-distance fitting, bootstrap comparisons,
//! and long-format CSV emission.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::mix_seed;
use crate::lattice::{build_lattice, Lattice};
use crate::noise::{
    load_profile, profile_from_file, scale_data_mer, scale_mer_std, DeviceProfile, ProfileFile,
    ProfileTransform,
};
use crate::rl::{build_env, train, RewardParams, TrainConfig};
use crate::scheduler::{all_dm, resolve_conflicts, select_local, total_cost, Schedule};
use crate::sim::{ErrorEstimate, MemoryRun};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    /// All-direct-measurement baseline.
    Original,
    MsLocal,
    MsRl { m: usize },
}

impl SchedulerKind {
    pub fn label(&self) -> String {
        match self {
            SchedulerKind::Original => "original".into(),
            SchedulerKind::MsLocal => "ms_local".into(),
            SchedulerKind::MsRl { m } => format!("ms_rl_m{m}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub distances: Vec<usize>,
    pub rounds: usize,
    /// Path to a profile file; mutually exclusive with `profile`.
    #[serde(default)]
    pub profile_path: Option<PathBuf>,
    /// Inline profile definition.
    #[serde(default)]
    pub profile: Option<ProfileFile>,
    #[serde(default = "ProfileTransform::default")]
    pub transform: ProfileTransform,
    pub schedulers: Vec<SchedulerKind>,
    pub shots: u64,
    pub seed: u64,
    #[serde(default)]
    pub train: Option<TrainConfig>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.distances.is_empty() || self.schedulers.is_empty() {
            return Err(Error::Config("need at least one distance and scheduler".into()));
        }
        if self.distances.iter().any(|d| d % 2 == 0) {
            return Err(Error::Config("distances must be odd".into()));
        }
        if self.shots < 1000 {
            return Err(Error::Config("shots must be >= 1000".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be >= 1".into()));
        }
        if self.profile_path.is_some() == self.profile.is_some() {
            return Err(Error::Config(
                "exactly one of profile_path / profile must be set".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn base_profile(&self, lat: &Lattice) -> Result<DeviceProfile> {
        match (&self.profile_path, &self.profile) {
            (Some(p), None) => load_profile(p, lat),
            (None, Some(f)) => profile_from_file(f, lat),
            _ => Err(Error::Config("profile source misconfigured".into())),
        }
    }

    /// Base profile with the alpha / std-scale transform applied.
    pub fn profile_for(&self, lat: &Lattice, transform: &ProfileTransform) -> Result<DeviceProfile> {
        let base = self.base_profile(lat)?;
        let scaled = scale_data_mer(&base, lat, transform.alpha);
        Ok(scale_mer_std(&scaled, transform.std_scale))
    }
}

/// One long-format result row: `sweep_key,d,scheduler,value,rate,ci_lo,ci_hi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub sweep_key: String,
    pub d: usize,
    pub scheduler: String,
    pub value: f64,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut out = String::from("sweep_key,d,scheduler,value,rate,ci_lo,ci_hi\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.sweep_key, r.d, r.scheduler, r.value, r.rate, r.ci_lo, r.ci_hi
        ));
    }
    out
}

/// Build the schedule a scheduler kind produces on this lattice/profile.
/// For MS-RL the trained best configuration is returned with its cost.
pub fn schedule_for(
    lat: &Lattice,
    p: &DeviceProfile,
    kind: &SchedulerKind,
    seed: u64,
    train_cfg: Option<&TrainConfig>,
) -> Result<(Schedule, f64)> {
    match kind {
        SchedulerKind::Original => {
            let a = all_dm(lat);
            let c = total_cost(&a, p)?;
            Ok((resolve_conflicts(lat, &a, seed)?, c))
        }
        SchedulerKind::MsLocal => {
            let a = select_local(lat, p)?;
            let c = total_cost(&a, p)?;
            Ok((resolve_conflicts(lat, &a, seed)?, c))
        }
        SchedulerKind::MsRl { m } => {
            let env = build_env(lat, p, *m)?;
            let r = RewardParams::defaults(&env, p);
            let mut cfg = train_cfg.cloned().unwrap_or_default();
            cfg.seed = mix_seed(cfg.seed, 7, seed);
            let out = train(lat, &env, &r, &cfg)?;
            Ok((out.best_schedule, out.best_cost))
        }
    }
}

/// One estimate per (distance, scheduler).
pub fn run_memory(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &d in &cfg.distances {
        let lat = build_lattice(d)?;
        let p = cfg.profile_for(&lat, &cfg.transform)?;
        for kind in &cfg.schedulers {
            let (sched, _) = schedule_for(&lat, &p, kind, cfg.seed, cfg.train.as_ref())?;
            let run = MemoryRun::prepare(&lat, &sched, &p, cfg.rounds, cfg.transform.beta, cfg.seed)?;
            let est = run.estimate(cfg.shots);
            rows.push(Row {
                sweep_key: "memory".into(),
                d,
                scheduler: kind.label(),
                value: 1.0,
                rate: est.rate,
                ci_lo: est.ci_lo,
                ci_hi: est.ci_hi,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Alpha,
    Std,
    Beta,
    DepthM,
}

impl SweepKind {
    pub fn key(&self) -> &'static str {
        match self {
            SweepKind::Alpha => "alpha",
            SweepKind::Std => "std",
            SweepKind::Beta => "beta",
            SweepKind::DepthM => "depth_m",
        }
    }
}

/// Sweep one knob over a grid. For `DepthM` the rate columns carry the
/// trained best cost instead of an error rate.
pub fn sweep(kind: SweepKind, grid: &[f64], cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    cfg.validate()?;
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mut rows = Vec::new();
    for &v in grid {
        match kind {
            SweepKind::DepthM => {
                let m = v as usize;
                if m == 0 || v.fract() != 0.0 {
                    return Err(Error::Config(format!("bad depth value {v}")));
                }
                for &d in &cfg.distances {
                    let lat = build_lattice(d)?;
                    let p = cfg.profile_for(&lat, &cfg.transform)?;
                    for kind_s in &cfg.schedulers {
                        let forced = match kind_s {
                            SchedulerKind::MsRl { .. } => SchedulerKind::MsRl { m },
                            other => other.clone(),
                        };
                        let (sched, cost) =
                            schedule_for(&lat, &p, &forced, cfg.seed, cfg.train.as_ref())?;
                        debug_assert!(sched.validate(&lat).is_ok());
                        rows.push(Row {
                            sweep_key: "depth_m".into(),
                            d,
                            scheduler: forced.label(),
                            value: v,
                            rate: cost,
                            ci_lo: cost,
                            ci_hi: cost,
                        });
                    }
                }
            }
            _ => {
                let mut transform = cfg.transform;
                match kind {
                    SweepKind::Alpha => transform.alpha = v,
                    SweepKind::Std => transform.std_scale = v,
                    SweepKind::Beta => transform.beta = v,
                    SweepKind::DepthM => unreachable!(),
                }
                let point = ExperimentConfig {
                    transform,
                    ..cfg.clone()
                };
                for mut r in run_memory(&point)? {
                    r.sweep_key = kind.key().into();
                    r.value = v;
                    rows.push(r);
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.value, a.d, a.scheduler.clone())
            .partial_cmp(&(b.value, b.d, b.scheduler.clone()))
            .unwrap()
    });
    Ok(rows)
}

/// Scheduler pairs whose rate difference changes sign along the sweep value.
pub fn detect_crossovers(rows: &[Row]) -> Vec<serde_json::Value> {
    let mut by_sched: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        by_sched
            .entry((r.scheduler.clone(), r.d))
            .or_default()
            .push((r.value, r.rate));
    }
    for series in by_sched.values_mut() {
        series.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    }
    let keys: Vec<_> = by_sched.keys().cloned().collect();
    let mut notes = Vec::new();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            if keys[i].1 != keys[j].1 {
                continue;
            }
            let (sa, sb) = (&by_sched[&keys[i]], &by_sched[&keys[j]]);
            if sa.len() != sb.len() {
                continue;
            }
            for w in 0..sa.len().saturating_sub(1) {
                let d0 = sa[w].1 - sb[w].1;
                let d1 = sa[w + 1].1 - sb[w + 1].1;
                if d0 != 0.0 && d1 != 0.0 && d0.signum() != d1.signum() {
                    notes.push(serde_json::json!({
                        "d": keys[i].1,
                        "scheduler_a": keys[i].0,
                        "scheduler_b": keys[j].0,
                        "between_values": [sa[w].0, sa[w + 1].0],
                    }));
                }
            }
        }
    }
    notes
}

/// Ordinary least squares y = b0 + b1 x, with R².
pub fn linear_regression(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    (intercept, slope, r2)
}

#[derive(Debug, Clone, Serialize)]
pub struct EcdFit {
    pub a: f64,
    pub p_ratio: f64,
    /// distance -> effective code distance of the compared scheduler.
    pub ecd: BTreeMap<usize, f64>,
    /// Baseline fit residuals in log space, per distance.
    pub residuals: BTreeMap<usize, f64>,
}

/// Fit `rate = a * p_ratio^(d/2)` on the baseline rows, then express the
/// compared scheduler's rates as effective code distances.
pub fn fit_ecd(baseline: &[(usize, f64)], compared: &[(usize, f64)]) -> Result<EcdFit> {
    if baseline.len() < 3 {
        return Err(Error::FitRejected("need >= 3 baseline distances".into()));
    }
    if baseline.iter().chain(compared).any(|&(_, r)| r <= 0.0) {
        return Err(Error::FitRejected("rates must be positive".into()));
    }
    let xs: Vec<f64> = baseline.iter().map(|&(d, _)| d as f64 / 2.0).collect();
    let ys: Vec<f64> = baseline.iter().map(|&(_, r)| r.ln()).collect();
    let (b0, b1, _) = linear_regression(&xs, &ys);
    if b1 >= 0.0 {
        return Err(Error::FitRejected(format!(
            "rates non-decreasing with distance (slope {b1:.3}); above threshold"
        )));
    }
    let a = b0.exp();
    let p_ratio = b1.exp();
    let residuals = baseline
        .iter()
        .map(|&(d, r)| (d, r.ln() - (b0 + b1 * d as f64 / 2.0)))
        .collect();
    let ecd = compared
        .iter()
        .map(|&(d, r)| (d, 2.0 * (r.ln() - b0) / b1))
        .collect();
    Ok(EcdFit {
        a,
        p_ratio,
        ecd,
        residuals,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub d: usize,
    pub shots: u64,
    pub baseline: ErrorEstimate,
    pub improved: ErrorEstimate,
    /// baseline rate / improved rate.
    pub ratio: f64,
    pub ratio_ci: (f64, f64),
    /// True when the improved scheduler saw zero failures and the ratio is
    /// only a lower bound.
    pub ratio_is_lower_bound: bool,
    /// The profile's error ratios, both conventions labeled explicitly.
    pub gm_ratio_mer_over_ger: f64,
    pub gm_ratio_ger_over_mer: f64,
}

fn block_rates(flags: &[bool], blocks: usize) -> Vec<f64> {
    let n = flags.len();
    let size = (n / blocks).max(1);
    flags
        .chunks(size)
        .map(|c| c.iter().filter(|&&f| f).count() as f64 / c.len() as f64)
        .collect()
}

/// Paired comparison of two schedulers on one distance with a block
/// bootstrap over shots for the ratio CI.
pub fn compare(cfg: &ExperimentConfig, d: usize) -> Result<CompareReport> {
    cfg.validate()?;
    let lat = build_lattice(d)?;
    let p = cfg.profile_for(&lat, &cfg.transform)?;
    if cfg.schedulers.len() != 2 {
        return Err(Error::Config("compare needs exactly 2 schedulers".into()));
    }
    let mut flags = Vec::new();
    let mut ests = Vec::new();
    for kind in &cfg.schedulers {
        let (sched, _) = schedule_for(&lat, &p, kind, cfg.seed, cfg.train.as_ref())?;
        let run = MemoryRun::prepare(&lat, &sched, &p, cfg.rounds, cfg.transform.beta, cfg.seed)?;
        let f = run.failure_flags(cfg.shots);
        ests.push(ErrorEstimate::from_counts(
            f.iter().filter(|&&x| x).count() as u64,
            cfg.shots,
        ));
        flags.push(f);
    }
    let (base, imp) = (ests[0], ests[1]);
    let lower_bound = imp.failures == 0;
    let denom = if lower_bound {
        0.5 / cfg.shots as f64
    } else {
        imp.rate
    };
    let ratio = base.rate / denom;

    const BLOCKS: usize = 100;
    const RESAMPLES: usize = 1000;
    let ba = block_rates(&flags[0], BLOCKS);
    let bb = block_rates(&flags[1], BLOCKS);
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, 11, d as u64));
    let mut samples = Vec::with_capacity(RESAMPLES);
    for _ in 0..RESAMPLES {
        let mut ra = 0.0;
        let mut rb = 0.0;
        for _ in 0..ba.len() {
            ra += ba[rng.gen_range(0..ba.len())];
            rb += bb[rng.gen_range(0..bb.len())];
        }
        ra /= ba.len() as f64;
        rb /= bb.len() as f64;
        let rb = if rb == 0.0 { 0.5 / cfg.shots as f64 } else { rb };
        samples.push(ra / rb);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = samples[(RESAMPLES as f64 * 0.025) as usize];
    let hi = samples[(RESAMPLES as f64 * 0.975) as usize - 1];

    let mean_mer = p.mean_mer();
    Ok(CompareReport {
        d,
        shots: cfg.shots,
        baseline: base,
        improved: imp,
        ratio,
        ratio_ci: (lo, hi),
        ratio_is_lower_bound: lower_bound,
        gm_ratio_mer_over_ger: mean_mer / p.ger.max(1e-15),
        gm_ratio_ger_over_mer: p.ger / mean_mer.max(1e-15),
    })
}
