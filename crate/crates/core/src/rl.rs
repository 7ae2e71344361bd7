//! Temporally-constrained readout scheduling as an RL environment, trained
//! with REINFORCE over a masked-softmax linear policy, plus a brute-force
//! constrained oracle for small instances.
//!
//! Each readout unit keeps a cost-sorted sequence of candidate modality
//! choices (a pair element is either one joint instance or two independent
//! ones) and a pointer into it. Actions shift one pointer by ±1; the queue
//! length tau is recomputed by rescheduling all current choices, and the
//! shaped reward trades queue movement against total cost under the depth
//! bound m.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::modalities::{cost_ind, cost_joint, enumerate_modalities, ModalityInstance, ModalityKind, Unit};
use crate::noise::DeviceProfile;
use crate::scheduler::{resolve_conflicts, total_cost, units, Assignment, Schedule};

/// One selectable point in a unit's sequence: the instances it schedules and
/// their summed cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqElem {
    pub instances: Vec<ModalityInstance>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub units: Vec<Unit>,
    /// Per unit, candidates with cost <= the unit's direct-measurement cost,
    /// ascending by cost.
    pub sequences: Vec<Vec<SeqElem>>,
    /// 0-based pointer into each sequence.
    pub pointers: Vec<usize>,
    pub tau: usize,
    pub m: usize,
    pub step_count: usize,
    /// Deterministic tiebreak seed handed to the conflict resolver.
    pub order_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    pub unit: usize,
    pub delta: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub alpha_w: f64,
    pub beta_w: f64,
    pub gamma_w: f64,
    /// Optional per-step (alpha_w, beta_w) overrides; the last entry holds
    /// for all later steps.
    pub schedule: Option<Vec<(f64, f64)>>,
}

impl RewardParams {
    pub fn fixed(alpha_w: f64, beta_w: f64, gamma_w: f64) -> Self {
        RewardParams {
            alpha_w,
            beta_w,
            gamma_w,
            schedule: None,
        }
    }

    /// Default weights: unit queue terms, cost term normalized to O(1).
    pub fn defaults(env: &EnvState, p: &DeviceProfile) -> Self {
        let max_mer = p.mer.iter().cloned().fold(0.0f64, f64::max).max(1e-12);
        RewardParams::fixed(1.0, 1.0, 1.0 / (env.units.len() as f64 * max_mer))
    }

    fn at(&self, t: usize) -> (f64, f64) {
        match &self.schedule {
            None => (self.alpha_w, self.beta_w),
            Some(table) if table.is_empty() => (self.alpha_w, self.beta_w),
            Some(table) => table[t.min(table.len() - 1)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut all = vec![self.alpha_w, self.beta_w, self.gamma_w];
        if let Some(tab) = &self.schedule {
            for &(a, b) in tab {
                all.push(a);
                all.push(b);
            }
        }
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("reward weights must be finite and >= 0".into()));
        }
        Ok(())
    }
}

fn filtered_singles(lat: &Lattice, p: &DeviceProfile, q: usize) -> Result<Vec<(f64, ModalityInstance)>> {
    let insts = enumerate_modalities(lat, Unit::Single(q))?;
    let dm_cost = insts
        .iter()
        .find(|i| i.kind == ModalityKind::Dm)
        .map(|i| cost_ind(i, p))
        .expect("D-M always enumerated")?;
    let mut out: Vec<(f64, ModalityInstance)> = Vec::new();
    for inst in insts {
        let c = cost_ind(&inst, p)?;
        if c <= dm_cost + 1e-15 {
            out.push((c, inst));
        }
    }
    out.sort_by(|a, b| {
        (a.0, a.1.gate_count, a.1.measured)
            .partial_cmp(&(b.0, b.1.gate_count, b.1.measured))
            .unwrap()
    });
    Ok(out)
}

fn unit_sequence(lat: &Lattice, p: &DeviceProfile, unit: Unit) -> Result<Vec<SeqElem>> {
    let mut elems = Vec::new();
    match unit {
        Unit::Single(q) => {
            for (c, inst) in filtered_singles(lat, p, q)? {
                elems.push(SeqElem {
                    instances: vec![inst],
                    cost: c,
                });
            }
        }
        Unit::Pair(a, b) => {
            let sa = filtered_singles(lat, p, a)?;
            let sb = filtered_singles(lat, p, b)?;
            let dm_pair = sa
                .iter()
                .find(|(_, i)| i.kind == ModalityKind::Dm)
                .unwrap()
                .0
                + sb.iter().find(|(_, i)| i.kind == ModalityKind::Dm).unwrap().0;
            for inst in enumerate_modalities(lat, unit)? {
                let c = cost_joint(&inst, p)?;
                if c <= dm_pair + 1e-15 {
                    elems.push(SeqElem {
                        instances: vec![inst],
                        cost: c,
                    });
                }
            }
            for (ca, ia) in &sa {
                for (cb, ib) in &sb {
                    if ca + cb <= dm_pair + 1e-15 {
                        elems.push(SeqElem {
                            instances: vec![ia.clone(), ib.clone()],
                            cost: ca + cb,
                        });
                    }
                }
            }
            elems.sort_by(|x, y| {
                let kx = (x.cost, x.instances.len(), x.instances[0].measured);
                let ky = (y.cost, y.instances.len(), y.instances[0].measured);
                kx.partial_cmp(&ky).unwrap()
            });
        }
    }
    if elems.is_empty() {
        return Err(Error::Config(format!("unit {unit:?} has an empty sequence")));
    }
    Ok(elems)
}

impl EnvState {
    pub fn assignment(&self) -> Assignment {
        Assignment::from_choices(
            self.units
                .iter()
                .zip(&self.sequences)
                .zip(&self.pointers)
                .map(|((u, seq), &ptr)| (*u, seq[ptr].instances.clone()))
                .collect(),
        )
    }

    pub fn schedule(&self, lat: &Lattice) -> Result<Schedule> {
        resolve_conflicts(lat, &self.assignment(), self.order_seed)
    }

    pub fn total_cost(&self) -> f64 {
        self.pointers
            .iter()
            .zip(&self.sequences)
            .map(|(&ptr, seq)| seq[ptr].cost)
            .sum()
    }

    pub fn feasible(&self) -> bool {
        self.tau <= self.m
    }
}

/// Build the environment in its cheapest-pointer initial state.
pub fn build_env(lat: &Lattice, p: &DeviceProfile, m: usize) -> Result<EnvState> {
    if m == 0 {
        return Err(Error::Config("queue bound m must be >= 1".into()));
    }
    p.validate(lat)?;
    let us = units(lat);
    let mut sequences = Vec::with_capacity(us.len());
    for &u in &us {
        sequences.push(unit_sequence(lat, p, u)?);
    }
    let mut env = EnvState {
        units: us,
        pointers: vec![0; sequences.len()],
        sequences,
        tau: 0,
        m,
        step_count: 0,
        order_seed: p.seed,
    };
    env.tau = env.schedule(lat)?.tau;
    Ok(env)
}

pub fn valid_actions(s: &EnvState) -> Vec<Action> {
    let mut out = Vec::new();
    for (i, seq) in s.sequences.iter().enumerate() {
        for delta in [-1i32, 1] {
            let next = s.pointers[i] as i64 + delta as i64;
            if (0..seq.len() as i64).contains(&next) {
                out.push(Action { unit: i, delta });
            }
        }
    }
    out
}

/// Apply one action; returns the successor state and its shaped reward.
pub fn step(lat: &Lattice, s: &EnvState, a: Action, r: &RewardParams) -> Result<(EnvState, f64)> {
    let next_ptr = s.pointers[a.unit] as i64 + a.delta as i64;
    if a.delta.abs() != 1 || !(0..s.sequences[a.unit].len() as i64).contains(&next_ptr) {
        return Err(Error::Config(format!("invalid action {a:?}")));
    }
    let mut next = s.clone();
    next.pointers[a.unit] = next_ptr as usize;
    next.tau = next.schedule(lat)?.tau;
    next.step_count = s.step_count + 1;

    let (alpha_w, beta_w) = r.at(s.step_count);
    let m = s.m as f64;
    let dq_minus = s.tau.saturating_sub(next.tau) as f64;
    let dq_plus = next.tau.saturating_sub(s.tau) as f64;
    let mut reward =
        alpha_w * dq_minus / m - beta_w * dq_plus / m - r.gamma_w * next.total_cost();
    if next.tau > next.m {
        // Exploration through infeasible territory is allowed but taxed.
        reward -= beta_w * (next.tau - next.m) as f64 / m;
    }
    Ok((next, reward))
}

/// Linear policy: logits = W · features, masked softmax over valid actions.
/// Features are the pointer one-hots plus normalized tau.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Policy {
    /// One weight row per action (unit-major, delta -1 then +1).
    pub weights: Vec<Vec<f64>>,
    feature_offsets: Vec<usize>,
    num_features: usize,
}

impl Policy {
    pub fn new(env: &EnvState) -> Self {
        let mut feature_offsets = Vec::with_capacity(env.sequences.len());
        let mut off = 0;
        for seq in &env.sequences {
            feature_offsets.push(off);
            off += seq.len();
        }
        let num_features = off + 1;
        Policy {
            weights: vec![vec![0.0; num_features]; 2 * env.sequences.len()],
            feature_offsets,
            num_features,
        }
    }

    pub fn features(&self, s: &EnvState) -> Vec<f64> {
        let mut f = vec![0.0; self.num_features];
        for (i, &ptr) in s.pointers.iter().enumerate() {
            f[self.feature_offsets[i] + ptr] = 1.0;
        }
        f[self.num_features - 1] = s.tau as f64 / s.m as f64;
        f
    }

    fn action_index(a: Action) -> usize {
        2 * a.unit + usize::from(a.delta == 1)
    }

    /// Masked softmax over the valid actions.
    pub fn distribution(&self, s: &EnvState, valid: &[Action]) -> Vec<f64> {
        let f = self.features(s);
        let logits: Vec<f64> = valid
            .iter()
            .map(|&a| {
                self.weights[Self::action_index(a)]
                    .iter()
                    .zip(&f)
                    .map(|(w, x)| w * x)
                    .sum()
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }

    fn sample<R: Rng>(&self, s: &EnvState, valid: &[Action], rng: &mut R) -> (usize, Vec<f64>) {
        let probs = self.distribution(s, valid);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return (k, probs);
            }
        }
        (probs.len() - 1, probs)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Defaults to 4 x number of units when absent.
    pub steps_per_episode: Option<usize>,
    pub learning_rate: f64,
    pub discount: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            steps_per_episode: None,
            learning_rate: 0.1,
            discount: 0.95,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub epoch: usize,
    pub best_cost: f64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: Policy,
    pub best_cost: f64,
    pub best_assignment: Assignment,
    pub best_schedule: Schedule,
    pub curve: Vec<CurvePoint>,
}

/// REINFORCE with a moving-average baseline. Episodes are fixed-length and
/// reset to the cheapest-pointer state; the best feasible configuration ever
/// visited is returned alongside the per-epoch curve.
pub fn train(
    lat: &Lattice,
    env0: &EnvState,
    r: &RewardParams,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    r.validate()?;
    if cfg.epochs == 0 || !(0.0..=1.0).contains(&cfg.discount) || cfg.learning_rate <= 0.0 {
        return Err(Error::Config("bad training config".into()));
    }
    let steps = cfg
        .steps_per_episode
        .unwrap_or(4 * env0.units.len())
        .max(1);
    let mut policy = Policy::new(env0);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut baseline = 0.0f64;
    let mut baseline_init = false;

    let mut best: Option<(f64, EnvState)> = None;
    let consider = |state: &EnvState, best: &mut Option<(f64, EnvState)>| {
        if !state.feasible() {
            return;
        }
        let c = state.total_cost();
        if best.as_ref().map_or(true, |(bc, _)| c < *bc) {
            *best = Some((c, state.clone()));
        }
    };
    consider(env0, &mut best);

    // Warm start: the all-direct configuration fires in one tick and is
    // feasible for every m, so the search never comes back empty-handed.
    {
        let mut direct = env0.clone();
        for (ptr, seq) in direct.pointers.iter_mut().zip(&direct.sequences) {
            if let Some(i) = seq.iter().position(|e| {
                e.instances.iter().all(|inst| inst.kind == ModalityKind::Dm)
            }) {
                *ptr = i;
            }
        }
        direct.tau = direct.schedule(lat)?.tau;
        consider(&direct, &mut best);
    }

    let mut curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut state = env0.clone();
        state.step_count = 0;
        let mut trajectory: Vec<(Vec<f64>, Vec<Action>, Vec<f64>, usize, f64)> = Vec::new();
        let mut episode_reward = 0.0;
        for _ in 0..steps {
            let valid = valid_actions(&state);
            if valid.is_empty() {
                break;
            }
            let (k, probs) = policy.sample(&state, &valid, &mut rng);
            let feats = policy.features(&state);
            let (next, reward) = step(lat, &state, valid[k], r)?;
            trajectory.push((feats, valid, probs, k, reward));
            episode_reward += reward;
            consider(&next, &mut best);
            state = next;
        }

        // Discounted returns, then the policy-gradient update.
        let mut g = 0.0f64;
        let mut returns = vec![0.0; trajectory.len()];
        for (t, entry) in trajectory.iter().enumerate().rev() {
            g = entry.4 + cfg.discount * g;
            returns[t] = g;
        }
        let episode_return = returns.first().copied().unwrap_or(0.0);
        if !baseline_init {
            baseline = episode_return;
            baseline_init = true;
        } else {
            baseline = 0.9 * baseline + 0.1 * episode_return;
        }
        for (t, (feats, valid, probs, chosen, _)) in trajectory.iter().enumerate() {
            let advantage = returns[t] - baseline;
            for (k, &a) in valid.iter().enumerate() {
                let indicator = if k == *chosen { 1.0 } else { 0.0 };
                let coef = cfg.learning_rate * advantage * (indicator - probs[k]);
                let row = &mut policy.weights[Policy::action_index(a)];
                for (w, x) in row.iter_mut().zip(feats) {
                    *w += coef * x;
                }
            }
        }

        let mean_reward = if trajectory.is_empty() {
            0.0
        } else {
            episode_reward / trajectory.len() as f64
        };
        curve.push(CurvePoint {
            epoch,
            best_cost: best.as_ref().map(|(c, _)| *c).unwrap_or(f64::INFINITY),
            mean_reward,
        });
    }

    let (best_cost, best_state) = best.ok_or(Error::NoFeasibleSchedule(env0.m))?;
    let best_assignment = best_state.assignment();
    let best_schedule = best_state.schedule(lat)?;
    debug_assert!(best_schedule.tau <= env0.m);
    Ok(TrainOutcome {
        policy,
        best_cost,
        best_assignment,
        best_schedule,
        curve,
    })
}

/// Exhaustive minimum over all per-unit sequence choices with tau <= m.
pub fn constrained_oracle(
    lat: &Lattice,
    p: &DeviceProfile,
    m: usize,
) -> Result<(f64, Assignment)> {
    let env = build_env(lat, p, m)?;
    let total: u128 = env
        .sequences
        .iter()
        .map(|s| s.len() as u128)
        .product();
    if total > 10_000_000 {
        return Err(Error::SearchSpaceTooLarge(total));
    }
    let mut pointers = vec![0usize; env.sequences.len()];
    let mut best: Option<(f64, Assignment)> = None;
    loop {
        let cost_sum: f64 = pointers
            .iter()
            .zip(&env.sequences)
            .map(|(&ptr, seq)| seq[ptr].cost)
            .sum();
        // Prune: tau check is the expensive part.
        if best.as_ref().map_or(true, |(bc, _)| cost_sum < *bc) {
            let a = Assignment::from_choices(
                env.units
                    .iter()
                    .zip(&env.sequences)
                    .zip(&pointers)
                    .map(|((u, seq), &ptr)| (*u, seq[ptr].instances.clone()))
                    .collect(),
            );
            let sched = resolve_conflicts(lat, &a, env.order_seed)?;
            if sched.tau <= m {
                best = Some((cost_sum, a));
            }
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == pointers.len() {
                let (c, a) = best.ok_or(Error::NoFeasibleSchedule(m))?;
                debug_assert!((total_cost(&a, p)? - c).abs() < 1e-12);
                return Ok((c, a));
            }
            pointers[i] += 1;
            if pointers[i] < env.sequences[i].len() {
                break;
            }
            pointers[i] = 0;
            i += 1;
        }
    }
}
