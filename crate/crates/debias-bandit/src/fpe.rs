//! Fair Phased Elimination: per-group G-exploration with suboptimal-action
//! elimination, Δ-optimal bias exploration with group elimination, and the
//! recovery phase triggered by the stopping criterion
//! ε_l ≤ (κ(Δ̂^l)·log T / T)^{1/3}.
//!
//! The run plays exactly `T` rounds. A block that does not fit in the
//! remaining budget is never started; the empirical best action of the
//! relevant set fills the tail instead.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{self, Allocation};
use crate::geometry::{ActionSet, GeometryError, Group};
use crate::linalg::{self, Matrix};
use crate::model::{self, Environment, ModelError, Parameter};

#[derive(Debug, Error)]
pub enum FpeError {
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("design solver failed: {0}")]
    Design(#[from] design::DesignError),
    #[error("phase cap {cap} exceeded at phase {phase}; diagnostic: runaway phase loop")]
    PhaseCapExceeded { phase: u32, cap: u32 },
    #[error("internal accounting error: {0}")]
    Internal(String),
}

/// Confidence parameter: a fixed value or the paper's default δ = 1/T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaChoice {
    OneOverT,
    Fixed(f64),
}

impl DeltaChoice {
    pub fn resolve(self, horizon: u64) -> f64 {
        match self {
            DeltaChoice::OneOverT => 1.0 / horizon as f64,
            DeltaChoice::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub horizon: u64,
    pub delta: DeltaChoice,
    pub noise_std: f64,
    pub seed: u64,
    /// Relative tolerance for the G-optimal Frank-Wolfe solver.
    pub g_tol: f64,
}

impl RunConfig {
    pub fn new(horizon: u64, seed: u64) -> Self {
        RunConfig {
            horizon,
            delta: DeltaChoice::OneOverT,
            noise_std: 1.0,
            seed,
            g_tol: 1e-3,
        }
    }
}

/// Per-phase diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseDiag {
    pub l: u32,
    pub eps: f64,
    pub rounds_g_pos: u64,
    pub rounds_g_neg: u64,
    pub rounds_delta: u64,
    pub kappa_hat: Option<f64>,
    pub z_hat: i8,
    /// max_x |a_x'(θ̂ − θ*)| over the phase's active set, per group block.
    pub g_err_pos: Option<f64>,
    pub g_err_neg: Option<f64>,
    /// |ω̂ − ω*| for the phase's bias block.
    pub omega_err: Option<f64>,
}

impl PhaseDiag {
    pub(crate) fn new(l: u32, eps: f64) -> Self {
        PhaseDiag {
            l,
            eps,
            rounds_g_pos: 0,
            rounds_g_neg: 0,
            rounds_delta: 0,
            kappa_hat: None,
            z_hat: 0,
            g_err_pos: None,
            g_err_neg: None,
            omega_err: None,
        }
    }

    /// True when any explored block's estimation error reached ε_l.
    pub fn violates_good_event(&self) -> bool {
        let hit = |v: Option<f64>| v.map_or(false, |e| e >= self.eps);
        hit(self.g_err_pos) || hit(self.g_err_neg) || hit(self.omega_err)
    }
}

/// Seeded regret trace at checkpoints plus per-phase diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trace {
    pub checkpoints: Vec<u64>,
    pub cum_regret: Vec<f64>,
    pub phases: Vec<PhaseDiag>,
    /// 1-based round index of the first recovery round, if any.
    pub recovery_entered_at: Option<u64>,
    pub seed: u64,
    pub total_rounds: u64,
    pub final_regret: f64,
}

impl Trace {
    pub fn final_z_hat(&self) -> i8 {
        self.phases.last().map_or(0, |p| p.z_hat)
    }

    pub fn any_good_event_violation(&self) -> bool {
        self.phases.iter().any(|p| p.violates_good_event())
    }
}

/// Power-of-two checkpoint grid plus the horizon itself.
pub fn checkpoint_grid(horizon: u64) -> Vec<u64> {
    let mut cps = Vec::new();
    let mut c = 1u64;
    while c <= horizon {
        cps.push(c);
        if c > horizon / 2 {
            break;
        }
        c *= 2;
    }
    if *cps.last().unwrap() != horizon {
        cps.push(horizon);
    }
    cps
}

/// Bandit episode state: plays actions, accrues true regret, records
/// checkpoints. Policies see only the returned evaluations.
pub struct Episode {
    env: Environment,
    true_gaps: Vec<f64>,
    horizon: u64,
    t: u64,
    cum_regret: f64,
    checkpoints: Vec<u64>,
    checkpoint_regret: Vec<f64>,
    next_checkpoint: usize,
}

impl Episode {
    pub fn new(
        actions: &ActionSet,
        theta: &Parameter,
        noise_std: f64,
        seed: u64,
        horizon: u64,
    ) -> Result<Episode, FpeError> {
        if horizon == 0 {
            return Err(FpeError::ZeroHorizon);
        }
        let env = Environment::new(actions.clone(), theta.clone(), noise_std, seed)?;
        let true_gaps = model::gaps(actions, theta).delta;
        let checkpoints = checkpoint_grid(horizon);
        let n_cp = checkpoints.len();
        Ok(Episode {
            env,
            true_gaps,
            horizon,
            t: 0,
            cum_regret: 0.0,
            checkpoints,
            checkpoint_regret: vec![0.0; n_cp],
            next_checkpoint: 0,
        })
    }

    pub fn play(&mut self, index: usize) -> f64 {
        debug_assert!(self.t < self.horizon, "played past the horizon");
        let y = self.env.evaluate(index).expect("index validated by caller");
        self.t += 1;
        self.cum_regret += self.true_gaps[index];
        while self.next_checkpoint < self.checkpoints.len()
            && self.checkpoints[self.next_checkpoint] == self.t
        {
            self.checkpoint_regret[self.next_checkpoint] = self.cum_regret;
            self.next_checkpoint += 1;
        }
        y
    }

    pub fn remaining(&self) -> u64 {
        self.horizon - self.t
    }

    pub fn rounds_played(&self) -> u64 {
        self.t
    }

    pub fn actions(&self) -> &ActionSet {
        &self.env.actions
    }

    pub fn true_theta(&self) -> &Parameter {
        &self.env.theta
    }

    pub fn into_trace(self, seed: u64, phases: Vec<PhaseDiag>, recovery: Option<u64>) -> Trace {
        Trace {
            checkpoints: self.checkpoints,
            cum_regret: self.checkpoint_regret,
            phases,
            recovery_entered_at: recovery,
            seed,
            total_rounds: self.t,
            final_regret: self.cum_regret,
        }
    }
}

// ---------------------------------------------------------------------------
// Least squares over an observation batch
// ---------------------------------------------------------------------------

/// Accumulated observations (a, y) with covariance V = Σ a aᵀ.
#[derive(Debug, Clone)]
pub struct ObservationBatch {
    covariance: Matrix,
    response: Vec<f64>,
    count: u64,
}

impl ObservationBatch {
    pub fn new(dim: usize) -> Self {
        ObservationBatch {
            covariance: Matrix::zeros(dim, dim),
            response: vec![0.0; dim],
            count: 0,
        }
    }

    pub fn push(&mut self, a: &[f64], y: f64) {
        let n = self.response.len();
        debug_assert_eq!(a.len(), n);
        for i in 0..n {
            self.response[i] += y * a[i];
            for j in 0..n {
                let v = self.covariance.get(i, j) + a[i] * a[j];
                self.covariance.set(i, j, v);
            }
        }
        self.count += 1;
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Ordinary least squares θ̂ = V⁺ Σ y·a. The pseudo-inverse makes every
/// functional u'θ̂ with u ∈ Image(V) the least-squares value.
pub fn ols(batch: &ObservationBatch) -> Result<Vec<f64>, FpeError> {
    let pinv = linalg::pseudo_inverse(batch.covariance())
        .map_err(|e| FpeError::Internal(format!("ols pseudo-inverse: {e}")))?;
    Ok(pinv.matvec(&batch.response))
}

// ---------------------------------------------------------------------------
// Exploration routines
// ---------------------------------------------------------------------------

fn group_slot(z: Group) -> usize {
    if z == Group::PLUS {
        0
    } else {
        1
    }
}

/// Play an allocation in ascending action-index order.
fn execute_allocation(episode: &mut Episode, alloc: &Allocation) -> ObservationBatch {
    let dim = episode.actions().d + 1;
    let mut batch = ObservationBatch::new(dim);
    let lifted: Vec<(usize, Vec<f64>)> = alloc
        .counts
        .keys()
        .map(|&i| (i, episode.actions().lifted(i)))
        .collect();
    for (idx, a) in &lifted {
        let count = alloc.counts[idx];
        for _ in 0..count {
            let y = episode.play(*idx);
            batch.push(a, y);
        }
    }
    batch
}

/// G-budget scale for phase l: 2(d+1)/ε² · log(k·l(l+1)/δ).
fn g_budget_scale(d: usize, k: usize, l: u32, eps: f64, delta: f64) -> f64 {
    2.0 * (d as f64 + 1.0) / (eps * eps) * ((k as f64) * l as f64 * (l as f64 + 1.0) / delta).ln()
}

/// Δ-budget scale for phase l: 2/ε² · log(l(l+1)/δ).
fn delta_budget_scale(l: u32, eps: f64, delta: f64) -> f64 {
    2.0 / (eps * eps) * (l as f64 * (l as f64 + 1.0) / delta).ln()
}

#[derive(Debug)]
pub struct GExpElimOutcome {
    pub theta_hat: Vec<f64>,
    pub surviving: Vec<usize>,
    pub rounds_used: u64,
}

/// Routine: sample a rounded G-optimal design on `active`, estimate by
/// least squares, and keep actions within 3ε of the empirical best.
pub fn g_exp_elim(
    episode: &mut Episode,
    active: &[usize],
    n: f64,
    eps: f64,
    g_tol: f64,
) -> Result<GExpElimOutcome, FpeError> {
    let actions = episode.actions().clone();
    let (dsn, _gv) = design::g_optimal_design(&actions, active, g_tol)?;
    let alloc = design::round_allocation(&dsn, n)?;
    let batch = execute_allocation(episode, &alloc);
    let theta_hat = ols(&batch)?;
    let surviving = eliminate_within(&actions, active, &theta_hat, eps);
    Ok(GExpElimOutcome {
        theta_hat,
        surviving,
        rounds_used: alloc.total(),
    })
}

/// Keep `{x : max_{x'}(a_{x'} − a_x)'θ̂ ≤ 3ε}`; the empirical best always
/// survives, so the result is never empty.
fn eliminate_within(
    actions: &ActionSet,
    active: &[usize],
    theta_hat: &[f64],
    eps: f64,
) -> Vec<usize> {
    let scores: Vec<f64> = active
        .iter()
        .map(|&i| linalg::dot(&actions.lifted(i), theta_hat))
        .collect();
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let survivors: Vec<usize> = active
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| best - s <= 3.0 * eps)
        .map(|(&i, _)| i)
        .collect();
    if survivors.is_empty() {
        // Cannot happen in exact arithmetic; retain the empirical best.
        let arg = active
            .iter()
            .zip(&scores)
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(&i, _)| i)
            .unwrap();
        vec![arg]
    } else {
        survivors
    }
}

#[derive(Debug)]
pub struct DeltaExpElimOutcome {
    /// Identified best group: -1, 0 (unknown) or +1.
    pub z_found: i8,
    pub new_gap_est: Vec<f64>,
    pub omega_hat: f64,
    pub rounds_used: u64,
}

/// Routine: sample a rounded Δ̂-optimal design over the full action set
/// (eliminated actions included), estimate the bias, debias the group
/// estimates and either select a group (4ε separation) or refresh Δ̂.
#[allow(clippy::too_many_arguments)]
pub fn delta_exp_elim(
    episode: &mut Episode,
    active_pos: &[usize],
    active_neg: &[usize],
    theta_pos: &[f64],
    theta_neg: &[f64],
    gap_est: &[f64],
    n: f64,
    eps: f64,
) -> Result<DeltaExpElimOutcome, FpeError> {
    let actions = episode.actions().clone();
    let dd = design::delta_optimal_design(&actions, gap_est)?;
    let alloc = design::round_allocation(&dd.measure, n)?;
    let batch = execute_allocation(episode, &alloc);
    let theta_full = ols(&batch)?;
    let omega_hat = theta_full[actions.d];
    let outcome = debias_and_decide(
        &actions, active_pos, active_neg, theta_pos, theta_neg, gap_est, omega_hat, eps,
    );
    Ok(DeltaExpElimOutcome {
        z_found: outcome.0,
        new_gap_est: outcome.1,
        omega_hat,
        rounds_used: alloc.total(),
    })
}

/// Debiased scores m̂_x = a_x'θ̂^{(z_x)} − z_x·ω̂ over both active sets;
/// select a group on 4ε separation, otherwise update the gap estimates
/// Δ̂_x = 2 ∧ (max m̂ − m̂_x + 4ε).
#[allow(clippy::too_many_arguments)]
fn debias_and_decide(
    actions: &ActionSet,
    active_pos: &[usize],
    active_neg: &[usize],
    theta_pos: &[f64],
    theta_neg: &[f64],
    gap_est: &[f64],
    omega_hat: f64,
    eps: f64,
) -> (i8, Vec<f64>) {
    let debiased = |idx: usize| -> f64 {
        let z = actions.actions[idx].z;
        let th = if z == Group::PLUS { theta_pos } else { theta_neg };
        linalg::dot(&actions.lifted(idx), th) - z.sign() * omega_hat
    };
    let max_pos = active_pos
        .iter()
        .map(|&i| debiased(i))
        .fold(f64::NEG_INFINITY, f64::max);
    let max_neg = active_neg
        .iter()
        .map(|&i| debiased(i))
        .fold(f64::NEG_INFINITY, f64::max);

    let mut z_found = 0i8;
    if max_pos >= max_neg + 4.0 * eps {
        z_found = 1;
    } else if max_neg >= max_pos + 4.0 * eps {
        z_found = -1;
    }
    let mut new_gap_est = gap_est.to_vec();
    if z_found == 0 {
        let overall = max_pos.max(max_neg);
        for &i in active_pos.iter().chain(active_neg.iter()) {
            new_gap_est[i] = (overall - debiased(i) + 4.0 * eps).min(2.0);
        }
    }
    (z_found, new_gap_est)
}

// ---------------------------------------------------------------------------
// The full budgeted loop
// ---------------------------------------------------------------------------

/// Empirical best action of `set`: argmax of a_x'θ̂^{(z_x)} − z_x·ω̂ using
/// the most recent completed group estimates; ties break to the lowest
/// index, and with no estimate at all the lowest index is played.
fn empirical_best(
    actions: &ActionSet,
    set: &[usize],
    theta_hat: &[Option<Vec<f64>>; 2],
    omega_hat: Option<f64>,
) -> usize {
    let omega = omega_hat.unwrap_or(0.0);
    let mut best: Option<(usize, f64)> = None;
    for &i in set {
        let z = actions.actions[i].z;
        if let Some(th) = &theta_hat[group_slot(z)] {
            let score = linalg::dot(&actions.lifted(i), th) - z.sign() * omega;
            best = match best {
                None => Some((i, score)),
                Some((_, bs)) if score > bs => Some((i, score)),
                other => other,
            };
        }
    }
    best.map(|(i, _)| i).unwrap_or_else(|| set[0])
}

fn estimation_error(
    actions: &ActionSet,
    set: &[usize],
    theta_hat: &[f64],
    theta_true: &Parameter,
) -> f64 {
    let truth = theta_true.lifted();
    set.iter()
        .map(|&i| {
            let a = actions.lifted(i);
            (linalg::dot(&a, theta_hat) - linalg::dot(&a, &truth)).abs()
        })
        .fold(0.0, f64::max)
}

/// Fair Phased Elimination over exactly `cfg.horizon` rounds.
pub fn run_fpe(actions: &ActionSet, theta: &Parameter, cfg: &RunConfig) -> Result<Trace, FpeError> {
    actions.ensure_valid()?;
    let horizon = cfg.horizon;
    let delta = cfg.delta.resolve(horizon);
    let d = actions.d;
    let k = actions.len();
    let phase_cap = (3.0 * (horizon as f64).log2()).ceil() as u32 + 4;
    let log_horizon = (horizon as f64).ln();

    let mut episode = Episode::new(actions, theta, cfg.noise_std, cfg.seed, horizon)?;
    let mut active: [Vec<usize>; 2] = [
        actions.group_indices(Group::PLUS),
        actions.group_indices(Group::MINUS),
    ];
    let mut theta_hat: [Option<Vec<f64>>; 2] = [None, None];
    let mut omega_hat: Option<f64> = None;
    let mut gap_est = vec![2.0; k];
    let mut z_hat: i8 = 0;
    let mut phases: Vec<PhaseDiag> = Vec::new();
    let mut recovery_entered_at: Option<u64> = None;
    let mut l: u32 = 1;

    while episode.remaining() > 0 {
        if l > phase_cap {
            return Err(FpeError::PhaseCapExceeded { phase: l, cap: phase_cap });
        }
        let eps = (2.0f64).powi(2 - l as i32);
        let mut diag = PhaseDiag::new(l, eps);

        // G-optimal exploration and elimination per non-discarded group.
        for z in [Group::PLUS, Group::MINUS] {
            if z.value() == -z_hat || episode.remaining() == 0 {
                continue;
            }
            let slot = group_slot(z);
            let set = active[slot].clone();
            let (dsn, _gv) = design::g_optimal_design(actions, &set, cfg.g_tol)?;
            let scale = g_budget_scale(d, k, l, eps, delta);
            let alloc = design::round_allocation(&dsn, scale)?;
            let rounds = alloc.total();
            let used;
            if rounds <= episode.remaining() {
                let batch = execute_allocation(&mut episode, &alloc);
                let th = ols(&batch)?;
                let err = estimation_error(actions, &set, &th, theta);
                active[slot] = eliminate_within(actions, &set, &th, eps);
                theta_hat[slot] = Some(th);
                used = rounds;
                if z == Group::PLUS {
                    diag.g_err_pos = Some(err);
                } else {
                    diag.g_err_neg = Some(err);
                }
            } else {
                // Not enough budget to complete the block: play the
                // empirical best of this group's set for the tail.
                let fill = episode.remaining();
                let pick = empirical_best(actions, &set, &theta_hat, omega_hat);
                for _ in 0..fill {
                    episode.play(pick);
                }
                used = fill;
            }
            if z == Group::PLUS {
                diag.rounds_g_pos = used;
            } else {
                diag.rounds_g_neg = used;
            }
        }

        // Δ-optimal exploration, group elimination, or recovery.
        if z_hat == 0 && episode.remaining() > 0 {
            let dd = design::delta_optimal_design(actions, &gap_est)?;
            diag.kappa_hat = Some(dd.kappa);
            let stop_threshold = (dd.kappa * log_horizon / horizon as f64).cbrt();
            if eps <= stop_threshold {
                // Recovery: abandon bias estimation, play the empirical
                // best of the surviving union until the budget ends.
                let union: Vec<usize> = active[0]
                    .iter()
                    .chain(active[1].iter())
                    .copied()
                    .collect();
                let pick = empirical_best(actions, &union, &theta_hat, omega_hat);
                recovery_entered_at = Some(episode.rounds_played() + 1);
                while episode.remaining() > 0 {
                    episode.play(pick);
                }
            } else {
                let scale = delta_budget_scale(l, eps, delta);
                let alloc = design::round_allocation(&dd.measure, scale)?;
                let rounds = alloc.total();
                if rounds <= episode.remaining() {
                    let batch = execute_allocation(&mut episode, &alloc);
                    let theta_full = ols(&batch)?;
                    let om = theta_full[d];
                    diag.omega_err = Some((om - theta.omega).abs());
                    let (pos, neg) = (active[0].clone(), active[1].clone());
                    // Both groups were explored this phase (z_hat == 0),
                    // so both estimates exist.
                    let th_pos = theta_hat[0].as_ref().expect("plus estimate");
                    let th_neg = theta_hat[1].as_ref().expect("minus estimate");
                    let (z_found, new_gaps) = debias_and_decide(
                        actions, &pos, &neg, th_pos, th_neg, &gap_est, om, eps,
                    );
                    omega_hat = Some(om);
                    gap_est = new_gaps;
                    if z_found != 0 {
                        z_hat = z_found;
                    }
                    diag.rounds_delta = rounds;
                } else {
                    let fill = episode.remaining();
                    let union: Vec<usize> = active[0]
                        .iter()
                        .chain(active[1].iter())
                        .copied()
                        .collect();
                    let pick = empirical_best(actions, &union, &theta_hat, omega_hat);
                    for _ in 0..fill {
                        episode.play(pick);
                    }
                    diag.rounds_delta = fill;
                }
            }
        }

        diag.z_hat = z_hat;
        phases.push(diag);
        l += 1;
    }

    if episode.remaining() != 0 {
        return Err(FpeError::Internal("run ended before the horizon".into()));
    }
    Ok(episode.into_trace(cfg.seed, phases, recovery_entered_at))
}
