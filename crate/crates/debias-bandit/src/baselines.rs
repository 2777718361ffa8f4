//! Comparison policies bracketing Fair Phased Elimination: a bias-ignoring
//! phased eliminator (linear regret when the bias flips the evaluation
//! ranking), a known-bias eliminator (the free-bias ablation), and the
//! static best-action oracle.
//!
//! The two eliminators share one engine: phased elimination over the whole
//! action set with the same G-design machinery and budgets as the FPE
//! group phases, ranking actions by `a_x'θ̂ − z_x·ω₀`. With ω₀ = 0 that is
//! the raw biased evaluation; with ω₀ = ω* the ranking is exactly debiased.

use crate::design;
use crate::fpe::{ols, Episode, FpeError, PhaseDiag, RunConfig, Trace};
use crate::geometry::ActionSet;
use crate::linalg;
use crate::model::{self, Parameter};

/// Registered policy names, as used in experiment configs.
pub const POLICY_NAMES: [&str; 4] = ["fpe", "unfair-pe", "known-bias", "oracle"];

/// Phased elimination on the lifted vectors, ignoring the bias entirely.
pub fn run_unfair_pe(
    actions: &ActionSet,
    theta: &Parameter,
    cfg: &RunConfig,
) -> Result<Trace, FpeError> {
    run_union_eliminator(actions, theta, cfg, 0.0)
}

/// Fair Phased Elimination with the bias known exactly: no Δ-exploration
/// is ever spent; rankings are debiased with the true ω. With ω_true = 0
/// this coincides with the unfair eliminator decision for decision.
pub fn run_known_bias(
    actions: &ActionSet,
    theta: &Parameter,
    cfg: &RunConfig,
    omega_true: f64,
) -> Result<Trace, FpeError> {
    run_union_eliminator(actions, theta, cfg, omega_true)
}

fn run_union_eliminator(
    actions: &ActionSet,
    theta: &Parameter,
    cfg: &RunConfig,
    debias_omega: f64,
) -> Result<Trace, FpeError> {
    actions.ensure_valid()?;
    let horizon = cfg.horizon;
    let delta = cfg.delta.resolve(horizon);
    let d = actions.d;
    let k = actions.len();
    let phase_cap = (3.0 * (horizon as f64).log2()).ceil() as u32 + 4;

    let mut episode = Episode::new(actions, theta, cfg.noise_std, cfg.seed, horizon)?;
    let mut active: Vec<usize> = (0..k).collect();
    let mut theta_hat: Option<Vec<f64>> = None;
    let mut phases: Vec<PhaseDiag> = Vec::new();
    let mut l: u32 = 1;

    let score = |idx: usize, th: &[f64]| -> f64 {
        linalg::dot(&actions.lifted(idx), th) - actions.actions[idx].z.sign() * debias_omega
    };

    while episode.remaining() > 0 {
        if l > phase_cap {
            return Err(FpeError::PhaseCapExceeded { phase: l, cap: phase_cap });
        }
        let eps = (2.0f64).powi(2 - l as i32);
        let mut diag = PhaseDiag::new(l, eps);

        let (dsn, _gv) = design::g_optimal_design(actions, &active, cfg.g_tol)?;
        let scale = 2.0 * (d as f64 + 1.0) / (eps * eps)
            * ((k as f64) * l as f64 * (l as f64 + 1.0) / delta).ln();
        let alloc = design::round_allocation(&dsn, scale)?;
        let rounds = alloc.total();
        if rounds <= episode.remaining() {
            let dim = d + 1;
            let mut batch = crate::fpe::ObservationBatch::new(dim);
            for (&idx, &count) in &alloc.counts {
                let a = actions.lifted(idx);
                for _ in 0..count {
                    let y = episode.play(idx);
                    batch.push(&a, y);
                }
            }
            let th = ols(&batch)?;
            let truth = theta.lifted();
            let err = active
                .iter()
                .map(|&i| {
                    let a = actions.lifted(i);
                    (linalg::dot(&a, &th) - linalg::dot(&a, &truth)).abs()
                })
                .fold(0.0, f64::max);
            diag.g_err_pos = Some(err);
            let best = active
                .iter()
                .map(|&i| score(i, &th))
                .fold(f64::NEG_INFINITY, f64::max);
            let survivors: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&i| best - score(i, &th) <= 3.0 * eps)
                .collect();
            active = if survivors.is_empty() {
                vec![active
                    .iter()
                    .copied()
                    .max_by(|&a, &b| score(a, &th).partial_cmp(&score(b, &th)).unwrap())
                    .unwrap()]
            } else {
                survivors
            };
            theta_hat = Some(th);
            diag.rounds_g_pos = rounds;
        } else {
            let fill = episode.remaining();
            let pick = match &theta_hat {
                Some(th) => active
                    .iter()
                    .copied()
                    .max_by(|&a, &b| score(a, th).partial_cmp(&score(b, th)).unwrap())
                    .unwrap(),
                None => active[0],
            };
            for _ in 0..fill {
                episode.play(pick);
            }
            diag.rounds_g_pos = fill;
        }
        phases.push(diag);
        l += 1;
    }
    Ok(episode.into_trace(cfg.seed, phases, None))
}

/// Constant policy playing argmax x'γ*; zero regret by construction.
pub fn run_oracle(
    actions: &ActionSet,
    theta: &Parameter,
    cfg: &RunConfig,
) -> Result<Trace, FpeError> {
    actions.ensure_valid()?;
    let mut episode = Episode::new(actions, theta, cfg.noise_std, cfg.seed, cfg.horizon)?;
    let best = model::gaps(actions, theta).best_index;
    while episode.remaining() > 0 {
        episode.play(best);
    }
    Ok(episode.into_trace(cfg.seed, Vec::new(), None))
}

/// Dispatch a registered policy by name.
pub fn run_policy(
    name: &str,
    actions: &ActionSet,
    theta: &Parameter,
    cfg: &RunConfig,
) -> Result<Trace, FpeError> {
    match name {
        "fpe" => crate::fpe::run_fpe(actions, theta, cfg),
        "unfair-pe" => run_unfair_pe(actions, theta, cfg),
        "known-bias" => run_known_bias(actions, theta, cfg, theta.omega),
        "oracle" => run_oracle(actions, theta, cfg),
        other => Err(FpeError::Internal(format!("unknown policy '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpe::DeltaChoice;
    use crate::instances;

    fn cfg(horizon: u64, seed: u64, noise: f64) -> RunConfig {
        RunConfig {
            horizon,
            delta: DeltaChoice::OneOverT,
            noise_std: noise,
            seed,
            g_tol: 1e-3,
        }
    }

    #[test]
    fn oracle_has_zero_regret_on_fixtures() {
        for inst in [
            instances::five_action_fixture(),
            instances::worst_case_adversarial(4.0, 2).unwrap(),
            instances::gap_instance(4.0, 4, 0.05, 0.1, 1).unwrap(),
        ] {
            let trace = run_oracle(&inst.actions, &inst.theta, &cfg(512, 3, 1.0)).unwrap();
            assert!(trace.cum_regret.iter().all(|&r| r == 0.0));
            assert_eq!(trace.final_regret, 0.0);
        }
    }

    #[test]
    fn unfair_pe_locks_onto_misleading_action_noiseless() {
        // Large bias: the evaluation argmax is truly suboptimal, so the
        // noiseless trace converges to the wrong action and regret grows
        // linearly at its gap.
        let inst = instances::worst_case_adversarial(4.0, 2).unwrap();
        let trace =
            run_unfair_pe(&inst.actions, &inst.theta, &cfg(1 << 14, 1, 0.0)).unwrap();
        let g = model::gaps(&inst.actions, &inst.theta);
        // Final stretch: regret grows by exactly the misleading action's
        // gap per round (evaluation argmax is action 0).
        let n = trace.cum_regret.len();
        let span = (trace.checkpoints[n - 1] - trace.checkpoints[n - 2]) as f64;
        let slope = (trace.cum_regret[n - 1] - trace.cum_regret[n - 2]) / span;
        assert!(
            (slope - g.delta[0]).abs() < 1e-9,
            "per-round regret {slope}, expected {}",
            g.delta[0]
        );
    }

    #[test]
    fn unfair_pe_is_sublinear_without_bias() {
        let mut inst = instances::worst_case_adversarial(4.0, 2).unwrap();
        inst.theta.omega = 0.0;
        let trace =
            run_unfair_pe(&inst.actions, &inst.theta, &cfg(1 << 13, 5, 1.0)).unwrap();
        let g = model::gaps(&inst.actions, &inst.theta);
        // Far from linear in the misleading gap; generous sanity bound.
        assert!(trace.final_regret < 0.2 * g.delta_neq * (1 << 13) as f64);
    }

    #[test]
    fn unfair_pe_single_round() {
        let inst = instances::five_action_fixture();
        let trace = run_unfair_pe(&inst.actions, &inst.theta, &cfg(1, 9, 1.0)).unwrap();
        assert_eq!(trace.total_rounds, 1);
        let g = model::gaps(&inst.actions, &inst.theta);
        assert!((trace.final_regret - g.delta[0]).abs() < 1e-12);
    }

    #[test]
    fn known_bias_with_zero_omega_matches_unfair_trace() {
        let mut inst = instances::five_action_fixture();
        inst.theta.omega = 0.0;
        let c = cfg(4096, 21, 1.0);
        let unfair = run_unfair_pe(&inst.actions, &inst.theta, &c).unwrap();
        let known = run_known_bias(&inst.actions, &inst.theta, &c, 0.0).unwrap();
        assert_eq!(unfair.cum_regret.len(), known.cum_regret.len());
        for (a, b) in unfair.cum_regret.iter().zip(&known.cum_regret) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn known_bias_finds_best_noiselessly() {
        let inst = instances::worst_case_adversarial(4.0, 2).unwrap();
        let trace = run_known_bias(
            &inst.actions,
            &inst.theta,
            &cfg(1 << 14, 2, 0.0),
            inst.theta.omega,
        )
        .unwrap();
        let n = trace.cum_regret.len();
        // Debiased elimination settles on the true best: flat tail.
        assert_eq!(trace.cum_regret[n - 1], trace.cum_regret[n - 2]);
    }

    #[test]
    fn known_bias_no_worse_than_fpe_in_paired_mean() {
        let inst = instances::gap_instance(4.0, 4, 0.1, 0.2, 1).unwrap();
        let mut fpe_total = 0.0;
        let mut kb_total = 0.0;
        for seed in 0..8 {
            let c = cfg(1 << 12, seed, 1.0);
            fpe_total += crate::fpe::run_fpe(&inst.actions, &inst.theta, &c)
                .unwrap()
                .final_regret;
            kb_total += run_known_bias(&inst.actions, &inst.theta, &c, inst.theta.omega)
                .unwrap()
                .final_regret;
        }
        assert!(
            kb_total <= fpe_total,
            "known-bias {kb_total} vs fpe {fpe_total}"
        );
    }

    #[test]
    fn traces_share_schema_across_policies() {
        let inst = instances::five_action_fixture();
        let c = cfg(256, 4, 1.0);
        for name in POLICY_NAMES {
            let trace = run_policy(name, &inst.actions, &inst.theta, &c).unwrap();
            let json = serde_json::to_value(&trace).unwrap();
            for key in [
                "checkpoints",
                "cum_regret",
                "phases",
                "recovery_entered_at",
                "seed",
            ] {
                assert!(json.get(key).is_some(), "{name} trace missing {key}");
            }
            assert_eq!(trace.total_rounds, 256);
        }
        assert!(run_policy("nope", &inst.actions, &inst.theta, &c).is_err());
    }
}
