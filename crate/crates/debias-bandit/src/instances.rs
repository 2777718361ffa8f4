//! Generators for the hard problem instances used in the lower-bound
//! analyses, parameterized by (κ*, d, T, Δ_min, Δ_neq), plus small
//! illustrative fixtures.
//!
//! All families share the same geometric skeleton: one or more covariates
//! on canonical basis directions split across the two groups, plus the
//! "probe" action x_{d+1} = −(1 − 2/(√κ+1))·e1 in the minority group whose
//! position tunes the minimal bias-estimation variance to exactly κ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Action, ActionSet, Group};
use crate::model::{self, Parameter};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("kappa must be at least {min}, got {got}")]
    KappaTooSmall { min: f64, got: f64 },
    #[error("dimension must be at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("horizon too small: need T >= 64*kappa = {need}, got {got}")]
    HorizonTooSmall { need: f64, got: u64 },
    #[error("gap parameters out of range: {0}")]
    GapRange(String),
    #[error("alternative index {got} out of range 1..={max}")]
    AlternativeOutOfRange { got: usize, max: usize },
    #[error("generated instance failed validation: {0}")]
    SelfCheck(String),
}

/// Declared metadata of a generated instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub family: String,
    pub kappa_star: Option<f64>,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_neq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternative: Option<usize>,
    pub best_index: usize,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub actions: ActionSet,
    pub theta: Parameter,
    pub meta: InstanceMeta,
}

impl ProblemInstance {
    /// Re-derives the declared quantities and checks them.
    pub fn self_check(&self) -> Result<(), InstanceError> {
        let violations = self.actions.validate();
        if !violations.is_empty() {
            return Err(InstanceError::SelfCheck(format!("{violations:?}")));
        }
        if !self.theta.is_admissible(&self.actions) {
            return Err(InstanceError::SelfCheck("parameter not admissible".into()));
        }
        if let Some(declared) = self.meta.kappa_star {
            let (kappa, _) = crate::geometry::kappa_star(&self.actions)
                .map_err(|e| InstanceError::SelfCheck(e.to_string()))?;
            if (kappa - declared).abs() > 1e-6 * declared.max(1.0) {
                return Err(InstanceError::SelfCheck(format!(
                    "kappa_star {kappa} != declared {declared}"
                )));
            }
        }
        let g = model::gaps(&self.actions, &self.theta);
        if g.best_index != self.meta.best_index {
            return Err(InstanceError::SelfCheck(format!(
                "best index {} != declared {}",
                g.best_index, self.meta.best_index
            )));
        }
        if let Some(dmin) = self.meta.delta_min {
            if (g.delta_min - dmin).abs() > 1e-12 {
                return Err(InstanceError::SelfCheck(format!(
                    "delta_min {} != declared {dmin}",
                    g.delta_min
                )));
            }
        }
        if let Some(dneq) = self.meta.delta_neq {
            if (g.delta_neq - dneq).abs() > 1e-12 {
                return Err(InstanceError::SelfCheck(format!(
                    "delta_neq {} != declared {dneq}",
                    g.delta_neq
                )));
            }
        }
        Ok(())
    }
}

fn basis(d: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

/// Probe covariate −(1 − 2/(√κ+1))·e1.
fn probe_covariate(kappa: f64, d: usize) -> Vec<f64> {
    let alpha = 2.0 / (kappa.sqrt() + 1.0);
    let mut v = vec![0.0; d];
    v[0] = -(1.0 - alpha);
    v
}

/// Worst-case action set: a_1 = e1 + e_{d+1}, a_i = e_i − e_{d+1} for
/// 2 ≤ i ≤ d, and the probe −(1−2/(√κ+1))e1 − e_{d+1}.
pub fn worst_case_action_set(kappa: f64, d: usize) -> Result<ActionSet, InstanceError> {
    if kappa < 1.0 {
        return Err(InstanceError::KappaTooSmall { min: 1.0, got: kappa });
    }
    if d < 2 {
        return Err(InstanceError::DimensionTooSmall { min: 2, got: d });
    }
    let mut actions = vec![Action {
        x: basis(d, 0),
        z: Group::PLUS,
    }];
    for i in 1..d {
        actions.push(Action {
            x: basis(d, i),
            z: Group::MINUS,
        });
    }
    actions.push(Action {
        x: probe_covariate(kappa, d),
        z: Group::MINUS,
    });
    Ok(ActionSet::new(d, actions))
}

/// The two alternative problems of the worst-case lower bound at horizon T:
/// rewards differ by ρ_T = (κ/T)^{1/3} and the biases ∓ρ_T/2 make every
/// action except the probe evaluate identically across the pair.
pub fn worst_case_instance(
    kappa: f64,
    d: usize,
    horizon: u64,
) -> Result<(ProblemInstance, ProblemInstance), InstanceError> {
    let actions = worst_case_action_set(kappa, d)?;
    let need = 64.0 * kappa;
    if (horizon as f64) < need {
        return Err(InstanceError::HorizonTooSmall { need, got: horizon });
    }
    let rho = (kappa / horizon as f64).cbrt();

    let mut gamma1 = vec![-rho / 2.0; d];
    gamma1[0] = (1.0 + rho) / 2.0;
    gamma1[1] = (1.0 - rho) / 2.0;
    let mut gamma2 = vec![rho / 2.0; d];
    gamma2[0] = (1.0 - rho) / 2.0;
    gamma2[1] = (1.0 + rho) / 2.0;

    let make = |gamma: Vec<f64>, omega: f64, alternative: usize, best_index: usize| {
        ProblemInstance {
            actions: actions.clone(),
            theta: Parameter::new(gamma, omega),
            meta: InstanceMeta {
                family: "worst-case".into(),
                kappa_star: Some(kappa),
                d,
                horizon: Some(horizon),
                rho: Some(rho),
                delta_min: None,
                delta_neq: None,
                alternative: Some(alternative),
                best_index,
            },
        }
    };
    let p1 = make(gamma1, -rho / 2.0, 1, 0);
    let p2 = make(gamma2, rho / 2.0, 2, 1);
    p1.self_check()?;
    p2.self_check()?;
    Ok((p1, p2))
}

/// Worst-case geometry with a large misleading bias: the advantaged group's
/// evaluation argmax is truly suboptimal by a constant gap, so a
/// bias-ignoring eliminator locks onto it and suffers linear regret.
pub fn worst_case_adversarial(kappa: f64, d: usize) -> Result<ProblemInstance, InstanceError> {
    let actions = worst_case_action_set(kappa, d)?;
    let mut gamma = vec![0.0; d];
    gamma[0] = -0.6;
    gamma[1] = 0.8;
    let omega = 1.5;
    let inst = ProblemInstance {
        actions,
        theta: Parameter::new(gamma, omega),
        meta: InstanceMeta {
            family: "worst-case-adversarial".into(),
            kappa_star: Some(kappa),
            d,
            horizon: None,
            rho: None,
            delta_min: None,
            delta_neq: None,
            alternative: None,
            best_index: 1,
        },
    };
    inst.self_check()?;
    Ok(inst)
}

/// Gap lower-bound action set (d ≥ 4): a_i = e_i + e_{d+1} for
/// i ≤ ⌊d/2⌋, a_i = e_i − e_{d+1} for ⌊d/2⌋ < i ≤ d, plus the probe.
pub fn gap_action_set(kappa: f64, d: usize) -> Result<ActionSet, InstanceError> {
    if kappa < 2.0 {
        return Err(InstanceError::KappaTooSmall { min: 2.0, got: kappa });
    }
    if d < 4 {
        return Err(InstanceError::DimensionTooSmall { min: 4, got: d });
    }
    let half = d / 2;
    let mut actions = Vec::with_capacity(d + 1);
    for i in 0..half {
        actions.push(Action {
            x: basis(d, i),
            z: Group::PLUS,
        });
    }
    for i in half..d {
        actions.push(Action {
            x: basis(d, i),
            z: Group::MINUS,
        });
    }
    actions.push(Action {
        x: probe_covariate(kappa, d),
        z: Group::MINUS,
    });
    Ok(ActionSet::new(d, actions))
}

/// Alternative `i` (1-based, 1 ≤ i ≤ ⌊d/2⌋+1) of the gap-dependent
/// lower-bound family with minimum gap Δ_min and between-group gap Δ_neq.
///
/// The theorem behind this family restricts (Δ_min, Δ_neq) to (0, 1/8)²;
/// the generator accepts the full admissible range Δ_min ≤ Δ_neq,
/// Δ_min + Δ_neq < 1 so larger-gap variants can be exercised too.
pub fn gap_instance(
    kappa: f64,
    d: usize,
    delta_min: f64,
    delta_neq: f64,
    alternative: usize,
) -> Result<ProblemInstance, InstanceError> {
    let actions = gap_action_set(kappa, d)?;
    if !(delta_min > 0.0) || delta_min > delta_neq || delta_min + delta_neq >= 1.0 {
        return Err(InstanceError::GapRange(format!(
            "need 0 < delta_min <= delta_neq and delta_min + delta_neq < 1, got ({delta_min}, {delta_neq})"
        )));
    }
    let half = d / 2;
    if alternative < 1 || alternative > half + 1 {
        return Err(InstanceError::AlternativeOutOfRange {
            got: alternative,
            max: half + 1,
        });
    }
    let plus_base = (1.0 + delta_neq - delta_min) / 2.0;
    let minus_base = (1.0 - delta_neq - delta_min) / 2.0;
    let (mut gamma, omega, best_index) = if alternative <= half {
        let mut g = vec![0.0; d];
        for j in 0..half {
            g[j] = plus_base;
        }
        for j in half..d {
            g[j] = minus_base;
        }
        g[0] += delta_min;
        g[half] += delta_min;
        if alternative >= 2 {
            g[alternative - 1] += 2.0 * delta_min;
            g[half + alternative - 1] += 2.0 * delta_min;
        }
        (g, -delta_neq / 2.0, alternative - 1)
    } else {
        // Mirrored problem: best action moves to the minus group.
        let mut g = vec![0.0; d];
        for j in 0..half {
            g[j] = minus_base;
        }
        for j in half..d {
            g[j] = plus_base;
        }
        g[0] += delta_min;
        g[half] += delta_min;
        (g, delta_neq / 2.0, half)
    };
    // Guard against accidental reward overflow for extreme parameters.
    for v in gamma.iter_mut() {
        if v.abs() > 1.0 {
            return Err(InstanceError::GapRange("rewards exceed the admissible box".into()));
        }
    }
    let inst = ProblemInstance {
        actions,
        theta: Parameter::new(gamma, omega),
        meta: InstanceMeta {
            family: "gap".into(),
            kappa_star: Some(kappa),
            d,
            horizon: None,
            rho: None,
            delta_min: Some(delta_min),
            delta_neq: Some(delta_neq),
            alternative: Some(alternative),
            best_index,
        },
    };
    inst.self_check()?;
    Ok(inst)
}

/// Small-dimension (d = 2 or 3) gap lower-bound instances.
///
/// Case 1 covers d/Δ_min ≥ κ/Δ_neq²: all of e_1..e_d in the plus group, the
/// probe alone in the minus group, and ω = 0. Case 2 covers the opposite
/// regime with the worst-case geometry and biases ±Δ_neq/2.
pub fn small_d_gap_instance(
    d: usize,
    case: u8,
    kappa: f64,
    delta_min: f64,
    delta_neq: f64,
) -> Result<ProblemInstance, InstanceError> {
    if !(d == 2 || d == 3) {
        return Err(InstanceError::DimensionTooSmall { min: 2, got: d });
    }
    if kappa < 1.0 {
        return Err(InstanceError::KappaTooSmall { min: 1.0, got: kappa });
    }
    if !(delta_min > 0.0 && delta_min <= delta_neq && delta_neq < 0.5) {
        return Err(InstanceError::GapRange(format!(
            "need 0 < delta_min <= delta_neq < 1/2, got ({delta_min}, {delta_neq})"
        )));
    }
    match case {
        1 => {
            let mut actions: Vec<Action> = (0..d)
                .map(|i| Action {
                    x: basis(d, i),
                    z: Group::PLUS,
                })
                .collect();
            actions.push(Action {
                x: probe_covariate(kappa, d),
                z: Group::MINUS,
            });
            let mut gamma = vec![(1.0 - delta_min) / 2.0; d];
            gamma[0] += delta_min;
            let inst = ProblemInstance {
                actions: ActionSet::new(d, actions),
                theta: Parameter::new(gamma, 0.0),
                meta: InstanceMeta {
                    family: "small-d".into(),
                    kappa_star: Some(kappa),
                    d,
                    horizon: None,
                    rho: None,
                    delta_min: Some(delta_min),
                    delta_neq: None,
                    alternative: Some(1),
                    best_index: 0,
                },
            };
            inst.self_check()?;
            Ok(inst)
        }
        2 => {
            let actions = worst_case_action_set(kappa, d)?;
            let mut gamma = vec![0.0; d];
            gamma[0] = (1.0 + delta_neq) / 2.0;
            gamma[1] = (1.0 - delta_neq) / 2.0;
            if d >= 3 {
                gamma[2] = -delta_neq / 2.0;
            }
            let inst = ProblemInstance {
                actions,
                theta: Parameter::new(gamma, -delta_neq / 2.0),
                meta: InstanceMeta {
                    family: "small-d".into(),
                    kappa_star: Some(kappa),
                    d,
                    horizon: None,
                    rho: None,
                    delta_min: None,
                    delta_neq: Some(delta_neq),
                    alternative: Some(1),
                    best_index: 0,
                },
            };
            inst.self_check()?;
            Ok(inst)
        }
        _ => Err(InstanceError::GapRange(format!("case must be 1 or 2, got {case}"))),
    }
}

/// Five-action illustrative fixture in d = 2 with separable groups,
/// moderate gaps and κ* slightly above one. Used by coverage tests.
pub fn five_action_fixture() -> ProblemInstance {
    let actions = ActionSet::new(
        2,
        vec![
            Action { x: vec![1.0, 0.0], z: Group::PLUS },
            Action { x: vec![0.8, 0.3], z: Group::PLUS },
            Action { x: vec![0.0, 1.0], z: Group::MINUS },
            Action { x: vec![0.5, 0.5], z: Group::MINUS },
            Action { x: vec![-0.5, -0.2], z: Group::MINUS },
        ],
    );
    let theta = Parameter::new(vec![0.7, 0.2], -0.3);
    let g = model::gaps(&actions, &theta);
    ProblemInstance {
        actions,
        theta,
        meta: InstanceMeta {
            family: "fixture-5".into(),
            kappa_star: None,
            d: 2,
            horizon: None,
            rho: None,
            delta_min: Some(g.delta_min),
            delta_neq: Some(g.delta_neq),
            alternative: None,
            best_index: g.best_index,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry;
    use crate::linalg::dot;

    #[test]
    fn worst_case_examples() {
        let (p1, _p2) = worst_case_instance(4.0, 2, 4096).unwrap();
        // Probe covariate is −(1/3)e1 and ρ = (4/4096)^{1/3}.
        let probe = &p1.actions.actions[2].x;
        assert!((probe[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!((p1.meta.rho.unwrap() - (4.0f64 / 4096.0).cbrt()).abs() < 1e-15);
        let (kappa, _) = geometry::kappa_star(&p1.actions).unwrap();
        assert!((kappa - 4.0).abs() < 1e-6);
    }

    #[test]
    fn worst_case_kappa_one_probe_vanishes() {
        let (p1, _) = worst_case_instance(1.0, 2, 64).unwrap();
        assert_eq!(p1.actions.actions[2].x, vec![0.0, 0.0]);
        let (kappa, _) = geometry::kappa_star(&p1.actions).unwrap();
        assert!((kappa - 1.0).abs() < 1e-6);
        assert!(worst_case_instance(1.0, 2, 63).is_err());
    }

    #[test]
    fn worst_case_pair_is_indistinguishable_except_probe() {
        let (p1, p2) = worst_case_instance(9.0, 4, 1 << 14).unwrap();
        let k = p1.actions.len();
        for i in 0..k - 1 {
            let e1 = p1.theta.evaluation(&p1.actions, i);
            let e2 = p2.theta.evaluation(&p2.actions, i);
            assert!((e1 - e2).abs() < 1e-12, "action {i}: {e1} vs {e2}");
        }
        // Probe evaluations differ by exactly ρα = 2ρ/(√κ+1).
        let rho = p1.meta.rho.unwrap();
        let alpha = 2.0 / (9.0f64.sqrt() + 1.0);
        let diff = (p1.theta.evaluation(&p1.actions, k - 1)
            - p2.theta.evaluation(&p2.actions, k - 1))
        .abs();
        assert!((diff - rho * alpha).abs() < 1e-12);
    }

    #[test]
    fn gap_instance_examples() {
        let inst = gap_instance(4.0, 4, 0.05, 0.1, 1).unwrap();
        assert_eq!(inst.meta.best_index, 0);
        let g = model::gaps(&inst.actions, &inst.theta);
        assert!((g.delta_min - 0.05).abs() < 1e-12);
        assert!((g.delta_neq - 0.1).abs() < 1e-12);
        assert!(g.unique_best);

        // Alternative ⌊d/2⌋+1 = 3 puts the best action in the minus group.
        let alt = gap_instance(4.0, 4, 0.05, 0.1, 3).unwrap();
        assert_eq!(alt.actions.actions[alt.meta.best_index].z, Group::MINUS);
        let g = model::gaps(&alt.actions, &alt.theta);
        assert!((g.delta_min - 0.05).abs() < 1e-12);
        assert!((g.delta_neq - 0.1).abs() < 1e-12);

        // Middle alternatives keep the declared gaps too.
        let mid = gap_instance(4.0, 6, 0.05, 0.1, 2).unwrap();
        let g = model::gaps(&mid.actions, &mid.theta);
        assert_eq!(g.best_index, 1);
        assert!((g.delta_min - 0.05).abs() < 1e-12);
        assert!((g.delta_neq - 0.1).abs() < 1e-12);
    }

    #[test]
    fn gap_instance_closed_form_kappa_of_delta() {
        // κ(Δ) with the zero gap floored: (1+√κ)²Δ_{d+1}/4 in the limit.
        let inst = gap_instance(4.0, 4, 0.05, 0.1, 1).unwrap();
        let g = model::gaps(&inst.actions, &inst.theta);
        let floor = 1e-8;
        let gaps: Vec<f64> = g.delta.iter().map(|&x| x.max(floor)).collect();
        let kappa_delta = crate::design::delta_optimal_design(&inst.actions, &gaps)
            .unwrap()
            .kappa;
        let probe_gap = g.delta[inst.actions.len() - 1];
        let expected = (1.0 + 4.0f64.sqrt()).powi(2) * probe_gap / 4.0;
        assert!(
            (kappa_delta - expected).abs() <= 1e-4 * expected,
            "kappa(delta) {kappa_delta} vs closed form {expected}"
        );
    }

    #[test]
    fn gap_instance_range_checks() {
        assert!(gap_instance(1.5, 4, 0.05, 0.1, 1).is_err());
        assert!(gap_instance(4.0, 3, 0.05, 0.1, 1).is_err());
        assert!(gap_instance(4.0, 4, 0.2, 0.1, 1).is_err());
        assert!(gap_instance(4.0, 4, 0.05, 0.1, 4).is_err());
    }

    #[test]
    fn small_d_instances() {
        let c2 = small_d_gap_instance(2, 2, 4.0, 0.05, 0.1).unwrap();
        assert_eq!(c2.actions.len(), 3);
        assert!((c2.theta.omega + 0.05).abs() < 1e-15);
        c2.self_check().unwrap();

        let c1 = small_d_gap_instance(3, 1, 1.0, 0.05, 0.05).unwrap();
        assert_eq!(c1.theta.omega, 0.0);
        c1.self_check().unwrap();
        let g = model::gaps(&c1.actions, &c1.theta);
        assert!((g.delta_min - 0.05).abs() < 1e-12);
    }

    #[test]
    fn adversarial_instance_misleads_evaluation_order() {
        let inst = worst_case_adversarial(4.0, 2).unwrap();
        let g = model::gaps(&inst.actions, &inst.theta);
        assert_eq!(g.best_index, 1);
        // The advantaged plus-group action has the highest evaluation.
        let evals: Vec<f64> = (0..inst.actions.len())
            .map(|i| inst.theta.evaluation(&inst.actions, i))
            .collect();
        let argmax = (0..evals.len())
            .max_by(|&a, &b| evals[a].partial_cmp(&evals[b]).unwrap())
            .unwrap();
        assert_eq!(argmax, 0);
        assert_eq!(inst.actions.actions[0].z, Group::PLUS);
    }

    #[test]
    fn fixture_is_valid_and_separable() {
        let fix = five_action_fixture();
        fix.self_check().unwrap();
        let (kappa, _) = geometry::kappa_star(&fix.actions).unwrap();
        assert!(kappa > 1.0, "kappa {kappa}");
        let margin = geometry::separating_margin(&fix.actions).unwrap().unwrap();
        for a in &fix.actions.actions {
            assert!(dot(&a.x, &margin.normal) * a.z.sign() < 0.0);
        }
    }

    #[test]
    fn margin_ratio_formula_on_worst_case_sets() {
        for (kappa, expect) in [(4.0, 1.0 / 3.0), (9.0, 0.5)] {
            let set = worst_case_action_set(kappa, 2).unwrap();
            let m = geometry::separating_margin(&set).unwrap().unwrap();
            assert!(
                (m.margin_ratio - expect).abs() < 1e-6,
                "kappa {kappa}: ratio {}",
                m.margin_ratio
            );
        }
    }
}
