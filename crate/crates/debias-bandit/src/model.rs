//! The biased linear bandit environment: parameters θ = (γ, ω), biased
//! Gaussian evaluations y = x'γ + z·ω + σξ, gap computation and regret.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ActionSet, Group};
use crate::linalg::dot;
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("action index {0} out of range ({1} actions)")]
    IndexOutOfRange(usize, usize),
    #[error("parameter dimension {got} does not match action set dimension {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// θ = (γ, ω): reward vector and bias scalar.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub gamma: Vec<f64>,
    pub omega: f64,
}

impl Parameter {
    pub fn new(gamma: Vec<f64>, omega: f64) -> Self {
        Parameter { gamma, omega }
    }

    /// True (unbiased) reward x'γ of an action.
    pub fn reward(&self, actions: &ActionSet, index: usize) -> f64 {
        dot(&actions.actions[index].x, &self.gamma)
    }

    /// Mean biased evaluation x'γ + z·ω.
    pub fn evaluation(&self, actions: &ActionSet, index: usize) -> f64 {
        self.reward(actions, index) + actions.actions[index].z.sign() * self.omega
    }

    /// Admissibility: max_x |x'γ| ≤ 1.
    pub fn is_admissible(&self, actions: &ActionSet) -> bool {
        (0..actions.len()).all(|i| self.reward(actions, i).abs() <= 1.0 + 1e-12)
    }

    /// Full lifted parameter (γ, ω) in dimension d+1.
    pub fn lifted(&self) -> Vec<f64> {
        let mut v = self.gamma.clone();
        v.push(self.omega);
        v
    }

    pub fn load(path: &Path) -> Result<Parameter, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Gap structure of an instance under a parameter.
#[derive(Debug, Clone)]
pub struct GapSummary {
    /// Δ_x = max_{x'}(x' − x)'γ per action, zero at the best index.
    pub delta: Vec<f64>,
    /// Smallest gap among non-best actions.
    pub delta_min: f64,
    /// Smallest gap among actions in the group opposite the best action.
    pub delta_neq: f64,
    pub best_index: usize,
    /// False when several actions tie for the best reward exactly.
    pub unique_best: bool,
}

/// Gaps, Δ_min, Δ_neq and the best action. Ties for best break toward the
/// lowest index and are flagged.
pub fn gaps(actions: &ActionSet, p: &Parameter) -> GapSummary {
    let rewards: Vec<f64> = (0..actions.len()).map(|i| p.reward(actions, i)).collect();
    let mut best_index = 0;
    for (i, &r) in rewards.iter().enumerate() {
        if r > rewards[best_index] {
            best_index = i;
        }
    }
    let best = rewards[best_index];
    let unique_best = rewards
        .iter()
        .enumerate()
        .filter(|&(i, &r)| i != best_index && r == best)
        .count()
        == 0;
    let delta: Vec<f64> = rewards.iter().map(|&r| best - r).collect();
    let z_best = actions.actions[best_index].z;
    let mut delta_min = f64::INFINITY;
    let mut delta_neq = f64::INFINITY;
    for (i, &d) in delta.iter().enumerate() {
        if i != best_index {
            delta_min = delta_min.min(d);
        }
        if actions.actions[i].z == z_best.opposite() {
            delta_neq = delta_neq.min(d);
        }
    }
    GapSummary {
        delta,
        delta_min,
        delta_neq,
        best_index,
        unique_best,
    }
}

/// Sum of per-step true-reward gaps along a chosen index sequence.
pub fn cumulative_regret(
    actions: &ActionSet,
    p: &Parameter,
    chosen: &[usize],
) -> Result<f64, ModelError> {
    let g = gaps(actions, p);
    let mut total = 0.0;
    for &idx in chosen {
        if idx >= actions.len() {
            return Err(ModelError::IndexOutOfRange(idx, actions.len()));
        }
        total += g.delta[idx];
    }
    Ok(total)
}

/// A seeded bandit environment. One environment per replication; the
/// evaluation stream is a pure function of the seed.
#[derive(Debug, Clone)]
pub struct Environment {
    pub actions: ActionSet,
    pub theta: Parameter,
    pub noise_std: f64,
    rng: SplitMix64,
}

impl Environment {
    pub fn new(
        actions: ActionSet,
        theta: Parameter,
        noise_std: f64,
        seed: u64,
    ) -> Result<Environment, ModelError> {
        if theta.gamma.len() != actions.d {
            return Err(ModelError::DimensionMismatch {
                got: theta.gamma.len(),
                expected: actions.d,
            });
        }
        Ok(Environment {
            actions,
            theta,
            noise_std,
            rng: SplitMix64::new(seed),
        })
    }

    /// Observe one biased evaluation of the chosen action.
    pub fn evaluate(&mut self, index: usize) -> Result<f64, ModelError> {
        if index >= self.actions.len() {
            return Err(ModelError::IndexOutOfRange(index, self.actions.len()));
        }
        let mean = self.theta.evaluation(&self.actions, index);
        let noise = if self.noise_std == 0.0 {
            // Keep the stream aligned between noisy and noiseless runs.
            self.rng.standard_normal();
            0.0
        } else {
            self.noise_std * self.rng.standard_normal()
        };
        Ok(mean + noise)
    }

    pub fn group_of(&self, index: usize) -> Group {
        self.actions.actions[index].z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Action;

    fn two_action_set() -> ActionSet {
        ActionSet::new(
            2,
            vec![
                Action {
                    x: vec![1.0, 0.0],
                    z: Group::PLUS,
                },
                Action {
                    x: vec![0.0, 1.0],
                    z: Group::MINUS,
                },
            ],
        )
    }

    #[test]
    fn noiseless_evaluation_is_the_biased_mean() {
        let set = two_action_set();
        let p = Parameter::new(vec![0.5, 0.0], -0.2);
        let mut env = Environment::new(set.clone(), p.clone(), 0.0, 1).unwrap();
        let y = env.evaluate(0).unwrap();
        assert!((y - 0.3).abs() < 1e-15);
        // Same covariate with z = −1 flips the bias sign.
        let mut flipped = set;
        flipped.actions[0].z = Group::MINUS;
        let mut env = Environment::new(flipped, p, 0.0, 1).unwrap();
        let y = env.evaluate(0).unwrap();
        assert!((y - 0.7).abs() < 1e-15);
    }

    #[test]
    fn noisy_sample_mean_matches_clt_bound() {
        let set = two_action_set();
        let p = Parameter::new(vec![0.5, 0.0], -0.2);
        let mut env = Environment::new(set, p, 1.0, 12345).unwrap();
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += env.evaluate(0).unwrap();
        }
        let mean = sum / n as f64;
        assert!((mean - 0.3).abs() < 0.005, "mean {mean}");
    }

    #[test]
    fn equal_seeds_give_bitwise_equal_streams() {
        let set = two_action_set();
        let p = Parameter::new(vec![0.5, 0.0], -0.2);
        let mut a = Environment::new(set.clone(), p.clone(), 1.0, 9).unwrap();
        let mut b = Environment::new(set, p, 1.0, 9).unwrap();
        for i in 0..1000 {
            let ya = a.evaluate(i % 2).unwrap();
            let yb = b.evaluate(i % 2).unwrap();
            assert_eq!(ya.to_bits(), yb.to_bits());
        }
    }

    #[test]
    fn gaps_basic() {
        let set = two_action_set();
        let p = Parameter::new(vec![0.6, 0.4], 0.0);
        let g = gaps(&set, &p);
        assert_eq!(g.best_index, 0);
        assert!(g.unique_best);
        assert_eq!(g.delta[0], 0.0);
        assert!((g.delta[1] - 0.2).abs() < 1e-15);
        assert!((g.delta_min - 0.2).abs() < 1e-15);
        assert!((g.delta_neq - 0.2).abs() < 1e-15);
    }

    #[test]
    fn gaps_flags_ties() {
        let set = two_action_set();
        let p = Parameter::new(vec![0.5, 0.5], 0.3);
        let g = gaps(&set, &p);
        assert_eq!(g.best_index, 0); // lowest index wins ties
        assert!(!g.unique_best);
    }

    #[test]
    fn regret_examples() {
        let set = two_action_set();
        let p = Parameter::new(vec![0.6, 0.4], 0.0);
        assert_eq!(cumulative_regret(&set, &p, &[0, 0, 0]).unwrap(), 0.0);
        let r = cumulative_regret(&set, &p, &[1; 5]).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        // Mixed sequence equals the direct sum of per-step gaps.
        let seq = [0, 1, 1, 0, 1];
        let g = gaps(&set, &p);
        let direct: f64 = seq.iter().map(|&i| g.delta[i]).sum();
        assert_eq!(cumulative_regret(&set, &p, &seq).unwrap(), direct);
        assert!(cumulative_regret(&set, &p, &[7]).is_err());
    }

    #[test]
    fn regret_is_monotone_along_any_trajectory() {
        let set = two_action_set();
        let p = Parameter::new(vec![0.6, 0.4], -0.5);
        let mut running = 0.0;
        let g = gaps(&set, &p);
        for step in 0..100 {
            let idx = step % 2;
            let next = running + g.delta[idx];
            assert!(next >= running);
            running = next;
        }
    }

    #[test]
    fn admissibility_is_a_reward_bound() {
        let set = two_action_set();
        assert!(Parameter::new(vec![1.0, -1.0], 5.0).is_admissible(&set));
        assert!(!Parameter::new(vec![1.5, 0.0], 0.0).is_admissible(&set));
    }

    #[test]
    fn parameter_json_rejects_unknown_fields() {
        let ok: Parameter = serde_json::from_str(r#"{"gamma": [0.1], "omega": -0.2}"#).unwrap();
        assert_eq!(ok.gamma.len(), 1);
        assert!(
            serde_json::from_str::<Parameter>(r#"{"gamma": [0.1], "omega": 0.0, "w": 1}"#)
                .is_err()
        );
    }
}
