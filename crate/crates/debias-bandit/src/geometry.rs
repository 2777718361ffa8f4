//! Action sets for the biased linear bandit and the geometry of bias
//! estimation: κ*, its margin characterization, and the worst-case
//! alignment constant.
//!
//! An action is a covariate `x ∈ R^d` plus a binary group label
//! `z ∈ {-1, +1}`; the lifted vector `a_x = (x, z)` lives in dimension
//! `d+1` and is what every design and estimation routine consumes.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design;
use crate::linalg::{self, Matrix};
use crate::lp;
use crate::rng::SplitMix64;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid action set: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("internal solver failure: {0}")]
    Solver(String),
}

/// Group label, restricted to exactly -1 or +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Group(i8);

impl Group {
    pub const PLUS: Group = Group(1);
    pub const MINUS: Group = Group(-1);

    pub fn new(z: i8) -> Option<Group> {
        match z {
            1 | -1 => Some(Group(z)),
            _ => None,
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        self.0 as f64
    }

    #[inline]
    pub fn value(self) -> i8 {
        self.0
    }

    #[inline]
    pub fn opposite(self) -> Group {
        Group(-self.0)
    }
}

impl Serialize for Group {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.0)
    }
}

impl<'de> Deserialize<'de> for Group {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let z = i8::deserialize(d)?;
        Group::new(z).ok_or_else(|| serde::de::Error::custom("group label must be -1 or +1"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Action {
    pub x: Vec<f64>,
    pub z: Group,
}

/// The set `{(x, z_x)}` of covariates and sensitive attributes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSet {
    pub d: usize,
    pub actions: Vec<Action>,
}

/// A failed model assumption, reported as data rather than an error.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateCovariate { first: usize, second: usize },
    EmptyGroup { group: i8 },
    SpanDeficiency { rank: usize, needed: usize },
    WrongCovariateLength { index: usize, got: usize },
    NonFiniteCovariate { index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateCovariate { first, second } => {
                write!(f, "duplicate covariate at indices {first},{second}")
            }
            Violation::EmptyGroup { group } => write!(f, "group {group} is empty"),
            Violation::SpanDeficiency { rank, needed } => {
                write!(f, "span deficiency: rank {rank} < {needed}")
            }
            Violation::WrongCovariateLength { index, got } => {
                write!(f, "covariate {index} has length {got}")
            }
            Violation::NonFiniteCovariate { index } => {
                write!(f, "covariate {index} has NaN/Inf entries")
            }
        }
    }
}

impl ActionSet {
    pub fn new(d: usize, actions: Vec<Action>) -> Self {
        ActionSet { d, actions }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Lifted vector `a_x = (x, z_x)` in dimension d+1.
    pub fn lifted(&self, index: usize) -> Vec<f64> {
        let a = &self.actions[index];
        let mut v = Vec::with_capacity(self.d + 1);
        v.extend_from_slice(&a.x);
        v.push(a.z.sign());
        v
    }

    pub fn lifted_all(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.lifted(i)).collect()
    }

    pub fn group_indices(&self, z: Group) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.actions[i].z == z)
            .collect()
    }

    /// `e_{d+1}`, the direction of the bias coordinate.
    pub fn bias_direction(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.d + 1];
        c[self.d] = 1.0;
        c
    }

    /// Checks the three model assumptions; empty result means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for (i, a) in self.actions.iter().enumerate() {
            if a.x.len() != self.d {
                violations.push(Violation::WrongCovariateLength {
                    index: i,
                    got: a.x.len(),
                });
            }
            if !a.x.iter().all(|v| v.is_finite()) {
                violations.push(Violation::NonFiniteCovariate { index: i });
            }
        }
        if !violations.is_empty() {
            return violations;
        }
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if self.actions[i].x == self.actions[j].x {
                    violations.push(Violation::DuplicateCovariate { first: i, second: j });
                }
            }
        }
        for z in [Group::PLUS, Group::MINUS] {
            if self.group_indices(z).is_empty() {
                violations.push(Violation::EmptyGroup { group: z.value() });
            }
        }
        if !self.actions.is_empty() {
            let lifted = self.lifted_all();
            let weights = vec![1.0; lifted.len()];
            let v = Matrix::weighted_outer_sum(&lifted, &weights);
            match linalg::symmetric_rank(&v) {
                Ok(rank) if rank < self.d + 1 => violations.push(Violation::SpanDeficiency {
                    rank,
                    needed: self.d + 1,
                }),
                Ok(_) => {}
                Err(e) => violations.push(Violation::NonFiniteCovariate {
                    index: usize::MAX - if matches!(e, linalg::LinalgError::NotFinite) { 0 } else { 1 },
                }),
            }
        }
        violations
    }

    pub fn ensure_valid(&self) -> Result<(), GeometryError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(GeometryError::Invalid(v))
        }
    }

    pub fn load(path: &Path) -> Result<ActionSet, GeometryError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), GeometryError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Minimal variance of the bias estimator: the value of the
/// `e_{d+1}`-optimal design problem, along with an optimal probability
/// design (support ≤ d+1).
pub fn kappa_star(actions: &ActionSet) -> Result<(f64, design::Design), GeometryError> {
    actions.ensure_valid()?;
    let (dsn, variance) = design::c_optimal_design(actions, &actions.bias_direction())
        .map_err(|e| GeometryError::Solver(e.to_string()))?;
    Ok((variance, dsn))
}

/// Result of the Chebyshev linear program behind the margin form of κ*.
#[derive(Debug, Clone)]
pub struct MarginForm {
    pub kappa: f64,
    /// Maximizing direction u ∈ R^d (zero when κ* = 1 and no separator helps).
    pub normal: Vec<f64>,
    /// The optimal value t = min_u max_x |z_x x'u + 1| = κ*^{-1/2}.
    pub chebyshev_value: f64,
}

/// κ* via its margin characterization: the Chebyshev LP
/// minimize t s.t. -t ≤ z_x·x'u + 1 ≤ t, returning t^{-2}.
pub fn kappa_star_margin_form(actions: &ActionSet) -> Result<MarginForm, GeometryError> {
    actions.ensure_valid()?;
    let d = actions.d;
    let k = actions.len();
    // Variables: u+ (d), u- (d), t, slacks (2k).
    let n = 2 * d + 1 + 2 * k;
    let mut a = Vec::with_capacity(2 * k);
    let mut b = Vec::with_capacity(2 * k);
    for (i, act) in actions.actions.iter().enumerate() {
        let zs = act.z.sign();
        // z x'u - t + s_i = -1
        let mut row = vec![0.0; n];
        for j in 0..d {
            row[j] = zs * act.x[j];
            row[d + j] = -zs * act.x[j];
        }
        row[2 * d] = -1.0;
        row[2 * d + 1 + i] = 1.0;
        a.push(row);
        b.push(-1.0);
        // -z x'u - t + s_{k+i} = 1
        let mut row = vec![0.0; n];
        for j in 0..d {
            row[j] = -zs * act.x[j];
            row[d + j] = zs * act.x[j];
        }
        row[2 * d] = -1.0;
        row[2 * d + 1 + k + i] = 1.0;
        a.push(row);
        b.push(1.0);
    }
    let mut c = vec![0.0; n];
    c[2 * d] = 1.0;
    let sol = lp::solve(&a, &b, &c).map_err(|e| GeometryError::Solver(e.to_string()))?;
    let t = sol.objective;
    if !(t > 0.0) {
        return Err(GeometryError::Solver(format!(
            "Chebyshev LP returned non-positive value {t}"
        )));
    }
    let normal: Vec<f64> = (0..d).map(|j| sol.x[j] - sol.x[d + j]).collect();
    Ok(MarginForm {
        kappa: t.powi(-2),
        normal,
        chebyshev_value: t,
    })
}

/// A separating hyperplane through the origin, when one exists.
#[derive(Debug, Clone)]
pub struct SeparatingMargin {
    pub normal: Vec<f64>,
    /// (√κ*−1)/(√κ*+1): the guaranteed margin as a fraction of the
    /// maximum distance of any action to the hyperplane.
    pub margin_ratio: f64,
}

/// Returns the separating hyperplane normal and margin ratio when κ* > 1;
/// absent when the groups cannot be separated through the origin.
pub fn separating_margin(
    actions: &ActionSet,
) -> Result<Option<SeparatingMargin>, GeometryError> {
    let form = kappa_star_margin_form(actions)?;
    if form.kappa <= 1.0 + 1e-9 {
        return Ok(None);
    }
    let sqrt_kappa = form.kappa.sqrt();
    let margin_ratio = (sqrt_kappa - 1.0) / (sqrt_kappa + 1.0);
    // The optimizer must place every action strictly on the side opposite
    // its label, with |x'u| between 1−t and 1+t.
    let mut min_abs = f64::INFINITY;
    let mut max_abs: f64 = 0.0;
    for act in &actions.actions {
        let proj = linalg::dot(&act.x, &form.normal);
        if proj * act.z.sign() >= 0.0 {
            return Err(GeometryError::Solver(
                "margin LP optimizer does not separate the groups".into(),
            ));
        }
        min_abs = min_abs.min(proj.abs());
        max_abs = max_abs.max(proj.abs());
    }
    if min_abs / max_abs < margin_ratio - 1e-6 {
        return Err(GeometryError::Solver(format!(
            "margin ratio check failed: {} < {}",
            min_abs / max_abs,
            margin_ratio
        )));
    }
    Ok(Some(SeparatingMargin {
        normal: form.normal,
        margin_ratio,
    }))
}

/// Randomized lower estimate of the worst-case alignment constant
/// α = max_u max_{x,x'}((x−x')'u)² / max_x(z_x x'u + 1)².
///
/// Ratios are evaluated at sampled sphere directions over several radii
/// (including very large ones, where the ratio tends to the projective
/// form that witnesses α ≥ 1) plus the Chebyshev LP maximizer.
pub fn alignment_constant_estimate(
    actions: &ActionSet,
    directions: usize,
) -> Result<f64, GeometryError> {
    actions.ensure_valid()?;
    let directions = directions.max(1000);
    let d = actions.d;
    let mut rng = SplitMix64::new(0x616c69676e); // fixed: estimate is deterministic
    let radii = [0.25, 1.0, 4.0, 16.0, 256.0, 1e4, 1e8];

    let ratio = |u: &[f64]| -> f64 {
        let projs: Vec<f64> = actions
            .actions
            .iter()
            .map(|a| linalg::dot(&a.x, u))
            .collect();
        let mut spread_max = f64::NEG_INFINITY;
        let mut spread_min = f64::INFINITY;
        let mut denom: f64 = 0.0;
        for (a, &p) in actions.actions.iter().zip(&projs) {
            spread_max = spread_max.max(p);
            spread_min = spread_min.min(p);
            let v = a.z.sign() * p + 1.0;
            denom = denom.max(v * v);
        }
        let spread = spread_max - spread_min;
        if denom <= 0.0 {
            return 0.0;
        }
        spread * spread / denom
    };

    let mut best: f64 = 0.0;
    let form = kappa_star_margin_form(actions)?;
    if form.normal.iter().any(|v| v.abs() > 0.0) {
        for &r in &radii {
            let u: Vec<f64> = form.normal.iter().map(|v| v * r).collect();
            best = best.max(ratio(&u));
        }
        best = best.max(ratio(&form.normal));
    }
    for _ in 0..directions {
        let u = rng.unit_vector(d);
        for &r in &radii {
            let scaled: Vec<f64> = u.iter().map(|v| v * r).collect();
            best = best.max(ratio(&scaled));
            let neg: Vec<f64> = scaled.iter().map(|v| -v).collect();
            best = best.max(ratio(&neg));
        }
    }
    Ok(best)
}
