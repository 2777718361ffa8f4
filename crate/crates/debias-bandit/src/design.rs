//! Optimal-design solvers: G-optimal (Frank-Wolfe with exact line search),
//! c-optimal (Elfving's characterization as an ℓ1 linear program), the
//! Δ-optimal design obtained by rescaling, and exact-design rounding.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::geometry::ActionSet;
use crate::linalg::{self, Matrix};
use crate::lp;

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("active set is empty")]
    EmptyActiveSet,
    #[error("target vector not in the span of the lifted actions")]
    TargetOutsideSpan,
    #[error("gap vector entries must be positive")]
    NonPositiveGap,
    #[error("rounding scale must be positive")]
    NonPositiveScale,
    #[error("design has empty support")]
    EmptySupport,
    #[error("solver failure: {0}")]
    Numerical(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    /// Weights sum to one.
    Probability,
    /// Arbitrary nonnegative mass.
    Measure,
}

/// Nonnegative weighting of actions; only strictly positive weights are
/// stored, so the key set is the support.
#[derive(Debug, Clone)]
pub struct Design {
    pub weights: BTreeMap<usize, f64>,
    pub kind: DesignKind,
}

impl Design {
    pub fn new(kind: DesignKind, weights: BTreeMap<usize, f64>) -> Self {
        let weights = weights.into_iter().filter(|(_, w)| *w > 0.0).collect();
        Design { weights, kind }
    }

    pub fn support(&self) -> Vec<usize> {
        self.weights.keys().copied().collect()
    }

    pub fn weight(&self, index: usize) -> f64 {
        self.weights.get(&index).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.values().sum()
    }

    /// Covariance `V = Σ w(x) a_x a_xᵀ` over the lifted vectors of `actions`.
    pub fn covariance(&self, actions: &ActionSet) -> Matrix {
        let vectors: Vec<Vec<f64>> = self.weights.keys().map(|&i| actions.lifted(i)).collect();
        let weights: Vec<f64> = self.weights.values().copied().collect();
        Matrix::weighted_outer_sum(&vectors, &weights)
    }
}

/// Integer allocation obtained by rounding a design.
#[derive(Debug, Clone)]
pub struct Allocation {
    pub counts: BTreeMap<usize, u64>,
}

impl Allocation {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn covariance(&self, actions: &ActionSet) -> Matrix {
        let vectors: Vec<Vec<f64>> = self.counts.keys().map(|&i| actions.lifted(i)).collect();
        let weights: Vec<f64> = self.counts.values().map(|&c| c as f64).collect();
        Matrix::weighted_outer_sum(&vectors, &weights)
    }
}

/// `counts(x) = ⌈m·w(x)⌉` on the support. Guarantees
/// `V(alloc) ⪰ m·V(design)` in the PSD order.
pub fn round_allocation(design: &Design, m: f64) -> Result<Allocation, DesignError> {
    if !(m > 0.0) {
        return Err(DesignError::NonPositiveScale);
    }
    if design.weights.is_empty() {
        return Err(DesignError::EmptySupport);
    }
    let counts = design
        .weights
        .iter()
        .map(|(&i, &w)| (i, (m * w).ceil() as u64))
        .collect();
    Ok(Allocation { counts })
}

// ---------------------------------------------------------------------------
// G-optimal design (Frank-Wolfe / Fedorov-Wynn)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GDesign {
    /// Weights aligned with the input point list.
    pub weights: Vec<f64>,
    /// max_x a_xᵀ V(π)⁺ a_x at the returned design.
    pub g_value: f64,
    /// Dimension of the span of the input points.
    pub span_dim: usize,
    pub iterations: usize,
}

const FW_MAX_ITER: usize = 100_000;
const FW_REFRESH_EVERY: usize = 512;
const PRUNE_TOL: f64 = 1e-9;

/// Frank-Wolfe on the raw point set. Points may be rank-deficient; they are
/// projected onto an orthonormal basis of their span first (leverages are
/// basis-invariant).
pub fn g_design_core(points: &[Vec<f64>], tol: f64) -> Result<GDesign, DesignError> {
    if points.is_empty() {
        return Err(DesignError::EmptyActiveSet);
    }
    let ones = vec![1.0; points.len()];
    let gram = Matrix::weighted_outer_sum(points, &ones);
    let basis = linalg::image_basis(&gram).map_err(|e| DesignError::Numerical(e.to_string()))?;
    let r = basis.cols();
    if r == 0 {
        return Err(DesignError::Numerical("all points are zero".into()));
    }
    let bt = basis.transpose();
    let projected: Vec<Vec<f64>> = points.iter().map(|p| bt.matvec(p)).collect();
    let k = projected.len();
    let rf = r as f64;

    let mut weights = vec![1.0 / k as f64; k];
    let mut v_inv = inverse_of_covariance(&projected, &weights)?;
    let mut iterations = 0;

    loop {
        let (best, lmax) = max_leverage(&projected, &v_inv);
        if lmax <= (1.0 + tol) * rf || iterations >= FW_MAX_ITER {
            // Prune negligible weights, renormalize, re-verify.
            let pruned = prune_and_reduce(&projected, &weights, r, tol)?;
            let v_inv =
                inverse_of_covariance(&projected, &pruned).unwrap_or_else(|_| v_inv.clone());
            let (_, g_value) = max_leverage(&projected, &v_inv);
            return Ok(GDesign {
                weights: pruned,
                g_value,
                span_dim: r,
                iterations,
            });
        }
        // Exact line search for the G/D objective.
        let step = (lmax - rf) / (rf * (lmax - 1.0));
        for w in weights.iter_mut() {
            *w *= 1.0 - step;
        }
        weights[best] += step;
        iterations += 1;
        if iterations % FW_REFRESH_EVERY == 0 {
            v_inv = inverse_of_covariance(&projected, &weights)?;
        } else {
            sherman_morrison_update(&mut v_inv, &projected[best], step);
        }
    }
}

fn inverse_of_covariance(points: &[Vec<f64>], weights: &[f64]) -> Result<Matrix, DesignError> {
    let v = Matrix::weighted_outer_sum(points, weights);
    v.inverse()
        .ok_or_else(|| DesignError::Numerical("projected covariance is singular".into()))
}

/// Rank-one update of `V⁻¹` after `V ← (1−s)V + s bbᵀ`.
fn sherman_morrison_update(v_inv: &mut Matrix, b: &[f64], s: f64) {
    let r = v_inv.rows();
    let scale = 1.0 / (1.0 - s);
    let vb = v_inv.matvec(b);
    let denom = 1.0 + (s * scale) * linalg::dot(b, &vb);
    let factor = (s * scale) / denom;
    for i in 0..r {
        for j in 0..r {
            let updated = scale * (v_inv.get(i, j) - factor * vb[i] * vb[j]);
            v_inv.set(i, j, updated);
        }
    }
}

fn max_leverage(points: &[Vec<f64>], v_inv: &Matrix) -> (usize, f64) {
    let mut best = 0;
    let mut lmax = f64::NEG_INFINITY;
    for (i, p) in points.iter().enumerate() {
        let l = linalg::quad_form(v_inv, p);
        if l > lmax {
            lmax = l;
            best = i;
        }
    }
    (best, lmax)
}

/// Drop weights below `PRUNE_TOL`, renormalize, then reduce the support to
/// at most `r(r+1)/2 + 1` points by eliminating null directions of the
/// moment map (which preserves V(π) and the total mass exactly).
fn prune_and_reduce(
    points: &[Vec<f64>],
    weights: &[f64],
    r: usize,
    tol: f64,
) -> Result<Vec<f64>, DesignError> {
    let mut w: Vec<f64> = weights
        .iter()
        .map(|&x| if x < PRUNE_TOL { 0.0 } else { x })
        .collect();
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(DesignError::EmptySupport);
    }
    for x in w.iter_mut() {
        *x /= total;
    }
    let bound = r * (r + 1) / 2 + 1;
    let _ = tol;
    loop {
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        if support.len() <= bound {
            return Ok(w);
        }
        // Moment vectors (vech of b bᵀ plus the normalization row).
        let dim = r * (r + 1) / 2 + 1;
        let moments: Vec<Vec<f64>> = support
            .iter()
            .map(|&i| {
                let b = &points[i];
                let mut m = Vec::with_capacity(dim);
                for p in 0..r {
                    for q in p..r {
                        m.push(b[p] * b[q]);
                    }
                }
                m.push(1.0);
                m
            })
            .collect();
        // Null combination Σ η_i moments_i = 0 via the smallest eigenvector
        // of the Gram matrix.
        let m = support.len();
        let mut gram = Matrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram.set(i, j, linalg::dot(&moments[i], &moments[j]));
            }
        }
        let eig = linalg::eigen_symmetric(&gram)
            .map_err(|e| DesignError::Numerical(e.to_string()))?;
        let lambda_min = *eig.values.last().unwrap();
        let scale = eig.values[0].abs().max(1.0);
        if lambda_min.abs() > 1e-14 * scale {
            // Moment vectors are linearly independent; no exact reduction.
            return Ok(w);
        }
        let eta: Vec<f64> = (0..m).map(|i| eig.vectors.get(i, m - 1)).collect();
        let mut t_star = f64::INFINITY;
        for (i, &idx) in support.iter().enumerate() {
            if eta[i] > 1e-15 {
                t_star = t_star.min(w[idx] / eta[i]);
            }
        }
        if !t_star.is_finite() {
            // Flip the direction; some entry must be positive in one of them.
            let mut t_neg = f64::INFINITY;
            for (i, &idx) in support.iter().enumerate() {
                if eta[i] < -1e-15 {
                    t_neg = t_neg.min(w[idx] / -eta[i]);
                }
            }
            if !t_neg.is_finite() {
                return Ok(w);
            }
            for (i, &idx) in support.iter().enumerate() {
                w[idx] = (w[idx] + t_neg * eta[i]).max(0.0);
            }
        } else {
            for (i, &idx) in support.iter().enumerate() {
                w[idx] = (w[idx] - t_star * eta[i]).max(0.0);
            }
        }
        // Zero out anything that landed at numerical zero.
        for x in w.iter_mut() {
            if *x < 1e-15 {
                *x = 0.0;
            }
        }
    }
}

/// G-optimal design over the lifted vectors of `active` indices. Returns a
/// probability design (support pruned, size at most (d+1)(d+2)/2) and the
/// attained value `max a_xᵀ V(π)⁺ a_x`.
pub fn g_optimal_design(
    actions: &ActionSet,
    active: &[usize],
    tol: f64,
) -> Result<(Design, f64), DesignError> {
    if active.is_empty() {
        return Err(DesignError::EmptyActiveSet);
    }
    let points: Vec<Vec<f64>> = active.iter().map(|&i| actions.lifted(i)).collect();
    let core = g_design_core(&points, tol)?;
    let mut weights = BTreeMap::new();
    for (slot, &idx) in active.iter().enumerate() {
        if core.weights[slot] > 0.0 {
            weights.insert(idx, core.weights[slot]);
        }
    }
    Ok((Design::new(DesignKind::Probability, weights), core.g_value))
}

// ---------------------------------------------------------------------------
// c-optimal design (Elfving / ℓ1 linear program)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CDesign {
    pub weights: Vec<f64>,
    pub variance: f64,
    pub iterations: usize,
}

/// c-optimal design on raw points: minimize Σ|β| subject to Σ β_x a_x = c
/// (split β = p − q). With π(x) = |β_x|/Σ|β|, the optimal variance
/// cᵀV(π)⁺c equals (Σ|β|)²; the optimal basis gives support ≤ dim(c).
pub fn c_design_core(points: &[Vec<f64>], c: &[f64]) -> Result<CDesign, DesignError> {
    if points.is_empty() {
        return Err(DesignError::EmptyActiveSet);
    }
    let dim = c.len();
    let k = points.len();
    if c.iter().all(|&v| v == 0.0) {
        return Err(DesignError::TargetOutsideSpan);
    }
    let mut a = vec![vec![0.0; 2 * k]; dim];
    for (j, p) in points.iter().enumerate() {
        assert_eq!(p.len(), dim, "point dimension mismatch");
        for i in 0..dim {
            a[i][j] = p[i];
            a[i][k + j] = -p[i];
        }
    }
    let cost = vec![1.0; 2 * k];
    let sol = match lp::solve(&a, c, &cost) {
        Ok(s) => s,
        Err(lp::LpError::Infeasible) => return Err(DesignError::TargetOutsideSpan),
        Err(e) => return Err(DesignError::Numerical(e.to_string())),
    };
    let beta: Vec<f64> = (0..k).map(|j| sol.x[j] - sol.x[k + j]).collect();
    let total: f64 = beta.iter().map(|b| b.abs()).sum();
    if total <= 0.0 {
        return Err(DesignError::TargetOutsideSpan);
    }
    let weights: Vec<f64> = beta.iter().map(|b| b.abs() / total).collect();
    Ok(CDesign {
        weights,
        variance: total * total,
        iterations: sol.iterations,
    })
}

/// c-optimal probability design over the full lifted action set.
pub fn c_optimal_design(actions: &ActionSet, c: &[f64]) -> Result<(Design, f64), DesignError> {
    let points = actions.lifted_all();
    let core = c_design_core(&points, c)?;
    let mut weights = BTreeMap::new();
    for (i, &w) in core.weights.iter().enumerate() {
        if w > PRUNE_TOL {
            weights.insert(i, w);
        }
    }
    let dsn = Design::new(DesignKind::Probability, weights);
    debug_assert!(dsn.support().len() <= actions.d + 1);
    Ok((dsn, core.variance))
}

// ---------------------------------------------------------------------------
// Δ-optimal design
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DeltaDesign {
    pub measure: Design,
    /// κ(Δ) = Σ μ(x)Δ_x, the minimal exploration regret.
    pub kappa: f64,
    pub iterations: usize,
}

/// Δ-optimal design: the nonnegative measure minimizing Σ μ(x)Δ_x subject
/// to a unit bias-estimation variance. Computed by rescaling the lifted
/// vectors to Δ_x^{-1/2} a_x, solving the e_{d+1}-optimal problem there,
/// and mapping back via μ(x) = κ^Δ π^Δ(x) / Δ_x.
pub fn delta_optimal_design(
    actions: &ActionSet,
    gaps: &[f64],
) -> Result<DeltaDesign, DesignError> {
    if gaps.len() != actions.len() {
        return Err(DesignError::Numerical(format!(
            "gap vector has length {}, expected {}",
            gaps.len(),
            actions.len()
        )));
    }
    if gaps.iter().any(|&g| !(g > 0.0)) {
        return Err(DesignError::NonPositiveGap);
    }
    let rescaled: Vec<Vec<f64>> = (0..actions.len())
        .map(|i| {
            let s = gaps[i].sqrt().recip();
            actions.lifted(i).into_iter().map(|v| v * s).collect()
        })
        .collect();
    let core = c_design_core(&rescaled, &actions.bias_direction())?;
    let kappa = core.variance;
    let mut weights = BTreeMap::new();
    for (i, &w) in core.weights.iter().enumerate() {
        if w > PRUNE_TOL {
            weights.insert(i, kappa * w / gaps[i]);
        }
    }
    let measure = Design::new(DesignKind::Measure, weights);
    // The measure must make the bias coordinate estimable at variance ≤ 1.
    let v = measure.covariance(actions);
    let pinv = linalg::pseudo_inverse(&v).map_err(|e| DesignError::Numerical(e.to_string()))?;
    let e_last = actions.bias_direction();
    if !linalg::in_image(&v, &e_last).map_err(|e| DesignError::Numerical(e.to_string()))? {
        return Err(DesignError::Numerical(
            "bias direction left the image of the Δ-design covariance".into(),
        ));
    }
    let variance = linalg::quad_form(&pinv, &e_last);
    if variance > 1.0 + 1e-6 {
        return Err(DesignError::Numerical(format!(
            "Δ-design variance constraint violated: {variance}"
        )));
    }
    Ok(DeltaDesign {
        measure,
        kappa,
        iterations: core.iterations,
    })
}
