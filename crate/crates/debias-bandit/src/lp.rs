//! Dense two-phase simplex for small equality-form linear programs:
//! minimize cᵀx subject to Ax = b, x ≥ 0.
//!
//! Bland's rule throughout, so the method cannot cycle. Problem sizes here
//! are tiny (rows ≤ ~10, columns ≤ ~200); a dense tableau is the simplest
//! correct tool. Vertex solutions matter: the c-optimal design support
//! bound comes from the optimal basis size.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex failed to converge")]
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Column indices of the final basis (one per constraint row).
    pub basis: Vec<usize>,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-9;

/// Minimize `cᵀx` subject to `Ax = b`, `x ≥ 0`.
///
/// `a` is row-major with `m` rows of length `n`; `b` has length `m`;
/// `c` has length `n`.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<LpSolution, LpError> {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    for row in a {
        assert_eq!(row.len(), n);
    }

    // Tableau with artificial variables: columns [x (n) | artificials (m) | rhs].
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = flip * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = flip * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    // Phase 1: minimize the sum of artificials.
    let mut phase1 = vec![0.0; width];
    for row in &t {
        for (j, v) in row.iter().enumerate() {
            phase1[j] -= v;
        }
    }
    for j in n..n + m {
        phase1[j] = 0.0;
    }
    let mut iterations = run_simplex(&mut t, &mut basis, &mut phase1, n + m)?;
    let phase1_value = -phase1[width - 1];
    if phase1_value > 1e-7 {
        return Err(LpError::Infeasible);
    }

    // Drive remaining artificial variables out of the basis where possible.
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > PIVOT_TOL) {
                pivot(&mut t, i, j);
                basis[i] = j;
            }
            // A row whose original columns are all zero is a redundant
            // constraint; its artificial stays basic at value zero.
        }
    }

    // Phase 2: original objective, artificial columns frozen.
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    // Express the objective in terms of non-basic variables.
    for i in 0..m {
        let coeff = obj[basis[i]];
        if coeff != 0.0 {
            for j in 0..width {
                obj[j] -= coeff * t[i][j];
            }
        }
    }
    iterations += run_simplex(&mut t, &mut basis, &mut obj, n)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width - 1];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution {
        x,
        objective,
        basis,
        iterations,
    })
}

/// Bland-rule simplex on the tableau; columns `>= allowed_cols` never enter.
fn run_simplex(
    t: &mut [Vec<f64>],
    basis: &mut [usize],
    obj: &mut Vec<f64>,
    allowed_cols: usize,
) -> Result<usize, LpError> {
    let m = t.len();
    let width = obj.len();
    let max_iter = 50_000 + 200 * (m + width);
    for iter in 0..max_iter {
        // Entering: lowest index with a negative reduced cost.
        let entering = (0..allowed_cols).find(|&j| obj[j] < -PIVOT_TOL);
        let entering = match entering {
            Some(j) => j,
            None => return Ok(iter),
        };
        // Leaving: min ratio, ties broken by lowest basis variable index.
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            let coeff = t[i][entering];
            if coeff > PIVOT_TOL {
                let ratio = t[i][width - 1] / coeff;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - PIVOT_TOL
                            || ((ratio - br).abs() <= PIVOT_TOL && basis[i] < basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let (row, _) = leaving.ok_or(LpError::Unbounded)?;
        pivot_with_obj(t, obj, row, entering);
        basis[row] = entering;
    }
    Err(LpError::IterationLimit)
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let width = t[0].len();
    let p = t[row][col];
    for j in 0..width {
        t[row][j] /= p;
    }
    for i in 0..t.len() {
        if i == row {
            continue;
        }
        let f = t[i][col];
        if f == 0.0 {
            continue;
        }
        for j in 0..width {
            t[i][j] -= f * t[row][j];
        }
    }
}

fn pivot_with_obj(t: &mut [Vec<f64>], obj: &mut [f64], row: usize, col: usize) {
    pivot(t, row, col);
    let f = obj[col];
    if f != 0.0 {
        for j in 0..obj.len() {
            obj[j] -= f * t[row][j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_basic_lp() {
        // min -x1 - 2x2 s.t. x1 + x2 + s = 4, x1 + 3x2 + s2 = 6
        let a = vec![
            vec![1.0, 1.0, 1.0, 0.0],
            vec![1.0, 3.0, 0.0, 1.0],
        ];
        let b = vec![4.0, 6.0];
        let c = vec![-1.0, -2.0, 0.0, 0.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.objective - (-7.0)).abs() < 1e-9, "{}", sol.objective);
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        // x1 = 1 and x1 = 2 simultaneously
        let a = vec![vec![1.0], vec![1.0]];
        let b = vec![1.0, 2.0];
        let c = vec![1.0];
        assert_eq!(solve(&a, &b, &c).unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 s.t. x1 - x2 = 0 (both can grow without bound)
        let a = vec![vec![1.0, -1.0]];
        let b = vec![0.0];
        let c = vec![-1.0, 0.0];
        assert_eq!(solve(&a, &b, &c).unwrap_err(), LpError::Unbounded);
    }

    #[test]
    fn handles_negative_rhs() {
        // min x1 s.t. -x1 + x2 = -2  → x1 = 2, x2 = 0
        let a = vec![vec![-1.0, 1.0]];
        let b = vec![-2.0];
        let c = vec![1.0, 0.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn ell1_minimization_vertex_solution() {
        // min |β| decomposition: β = p - q with p,q ≥ 0 and β·2 = 1.
        let a = vec![vec![2.0, -2.0]];
        let b = vec![1.0];
        let c = vec![1.0, 1.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-9);
        // Basis has one column per row.
        assert_eq!(sol.basis.len(), 1);
    }

    #[test]
    fn redundant_constraints_are_tolerated() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let b = vec![1.0, 2.0];
        let c = vec![1.0, 0.0];
        let sol = solve(&a, &b, &c).unwrap();
        assert!(sol.objective.abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
    }
}
