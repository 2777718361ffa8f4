//! Dense symmetric linear algebra: Jacobi eigendecomposition, Moore-Penrose
//! pseudo-inverse, image-membership tests and PSD comparisons.
//!
//! Everything here targets small matrices (dimension up to a few dozen);
//! the cyclic Jacobi method is dependency-free and numerically robust for
//! symmetric input, which is all the design and estimation code needs.

use thiserror::Error;

/// Relative eigenvalue cutoff for numerical rank decisions.
pub const RANK_REL_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not symmetric within tolerance")]
    NotSymmetric,
    #[error("matrix contains NaN or infinite entries")]
    NotFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            entries.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            entries,
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Matrix::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Sum of outer products `Σ w_i v_i v_iᵀ`.
    pub fn weighted_outer_sum(vectors: &[Vec<f64>], weights: &[f64]) -> Self {
        assert_eq!(vectors.len(), weights.len());
        let n = vectors.first().map_or(0, |v| v.len());
        let mut m = Matrix::zeros(n, n);
        for (v, &w) in vectors.iter().zip(weights) {
            for i in 0..n {
                let wi = w * v[i];
                for j in 0..n {
                    m.entries[i * n + j] += wi * v[j];
                }
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    /// Symmetry check at tolerance `1e-9 * (1 + maxabs)`.
    pub fn is_symmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let tol = 1e-9 * (1.0 + self.max_abs());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self.get(i, j) - self.get(j, i)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.entries[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * v[j])
                    .sum::<f64>()
            })
            .collect()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Inverse by Gauss-Jordan with partial pivoting; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let mut pivot = col;
            for r in (col + 1)..n {
                if a.get(r, col).abs() > a.get(pivot, col).abs() {
                    pivot = r;
                }
            }
            let p = a.get(pivot, col);
            if p.abs() < 1e-300 {
                return None;
            }
            if pivot != col {
                for j in 0..n {
                    let (x, y) = (a.get(col, j), a.get(pivot, j));
                    a.set(col, j, y);
                    a.set(pivot, j, x);
                    let (x, y) = (inv.get(col, j), inv.get(pivot, j));
                    inv.set(col, j, y);
                    inv.set(pivot, j, x);
                }
            }
            let p = a.get(col, col);
            for j in 0..n {
                a.set(col, j, a.get(col, j) / p);
                inv.set(col, j, inv.get(col, j) / p);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.set(r, j, a.get(r, j) - f * a.get(col, j));
                    inv.set(r, j, inv.get(r, j) - f * inv.get(col, j));
                }
            }
        }
        Some(inv)
    }
}

/// Eigendecomposition `M = V diag(λ) Vᵀ` of a symmetric matrix.
pub struct EigenDecomposition {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, same order as `values`.
    pub vectors: Matrix,
}

/// Cyclic Jacobi rotations. Converges when the off-diagonal Frobenius mass
/// drops below `1e-12 * ||M||_F`.
pub fn eigen_symmetric(m: &Matrix) -> Result<EigenDecomposition, LinalgError> {
    if !m.is_finite() {
        return Err(LinalgError::NotFinite);
    }
    if !m.is_symmetric() {
        return Err(LinalgError::NotSymmetric);
    }
    let n = m.rows();
    let mut a = m.clone();
    // Symmetrize exactly so rotations preserve symmetry bit for bit.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }
    let mut v = Matrix::identity(n);
    let norm = a.frobenius_norm().max(1e-300);
    let target = 1e-12 * norm;

    let off = |a: &Matrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j) * a.get(i, j);
                }
            }
        }
        s.sqrt()
    };

    for _sweep in 0..100 {
        if off(&a) <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.get(i, i), i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, new_col, v.get(row, old_col));
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix. Eigenvalues below
/// `RANK_REL_TOL * λ_max` are treated as zero.
pub fn pseudo_inverse(m: &Matrix) -> Result<Matrix, LinalgError> {
    let eig = eigen_symmetric(m)?;
    let n = m.rows();
    let lambda_max = eig.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let cutoff = RANK_REL_TOL * lambda_max;
    let inv_values: Vec<f64> = eig
        .values
        .iter()
        .map(|&l| if l.abs() > cutoff { 1.0 / l } else { 0.0 })
        .collect();
    // V diag(1/λ) Vᵀ
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        let w = inv_values[k];
        if w == 0.0 {
            continue;
        }
        for i in 0..n {
            let vik = eig.vectors.get(i, k) * w;
            for j in 0..n {
                out.entries[i * n + j] += vik * eig.vectors.get(j, k);
            }
        }
    }
    Ok(out)
}

/// Numerical rank: number of eigenvalues above `RANK_REL_TOL * λ_max`.
pub fn symmetric_rank(m: &Matrix) -> Result<usize, LinalgError> {
    let eig = eigen_symmetric(m)?;
    let lambda_max = eig.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if lambda_max == 0.0 {
        return Ok(0);
    }
    let cutoff = RANK_REL_TOL * lambda_max;
    Ok(eig.values.iter().filter(|l| l.abs() > cutoff).count())
}

/// Orthonormal basis of the image of a symmetric PSD matrix, as a
/// `n x rank` matrix of columns.
pub fn image_basis(m: &Matrix) -> Result<Matrix, LinalgError> {
    let eig = eigen_symmetric(m)?;
    let lambda_max = eig.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let cutoff = RANK_REL_TOL * lambda_max;
    let cols: Vec<usize> = (0..m.rows())
        .filter(|&k| eig.values[k].abs() > cutoff)
        .collect();
    let mut q = Matrix::zeros(m.rows(), cols.len());
    for (j, &k) in cols.iter().enumerate() {
        for i in 0..m.rows() {
            q.set(i, j, eig.vectors.get(i, k));
        }
    }
    Ok(q)
}

/// True iff `‖(I − M M⁺) v‖₂ ≤ 1e-8 (1 + ‖v‖₂)`.
pub fn in_image(m: &Matrix, v: &[f64]) -> Result<bool, LinalgError> {
    if m.rows() != v.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "matrix is {}x{}, vector has length {}",
            m.rows(),
            m.cols(),
            v.len()
        )));
    }
    let pinv = pseudo_inverse(m)?;
    let proj = m.matvec(&pinv.matvec(v));
    let residual: f64 = v
        .iter()
        .zip(&proj)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let vnorm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(residual <= 1e-8 * (1.0 + vnorm))
}

/// True iff `A − B ⪰ -slack·I`, i.e. the minimum eigenvalue of the
/// difference is at least `-slack`.
pub fn psd_dominates(a: &Matrix, b: &Matrix, slack: f64) -> Result<bool, LinalgError> {
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Err(LinalgError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let diff = a.sub(b);
    let eig = eigen_symmetric(&diff)?;
    let min = eig.values.last().copied().unwrap_or(0.0);
    Ok(min >= -slack)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quadratic form `vᵀ M v`.
pub fn quad_form(m: &Matrix, v: &[f64]) -> f64 {
    dot(v, &m.matvec(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_psd(rng: &mut SplitMix64, n: usize) -> Matrix {
        // B Bᵀ with random B guarantees PSD; occasionally drop rank.
        let k = 1 + (rng.next_u64() as usize % n);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.standard_normal()).collect())
            .collect();
        let b = Matrix::from_rows(&rows);
        b.matmul(&b.transpose())
    }

    fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
        assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
        let scale = 1.0 + a.max_abs().max(b.max_abs());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                assert!(
                    (a.get(i, j) - b.get(i, j)).abs() <= tol * scale,
                    "entry ({i},{j}): {} vs {}",
                    a.get(i, j),
                    b.get(i, j)
                );
            }
        }
    }

    #[test]
    fn pinv_identity() {
        let m = Matrix::identity(3);
        let p = pseudo_inverse(&m).unwrap();
        assert_close(&p, &Matrix::identity(3), 1e-12);
    }

    #[test]
    fn pinv_diagonal_keeps_zero() {
        let m = Matrix::diag(&[2.0, 0.0, 0.5]);
        let p = pseudo_inverse(&m).unwrap();
        assert_close(&p, &Matrix::diag(&[0.5, 0.0, 2.0]), 1e-12);
    }

    #[test]
    fn pinv_rank_one_satisfies_penrose_identities() {
        // a aᵀ with a = (1,1); expected pinv is (a aᵀ)/4, verified here via
        // the four Penrose identities computed directly.
        let a = vec![1.0, 1.0];
        let m = Matrix::weighted_outer_sum(&[a], &[1.0]);
        let p = pseudo_inverse(&m).unwrap();
        let expected = m.scale(0.25);
        assert_close(&p, &expected, 1e-12);

        let mpm = m.matmul(&p).matmul(&m);
        let pmp = p.matmul(&m).matmul(&p);
        assert_close(&mpm, &m, 1e-12);
        assert_close(&pmp, &p, 1e-12);
        let mp = m.matmul(&p);
        let pm = p.matmul(&m);
        assert_close(&mp, &mp.transpose(), 1e-12);
        assert_close(&pm, &pm.transpose(), 1e-12);
    }

    #[test]
    fn penrose_identities_on_random_psd() {
        let mut rng = SplitMix64::new(2024);
        for _ in 0..100 {
            let n = 2 + (rng.next_u64() as usize % 7); // dimension ≤ 8
            let m = random_psd(&mut rng, n);
            let p = pseudo_inverse(&m).unwrap();
            let tol = 1e-7;
            assert_close(&m.matmul(&p).matmul(&m), &m, tol);
            assert_close(&p.matmul(&m).matmul(&p), &p, tol);
            let mp = m.matmul(&p);
            assert_close(&mp, &mp.transpose(), tol);
            let pm = p.matmul(&m);
            assert_close(&pm, &pm.transpose(), tol);
        }
    }

    #[test]
    fn pinv_is_involution_on_random_psd() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..100 {
            let n = 2 + (rng.next_u64() as usize % 7);
            let m = random_psd(&mut rng, n);
            let pp = pseudo_inverse(&pseudo_inverse(&m).unwrap()).unwrap();
            assert_close(&pp, &m, 1e-6);
        }
    }

    #[test]
    fn pinv_rejects_non_symmetric_and_non_finite() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert_eq!(pseudo_inverse(&m), Err(LinalgError::NotSymmetric));
        let mut m = Matrix::identity(2);
        m.set(0, 1, f64::NAN);
        m.set(1, 0, f64::NAN);
        assert_eq!(pseudo_inverse(&m), Err(LinalgError::NotFinite));
    }

    #[test]
    fn in_image_cases() {
        assert!(in_image(&Matrix::identity(2), &[1.0, 0.0]).unwrap());
        assert!(!in_image(&Matrix::diag(&[1.0, 0.0]), &[0.0, 1.0]).unwrap());
        // v = 2a is in the image of a aᵀ with a = (1,2)
        let a = vec![1.0, 2.0];
        let m = Matrix::weighted_outer_sum(&[a], &[1.0]);
        assert!(in_image(&m, &[2.0, 4.0]).unwrap());
        assert!(in_image(&Matrix::identity(2), &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn psd_dominates_cases() {
        let i = Matrix::identity(3);
        assert!(psd_dominates(&i, &i.scale(0.5), 0.0).unwrap());
        assert!(!psd_dominates(&i.scale(0.5), &i, 0.0).unwrap());
        assert!(psd_dominates(&i, &Matrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn eigen_recovers_known_spectrum() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let e = eigen_symmetric(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-10);
        assert!((e.values[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_matches_identity() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let n = 2 + (rng.next_u64() as usize % 5);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.standard_normal()).collect())
                .collect();
            let mut m = Matrix::from_rows(&rows);
            for i in 0..n {
                m.set(i, i, m.get(i, i) + 3.0); // keep well conditioned
            }
            let inv = m.inverse().expect("invertible");
            assert_close(&m.matmul(&inv), &Matrix::identity(n), 1e-9);
        }
    }
}
