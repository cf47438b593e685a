//! Envelope (variable-band, "skyline") LU factorization without pivoting.
//!
//! Fill-in is confined to the structurally symmetric envelope of the input,
//! which for the banded and periodic-banded stage matrices of the time
//! integrators is `O(n * bandwidth)`. The factorization is only safe for
//! matrices whose symmetric part is positive definite (every leading
//! principal submatrix is then nonsingular); callers arrange their systems
//! accordingly by scaling rows with the mass matrix.

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EnvelopeLu {
    n: usize,
    /// First index of the envelope of row/column `k`.
    first: Vec<usize>,
    /// `lower[lo_off[k]..lo_off[k+1]]` holds L[k, first[k]..k] (unit diagonal implied).
    lo_off: Vec<usize>,
    lower: Vec<f64>,
    /// `upper[up_off[k]..up_off[k+1]]` holds U[first[k]..=k, k].
    up_off: Vec<usize>,
    upper: Vec<f64>,
}

impl EnvelopeLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument("envelope LU needs a square matrix".into()));
        }
        let mut first: Vec<usize> = (0..n).collect();
        for (i, j, _) in a.triplets() {
            if j < i {
                first[i] = first[i].min(j);
            } else {
                first[j] = first[j].min(i);
            }
        }
        let mut lo_off = Vec::with_capacity(n + 1);
        let mut up_off = Vec::with_capacity(n + 1);
        lo_off.push(0);
        up_off.push(0);
        for k in 0..n {
            lo_off.push(lo_off[k] + (k - first[k]));
            up_off.push(up_off[k] + (k - first[k] + 1));
        }
        let mut lower = vec![0.0; lo_off[n]];
        let mut upper = vec![0.0; up_off[n]];
        for (i, j, v) in a.triplets() {
            if j < i {
                lower[lo_off[i] + (j - first[i])] = v;
            } else {
                upper[up_off[j] + (i - first[j])] = v;
            }
        }

        let mut lu = Self { n, first, lo_off, lower, up_off, upper };
        let scale = lu.upper.iter().chain(&lu.lower).fold(0.0_f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let fk = lu.first[k];
            // Row k of L: L[k, j] = (A[k, j] - sum_{m<j} L[k, m] U[m, j]) / U[j, j]
            for j in fk..k {
                let s = lu.dot_lu(k, j, fk.max(lu.first[j]), j);
                let ujj = lu.upper[lu.up_off[j + 1] - 1];
                let idx = lu.lo_off[k] + (j - fk);
                lu.lower[idx] = (lu.lower[idx] - s) / ujj;
            }
            // Column k of U: U[i, k] = A[i, k] - sum_{m<i} L[i, m] U[m, k]
            for i in fk..=k {
                let s = lu.dot_lu(i, k, fk.max(lu.first[i]), i);
                let idx = lu.up_off[k] + (i - fk);
                lu.upper[idx] -= s;
            }
            let ukk = lu.upper[lu.up_off[k + 1] - 1];
            if !ukk.is_finite() || ukk.abs() <= 1e-300 || ukk.abs() < f64::EPSILON * 1e-4 * scale {
                return Err(Error::NumericFailure(format!(
                    "zero pivot {ukk:e} at row {k} in envelope LU"
                )));
            }
        }
        Ok(lu)
    }

    /// `sum_{m=lo}^{hi-1} L[row, m] * U[m, col]`
    #[inline]
    fn dot_lu(&self, row: usize, col: usize, lo: usize, hi: usize) -> f64 {
        if lo >= hi {
            return 0.0;
        }
        let lrow = &self.lower[self.lo_off[row] + (lo - self.first[row])..self.lo_off[row] + (hi - self.first[row])];
        let ucol = &self.upper[self.up_off[col] + (lo - self.first[col])..self.up_off[col] + (hi - self.first[col])];
        lrow.iter().zip(ucol).map(|(a, b)| a * b).sum()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored factor entries.
    pub fn stored(&self) -> usize {
        self.lower.len() + self.upper.len()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.lower[self.lo_off[i]..self.lo_off[i + 1]];
            let s: f64 = row.iter().zip(&x[fi..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for j in (0..self.n).rev() {
            let fj = self.first[j];
            let col = &self.upper[self.up_off[j]..self.up_off[j + 1]];
            let xj = x[j] / col[col.len() - 1];
            x[j] = xj;
            for (xi, u) in x[fj..j].iter_mut().zip(col) {
                *xi -= u * xj;
            }
        }
    }
}

/// Envelope LU plus the original matrix, so solves can apply one step of
/// iterative refinement.
#[derive(Debug, Clone)]
pub struct RefinedSolver {
    matrix: CsrMatrix,
    lu: EnvelopeLu,
}

impl RefinedSolver {
    pub fn new(matrix: CsrMatrix) -> Result<Self> {
        let lu = EnvelopeLu::factor(&matrix)?;
        Ok(Self { matrix, lu })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.lu.solve_in_place(&mut x);
        let mut r = self.matrix.mul_vec(&x);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        self.lu.solve_in_place(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure("non-finite solution in sparse solve".into()));
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Periodic banded matrix with symmetric part `diag(d)` and random skew part.
    fn periodic_test_matrix(n: usize, band: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = rng.gen_range(0.5..2.0);
            for o in 1..=band {
                let j = (i + o) % n;
                let s: f64 = rng.gen_range(-3.0..3.0);
                m[(i, j)] += s;
                m[(j, i)] -= s;
            }
        }
        m
    }

    #[test]
    fn matches_dense_solve_on_periodic_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, band) in &[(12, 1), (30, 3), (64, 5)] {
            let dense = periodic_test_matrix(n, band, &mut rng);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let solver = RefinedSolver::new(CsrMatrix::from_dense(&dense)).unwrap();
            let x = solver.solve(&b).unwrap();
            let expected = dense.clone().lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let err = (DVector::from_vec(x) - expected).amax();
            assert!(err < 1e-12, "n={n}: {err:e}");
        }
    }

    #[test]
    fn envelope_stays_linear_in_n_for_periodic_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 400;
        let dense = periodic_test_matrix(n, 2, &mut rng);
        let lu = EnvelopeLu::factor(&CsrMatrix::from_dense(&dense)).unwrap();
        // band part plus two full "arrow" strips of width ~2
        assert!(lu.stored() < 20 * n, "{}", lu.stored());
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(EnvelopeLu::factor(&a), Err(Error::NumericFailure(_))));
    }
}
