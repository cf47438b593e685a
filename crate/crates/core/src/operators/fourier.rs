use super::{Grid, LinearOp, OperatorKind, OperatorSet, Parts};
use crate::error::{invalid, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Real translation-invariant operator applied as a Fourier multiplier.
///
/// The symbol must be Hermitian (`s(-k) = conj(s(k))`) so the operator maps
/// real vectors to real vectors. Plans are shared; scratch space is per call.
#[derive(Clone)]
pub struct SpectralOp {
    symbol: Arc<Vec<Complex64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SpectralOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOp").field("n", &self.symbol.len()).finish()
    }
}

impl SpectralOp {
    pub fn new(symbol: Vec<Complex64>) -> Self {
        let mut planner = FftPlanner::new();
        let n = symbol.len();
        Self { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), symbol: Arc::new(symbol) }
    }

    pub fn dim(&self) -> usize {
        self.symbol.len()
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    /// Same plans, different multiplier.
    pub fn with_symbol(&self, symbol: Vec<Complex64>) -> Self {
        assert_eq!(symbol.len(), self.dim());
        Self { symbol: Arc::new(symbol), forward: Arc::clone(&self.forward), inverse: Arc::clone(&self.inverse) }
    }

    /// In-place `buf <- ifft(f(k, fft(buf)))`, including the `1/n` normalization.
    pub fn transform_with(&self, buf: &mut [Complex64], f: impl Fn(usize, Complex64) -> Complex64) {
        let n = self.dim();
        let mut scratch =
            vec![Complex64::default(); self.forward.get_inplace_scratch_len().max(self.inverse.get_inplace_scratch_len())];
        self.forward.process_with_scratch(buf, &mut scratch);
        let inv_n = 1.0 / n as f64;
        for (k, z) in buf.iter_mut().enumerate() {
            *z = f(k, *z) * inv_n;
        }
        self.inverse.process_with_scratch(buf, &mut scratch);
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let mut buf: Vec<Complex64> = x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
        self.transform_with(&mut buf, |k, z| z * self.symbol[k]);
        for (yi, z) in y.iter_mut().zip(&buf) {
            *yi = z.re;
        }
    }

    /// Applies the operator to `v` and `w` through a single transform of `v + i w`.
    pub fn apply_pair_into(&self, v: &[f64], w: &[f64], yv: &mut [f64], yw: &mut [f64]) {
        let mut buf: Vec<Complex64> = v.iter().zip(w).map(|(&a, &b)| Complex64::new(a, b)).collect();
        self.transform_with(&mut buf, |k, z| z * self.symbol[k]);
        for ((a, b), z) in yv.iter_mut().zip(yw.iter_mut()).zip(&buf) {
            *a = z.re;
            *b = z.im;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply_into(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

/// Angular wavenumbers in FFT ordering; for even `n` the Nyquist entry is `+pi/dx`.
pub fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * PI * m / length
        })
        .collect()
}

pub fn make_fourier(n: usize, x_left: f64, x_right: f64) -> Result<OperatorSet> {
    if n < 4 {
        return invalid(format!("Fourier collocation needs n >= 4, got {n}"));
    }
    let grid = Grid::periodic(n, x_left, x_right)?;
    let dx = grid.dx;
    let k = wavenumbers(n, grid.length());
    let nyquist = (n % 2 == 0).then_some(n / 2);
    let d1_sym = k
        .iter()
        .enumerate()
        .map(|(j, &kj)| if Some(j) == nyquist { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, kj) })
        .collect();
    let d1 = SpectralOp::new(d1_sym);
    let d2 = d1.with_symbol(k.iter().map(|&kj| Complex64::new(-kj * kj, 0.0)).collect());
    let a2 = d1.with_symbol(k.iter().map(|&kj| Complex64::new(dx * kj * kj, 0.0)).collect());
    let zeros = vec![0.0; n];
    Ok(OperatorSet::assemble(Parts {
        grid,
        mass_diag: vec![dx; n],
        d1: LinearOp::Spectral(d1),
        d2: LinearOp::Spectral(d2),
        a2: LinearOp::Spectral(a2),
        t_left: zeros.clone(),
        t_right: zeros.clone(),
        d_left: zeros.clone(),
        d_right: zeros,
        d_plus: None,
        d_minus: None,
        accuracy_order: 0,
        kind: OperatorKind::Fourier,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_abs(x: &[f64]) -> f64 {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn odd_n_second_derivative_is_square_of_first() {
        let ops = make_fourier(65, -35.0, 35.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let z: Vec<f64> = (0..65).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = ops.d2.apply(&z);
        let b = ops.d1.apply(&ops.d1.apply(&z));
        let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!(max_abs(&diff) <= 1e-10 * max_abs(&z).max(1.0) * max_abs(&a));
    }

    #[test]
    fn even_n_nyquist_mode_separates_d2_from_d1_squared() {
        let n = 64;
        let ops = make_fourier(n, 0.0, 1.0).unwrap();
        let kn = 32.0 * 2.0 * PI;
        let z: Vec<f64> = ops.grid.nodes.iter().map(|x| (kn * x).cos()).collect();
        let d2z = ops.d2.apply(&z);
        let d11z = ops.d1.apply(&ops.d1.apply(&z));
        for i in 0..n {
            assert!((d2z[i] + kn * kn * z[i]).abs() < 1e-9 * kn * kn);
            assert!(d11z[i].abs() < 1e-9);
        }
    }

    #[test]
    fn constants_are_annihilated_and_modes_differentiated() {
        let ops = make_fourier(48, -3.0, 5.0).unwrap();
        assert!(max_abs(&ops.d1.apply(&[1.0; 48])) < 1e-12);
        let k = 2.0 * PI * 3.0 / 8.0;
        let s: Vec<f64> = ops.grid.nodes.iter().map(|x| (k * x).sin()).collect();
        let ds = ops.d1.apply(&s);
        for (x, d) in ops.grid.nodes.iter().zip(&ds) {
            assert!((d - k * (k * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_application_matches_separate_calls() {
        let ops = make_fourier(32, 0.0, 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (mut a, mut b) = (vec![0.0; 32], vec![0.0; 32]);
        ops.d1.apply_pair_into(&v, &w, &mut a, &mut b);
        let a2 = ops.d1.apply(&v);
        let b2 = ops.d1.apply(&w);
        for i in 0..32 {
            assert!((a[i] - a2[i]).abs() < 1e-12 && (b[i] - b2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(make_fourier(3, 0.0, 1.0).is_err());
    }
}
