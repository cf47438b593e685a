//! SBP semidiscretization of `i u_t + u_xx + beta |u|^2 u = 0` in real
//! variables `u = v + i w`:
//!
//! ```text
//! v' = -D~ w - beta (v^2 + w^2) w
//! w' =  D~ v + beta (v^2 + w^2) v
//! ```
//!
//! with `D~ = -M^{-1} A2` (the second derivative with the Neumann corrections).
//! States are flat vectors `[v | w]`.

use crate::error::{check_len, Error, Result};
use crate::integrators::SplitOde;
use crate::linalg::{compensated_sum, CsrMatrix, FactorCache};
use crate::operators::{LinearOp, OperatorSet};
use crate::relaxation::Invariants;
use num_complex::Complex64;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct NlsState {
    data: Vec<f64>,
}

impl NlsState {
    pub fn new(v: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        check_len("NlsState w", w.len(), v.len())?;
        let mut data = v;
        data.extend_from_slice(&w);
        Self::from_flat(data)
    }

    pub fn zeros(n: usize) -> Self {
        Self { data: vec![0.0; 2 * n] }
    }

    pub fn from_flat(data: Vec<f64>) -> Result<Self> {
        if data.len() % 2 != 0 {
            return Err(Error::InvalidArgument(format!("flat NLS state has odd length {}", data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("NLS state has non-finite entries".into()));
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.len() / 2
    }

    pub fn v(&self) -> &[f64] {
        &self.data[..self.n()]
    }

    pub fn w(&self) -> &[f64] {
        &self.data[self.n()..]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.v().iter().zip(self.w()).map(|(&a, &b)| Complex64::new(a, b)).collect()
    }

    pub fn from_complex(u: &[Complex64]) -> Result<Self> {
        Self::new(u.iter().map(|z| z.re).collect(), u.iter().map(|z| z.im).collect())
    }

    /// Multiplies by `exp(i phi)`.
    pub fn rotate(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        let v = self.v().iter().zip(self.w()).map(|(a, b)| a * c - b * s).collect();
        let w = self.v().iter().zip(self.w()).map(|(a, b)| a * s + b * c).collect();
        Self::new(v, w).expect("rotation preserves shape")
    }
}

#[derive(Debug, Clone)]
pub struct NlsParams {
    pub beta: f64,
    pub ops: Arc<OperatorSet>,
}

impl NlsParams {
    pub fn new(beta: f64, ops: OperatorSet) -> Self {
        Self { beta, ops: Arc::new(ops) }
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    fn check(&self, s: &[f64]) -> Result<()> {
        check_len("NLS state", s.len(), 2 * self.n())
    }
}

pub fn dtilde_apply(params: &NlsParams, z: &[f64]) -> Result<Vec<f64>> {
    params.ops.dtilde_apply(z)
}

/// `(D~ v, D~ w)` for a flat state.
fn dtilde_pair(ops: &OperatorSet, s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = ops.n();
    let (mut dv, mut dw) = (vec![0.0; n], vec![0.0; n]);
    ops.dtilde().apply_pair_into(&s[..n], &s[n..], &mut dv, &mut dw);
    (dv, dw)
}

fn split_into(params: &NlsParams, s: &[f64], lin: &mut [f64], nonlin: &mut [f64]) {
    let n = params.n();
    let (v, w) = s.split_at(n);
    let (lv, lw) = lin.split_at_mut(n);
    params.ops.dtilde().apply_pair_into(w, v, lv, lw);
    lv.iter_mut().for_each(|x| *x = -*x);
    let (nv, nw) = nonlin.split_at_mut(n);
    for i in 0..n {
        let b = params.beta * (v[i] * v[i] + w[i] * w[i]);
        nv[i] = -b * w[i];
        nw[i] = b * v[i];
    }
}

/// Linear (`(-D~ w, D~ v)`) and cubic parts of the right-hand side.
pub fn nls_rhs_split(params: &NlsParams, s: &NlsState) -> Result<(NlsState, NlsState)> {
    params.check(s.as_flat())?;
    let mut lin = vec![0.0; 2 * params.n()];
    let mut nonlin = vec![0.0; 2 * params.n()];
    split_into(params, s.as_flat(), &mut lin, &mut nonlin);
    Ok((NlsState { data: lin }, NlsState { data: nonlin }))
}

pub fn nls_rhs(params: &NlsParams, s: &NlsState) -> Result<NlsState> {
    let (mut lin, nonlin) = nls_rhs_split(params, s)?;
    lin.data.iter_mut().zip(&nonlin.data).for_each(|(a, b)| *a += b);
    Ok(lin)
}

pub fn mass(params: &NlsParams, s: &NlsState) -> f64 {
    mass_flat(&params.ops, s.as_flat())
}

fn mass_flat(ops: &OperatorSet, s: &[f64]) -> f64 {
    let n = ops.n();
    ops.norm_sq(&s[..n]) + ops.norm_sq(&s[n..])
}

/// `(beta/2) 1^T M (v^2 + w^2)^2`
fn quartic(ops: &OperatorSet, beta: f64, s: &[f64]) -> f64 {
    let n = ops.n();
    let sum = compensated_sum((0..n).map(|i| {
        let r = s[i] * s[i] + s[n + i] * s[n + i];
        ops.mass_diag[i] * r * r
    }));
    0.5 * beta * sum
}

/// `v^T A2 v + w^T A2 w`, evaluated as `-v^T M D~ v - w^T M D~ w`.
fn kinetic(ops: &OperatorSet, s: &[f64]) -> f64 {
    let n = ops.n();
    let (dv, dw) = dtilde_pair(ops, s);
    -(ops.inner(&s[..n], &dv) + ops.inner(&s[n..], &dw))
}

pub fn energy(params: &NlsParams, s: &NlsState) -> f64 {
    energy_flat(params, s.as_flat())
}

fn energy_flat(params: &NlsParams, s: &[f64]) -> f64 {
    kinetic(&params.ops, s) - quartic(&params.ops, params.beta, s)
}

/// Energy with the kinetic part `(D1 v)^T M (D1 v) + (D1 w)^T M (D1 w)`.
pub fn naive_energy(params: &NlsParams, s: &NlsState) -> f64 {
    let ops = &params.ops;
    let n = ops.n();
    let (mut dv, mut dw) = (vec![0.0; n], vec![0.0; n]);
    ops.d1.apply_pair_into(s.v(), s.w(), &mut dv, &mut dw);
    ops.norm_sq(&dv) + ops.norm_sq(&dw) - quartic(ops, params.beta, s.as_flat())
}

/// The NLS semidiscretization as a [`SplitOde`] with cached stage factorizations.
#[derive(Debug)]
pub struct NlsSystem {
    pub params: NlsParams,
    cache: FactorCache,
}

impl NlsSystem {
    pub fn new(params: NlsParams) -> Self {
        Self { params, cache: FactorCache::new() }
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.params.ops
    }

    /// Row-scaled stage matrix `W (I - coeff L)` in node-interleaved ordering
    /// `(v_0, w_0, v_1, w_1, ...)`; `W = diag(m, m)` makes its symmetric part positive definite.
    fn stage_matrix(&self, coeff: f64, dt: &CsrMatrix) -> CsrMatrix {
        let n = self.params.n();
        let m = &self.params.ops.mass_diag;
        let mut t = Vec::with_capacity(2 * (n + dt.nnz()));
        for i in 0..n {
            t.push((2 * i, 2 * i, m[i]));
            t.push((2 * i + 1, 2 * i + 1, m[i]));
        }
        for (i, j, d) in dt.triplets() {
            // v_i + coeff (D~ w)_i  and  w_i - coeff (D~ v)_i
            t.push((2 * i, 2 * j + 1, m[i] * coeff * d));
            t.push((2 * i + 1, 2 * j, -m[i] * coeff * d));
        }
        CsrMatrix::from_triplets(2 * n, 2 * n, &t)
    }

    pub fn implicit_stage_solve(&self, coeff: f64, rhs: &NlsState) -> Result<NlsState> {
        self.params.check(rhs.as_flat())?;
        let mut out = vec![0.0; rhs.as_flat().len()];
        self.implicit_solve(coeff, rhs.as_flat(), &mut out)?;
        Ok(NlsState { data: out })
    }
}

impl SplitOde for NlsSystem {
    fn dim(&self) -> usize {
        2 * self.params.n()
    }

    fn rhs_split(&self, u: &[f64], linear: &mut [f64], nonlinear: &mut [f64]) -> Result<()> {
        self.params.check(u)?;
        split_into(&self.params, u, linear, nonlinear);
        Ok(())
    }

    fn implicit_solve(&self, coeff: f64, rhs: &[f64], out: &mut [f64]) -> Result<()> {
        self.params.check(rhs)?;
        if !(coeff >= 0.0 && coeff.is_finite()) {
            return Err(Error::InvalidArgument(format!("implicit coefficient must be >= 0, got {coeff}")));
        }
        if coeff == 0.0 {
            out.copy_from_slice(rhs);
            return Ok(());
        }
        let n = self.params.n();
        match self.params.ops.dtilde() {
            LinearOp::Spectral(op) => {
                // (1 - i coeff lambda_k) z_k = r_k with z = v + i w
                let mut buf: Vec<Complex64> = (0..n).map(|i| Complex64::new(rhs[i], rhs[n + i])).collect();
                let sym = op.symbol();
                op.transform_with(&mut buf, |k, z| z / Complex64::new(1.0, -coeff * sym[k].re));
                for i in 0..n {
                    out[i] = buf[i].re;
                    out[n + i] = buf[i].im;
                }
            }
            LinearOp::Sparse(dt) => {
                let solver = self.cache.get_or_factor(coeff, |c| self.stage_matrix(c, dt))?;
                let m = &self.params.ops.mass_diag;
                let mut b = vec![0.0; 2 * n];
                for i in 0..n {
                    b[2 * i] = m[i] * rhs[i];
                    b[2 * i + 1] = m[i] * rhs[n + i];
                }
                let x = solver.solve(&b)?;
                for i in 0..n {
                    out[i] = x[2 * i];
                    out[n + i] = x[2 * i + 1];
                }
            }
        }
        Ok(())
    }

    fn cached_factorizations(&self) -> usize {
        self.cache.len()
    }
}

impl Invariants for NlsSystem {
    fn mu(&self, u: &[f64]) -> f64 {
        mass_flat(&self.params.ops, u)
    }

    fn eta(&self, u: &[f64]) -> f64 {
        energy_flat(&self.params, u)
    }

    fn project(&self, u: &[f64], target: f64) -> Result<Vec<f64>> {
        project_sphere_flat(&self.params.ops, u, target)
    }

    fn projected_line<'a>(
        &'a self,
        base: &'a [f64],
        dir: &'a [f64],
        target: f64,
    ) -> Result<Box<dyn Fn(f64) -> f64 + 'a>> {
        // Quadratic forms along base + g dir are precomputed, so each
        // evaluation costs one pass over the grid.
        let ops = &*self.params.ops;
        let n = ops.n();
        let beta = self.params.beta;
        let (bv, bw) = dtilde_pair(ops, base);
        let (dv, dw) = dtilde_pair(ops, dir);
        let a2 = |x: &[f64], dx: &[f64], dy: &[f64]| -(ops.inner(&x[..n], dx) + ops.inner(&x[n..], dy));
        let k_bb = a2(base, &bv, &bw);
        let k_dd = a2(dir, &dv, &dw);
        let k_bd = 0.5 * (a2(base, &dv, &dw) + a2(dir, &bv, &bw));
        let m_bb = mass_flat(ops, base);
        let m_dd = mass_flat(ops, dir);
        let m_bd = ops.inner(&base[..n], &dir[..n]) + ops.inner(&base[n..], &dir[n..]);
        Ok(Box::new(move |g: f64| {
            let mu = m_bb + 2.0 * g * m_bd + g * g * m_dd;
            if !(mu > 0.0) {
                return f64::NAN;
            }
            let s2 = target / mu;
            let kin = k_bb + 2.0 * g * k_bd + g * g * k_dd;
            let mut q = 0.0;
            for i in 0..n {
                let v = base[i] + g * dir[i];
                let w = base[n + i] + g * dir[n + i];
                let r = v * v + w * w;
                q += ops.mass_diag[i] * r * r;
            }
            s2 * kin - 0.5 * beta * s2 * s2 * q
        }))
    }
}

/// Scales `u` onto the sphere `mass = target`.
pub(crate) fn project_sphere_flat(ops: &OperatorSet, u: &[f64], target: f64) -> Result<Vec<f64>> {
    let m = mass_flat(ops, u);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::ProjectionFailure(format!("cannot project a state with mass {m}")));
    }
    if !(target >= 0.0) {
        return Err(Error::ProjectionFailure(format!("invalid target mass {target}")));
    }
    let s = (target / m).sqrt();
    Ok(u.iter().map(|x| s * x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{make_bounded_fd_sbp, make_central_fd, make_fourier};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> NlsState {
        NlsState::new((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    fn one_soliton(x: &[f64], t: f64) -> (NlsState, NlsState) {
        // u = sech(x + 4t) exp(-i(2x + 3t)) and its time derivative
        let mut v = vec![];
        let mut w = vec![];
        let mut vt = vec![];
        let mut wt = vec![];
        for &xi in x {
            let s = 1.0 / (xi + 4.0 * t).cosh();
            let th = (xi + 4.0 * t).tanh();
            let ph = 2.0 * xi + 3.0 * t;
            let (sp, cp) = ph.sin_cos();
            v.push(s * cp);
            w.push(-s * sp);
            // d/dt [s cos ph] = -4 s th cos ph - 3 s sin ph
            vt.push(-4.0 * s * th * cp - 3.0 * s * sp);
            // d/dt [-s sin ph] = 4 s th sin ph - 3 s cos ph
            wt.push(4.0 * s * th * sp - 3.0 * s * cp);
        }
        (NlsState::new(v, w).unwrap(), NlsState::new(vt, wt).unwrap())
    }

    #[test]
    fn dtilde_annihilates_constants_and_matches_a2() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for ops in [make_bounded_fd_sbp(2, 40, 0.0, 2.0).unwrap(), make_bounded_fd_sbp(6, 40, 0.0, 2.0).unwrap()] {
            let p = NlsParams::new(1.0, ops);
            let ones = vec![1.0; 40];
            let d1 = dtilde_apply(&p, &ones).unwrap();
            assert!(d1.iter().all(|x| x.abs() < 1e-10));
            let z: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lhs = dtilde_apply(&p, &z).unwrap();
            let a2z = p.ops.a2.apply(&z);
            for i in 0..40 {
                let rhs = -a2z[i] / p.ops.mass_diag[i];
                assert!((lhs[i] - rhs).abs() <= 1e-12 * rhs.abs().max(1.0) / p.ops.grid.dx);
            }
        }
        assert!(dtilde_apply(&NlsParams::new(1.0, make_fourier(8, 0.0, 1.0).unwrap()), &[0.0; 7]).is_err());
    }

    #[test]
    fn fourier_dtilde_on_resolved_mode() {
        let p = NlsParams::new(1.0, make_fourier(64, 0.0, 2.0).unwrap());
        let k = 2.0 * std::f64::consts::PI * 5.0 / 2.0;
        let z: Vec<f64> = p.ops.grid.nodes.iter().map(|x| (k * x).cos()).collect();
        let d = dtilde_apply(&p, &z).unwrap();
        for (a, b) in d.iter().zip(&z) {
            assert!((a + k * k * b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_and_linear_states() {
        let p = NlsParams::new(0.0, make_central_fd(4, 32, 0.0, 1.0).unwrap());
        let r = nls_rhs(&p, &NlsState::zeros(32)).unwrap();
        assert!(r.as_flat().iter().all(|x| *x == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let s = NlsState::new(v.clone(), vec![1.0; 32]).unwrap();
        let r = nls_rhs(&p, &s).unwrap();
        assert!(r.v().iter().all(|x| x.abs() < 1e-12));
        let dv = dtilde_apply(&p, &v).unwrap();
        assert_eq!(r.w(), &dv[..]);
        let (_, nl) = nls_rhs_split(&p, &s).unwrap();
        assert!(nl.as_flat().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn one_soliton_rhs_matches_time_derivative() {
        let p = NlsParams::new(2.0, make_fourier(1024, -40.0, 40.0).unwrap());
        let (u, ut) = one_soliton(&p.ops.grid.nodes, 0.0);
        let r = nls_rhs(&p, &u).unwrap();
        let err = r.as_flat().iter().zip(ut.as_flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-8, "{err:e}");
    }

    #[test]
    fn linear_part_squared_matches_dense_power() {
        let p = NlsParams::new(1.0, make_bounded_fd_sbp(2, 16, 0.0, 1.0).unwrap());
        let dt = p.ops.dtilde().to_dense();
        let mut l = DMatrix::zeros(32, 32);
        l.view_mut((0, 16), (16, 16)).copy_from(&(-&dt));
        l.view_mut((16, 0), (16, 16)).copy_from(&dt);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_state(16, &mut rng);
        let (l1, _) = nls_rhs_split(&p, &s).unwrap();
        let (l2, _) = nls_rhs_split(&p, &l1).unwrap();
        let dense = &l * &l * DVector::from_column_slice(s.as_flat());
        let err = (DVector::from_column_slice(l2.as_flat()) - &dense).amax();
        assert!(err <= 1e-12 * dense.amax(), "{err:e}");
    }

    #[test]
    fn mass_and_energy_of_simple_states() {
        let p = NlsParams::new(3.0, make_fourier(16, 0.0, 1.0).unwrap());
        let s = NlsState::new(vec![1.0; 16], vec![0.0; 16]).unwrap();
        assert!((mass(&p, &s) - 1.0).abs() < 1e-15);
        assert!((energy(&p, &s) + 1.5).abs() < 1e-13);
        let p0 = NlsParams::new(0.0, make_fourier(16, 0.0, 1.0).unwrap());
        assert!(naive_energy(&p0, &s).abs() < 1e-13);
    }

    #[test]
    fn one_soliton_invariants() {
        let p = NlsParams::new(2.0, make_fourier(1024, -40.0, 40.0).unwrap());
        let (u, _) = one_soliton(&p.ops.grid.nodes, 0.0);
        // |u|^2 = sech^2 integrates to 2; |u_x|^2 = sech^2 tanh^2 + 4 sech^2 and sech^4 give 2/3 + 8 - 4/3
        assert!((mass(&p, &u) - 2.0).abs() < 1e-8);
        assert!((energy(&p, &u) - 22.0 / 3.0).abs() < 1e-6, "{}", energy(&p, &u));
    }

    #[test]
    fn naive_energy_and_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let odd = NlsParams::new(2.0, make_fourier(65, -5.0, 5.0).unwrap());
        let s = random_state(65, &mut rng);
        let (e, ne) = (energy(&odd, &s), naive_energy(&odd, &s));
        assert!(((e - ne) / e).abs() < 1e-10);
        let even = NlsParams::new(0.0, make_fourier(64, 0.0, 1.0).unwrap());
        let nyq: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = NlsState::new(nyq, vec![0.0; 64]).unwrap();
        let kn = 32.0 * 2.0 * std::f64::consts::PI;
        assert!((energy(&even, &s) - kn * kn).abs() < 1e-8 * kn * kn);
        assert!(naive_energy(&even, &s).abs() < 1e-8);
    }

    #[test]
    fn implicit_solve_identity_and_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sets = [
            make_fourier(64, -3.0, 3.0).unwrap(),
            make_central_fd(6, 64, -3.0, 3.0).unwrap(),
            make_bounded_fd_sbp(4, 64, -3.0, 3.0).unwrap(),
        ];
        for ops in sets {
            let sys = NlsSystem::new(NlsParams::new(1.0, ops));
            let r = random_state(64, &mut rng);
            assert_eq!(sys.implicit_stage_solve(0.0, &r).unwrap(), r);
            for coeff in [1e-3, 0.05, 1.0] {
                let x = sys.implicit_stage_solve(coeff, &r).unwrap();
                let (l, _) = nls_rhs_split(&sys.params, &x).unwrap();
                let res = x
                    .as_flat()
                    .iter()
                    .zip(l.as_flat())
                    .zip(r.as_flat())
                    .map(|((x, l), r)| (x - coeff * l - r).abs())
                    .fold(0.0, f64::max);
                let scale = r.as_flat().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                assert!(res <= 1e-12 * scale, "{:?} coeff {coeff}: {res:e}", sys.ops().kind);
            }
        }
    }

    #[test]
    fn implicit_solve_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for ops in [make_bounded_fd_sbp(2, 16, 0.0, 1.0).unwrap(), make_fourier(16, 0.0, 1.0).unwrap()] {
            let dt = ops.dtilde().to_dense();
            let sys = NlsSystem::new(NlsParams::new(1.0, ops));
            let coeff = 0.01;
            let mut a = DMatrix::identity(32, 32);
            a.view_mut((0, 16), (16, 16)).copy_from(&(&dt * coeff));
            a.view_mut((16, 0), (16, 16)).copy_from(&(&dt * -coeff));
            let r = random_state(16, &mut rng);
            let expect = a.lu().solve(&DVector::from_column_slice(r.as_flat())).unwrap();
            let x = sys.implicit_stage_solve(coeff, &r).unwrap();
            let err = (DVector::from_column_slice(x.as_flat()) - &expect).amax();
            assert!(err <= 1e-12 * expect.amax(), "{err:e}");
        }
    }

    #[test]
    fn factorizations_are_cached_per_coefficient() {
        let sys = NlsSystem::new(NlsParams::new(1.0, make_central_fd(2, 32, 0.0, 1.0).unwrap()));
        let r = NlsState::new(vec![1.0; 32], vec![0.5; 32]).unwrap();
        for _ in 0..3 {
            sys.implicit_stage_solve(0.1, &r).unwrap();
            sys.implicit_stage_solve(0.2, &r).unwrap();
        }
        assert_eq!(sys.cached_factorizations(), 2);
    }

    #[test]
    fn projected_line_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for ops in [make_fourier(32, -4.0, 4.0).unwrap(), make_bounded_fd_sbp(4, 32, -4.0, 4.0).unwrap()] {
            let sys = NlsSystem::new(NlsParams::new(2.0, ops));
            let base = random_state(32, &mut rng);
            let dir = random_state(32, &mut rng);
            let target = sys.mu(base.as_flat());
            let line = sys.projected_line(base.as_flat(), dir.as_flat(), target).unwrap();
            for g in [0.0, 0.3, 1.0, 1.7] {
                let x: Vec<f64> = base.as_flat().iter().zip(dir.as_flat()).map(|(b, d)| b + g * d).collect();
                let direct = sys.eta(&sys.project(&x, target).unwrap());
                assert!((line(g) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
            }
        }
    }
}
