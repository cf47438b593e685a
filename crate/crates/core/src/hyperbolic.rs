//! Hyperbolic approximation of the NLS with relaxation time `tau`,
//! discretized with a periodic upwind SBP pair `(D+, D-)`:
//!
//! ```text
//! v'     = -D- omega - beta (v^2 + w^2) w
//! w'     =  D- nu    + beta (v^2 + w^2) v
//! nu'    = ( D+ w - omega) / tau
//! omega' = (-D+ v + nu)    / tau
//! ```
//!
//! States are flat vectors `[v | w | nu | omega]`.

use crate::error::{check_len, Error, Result};
use crate::integrators::SplitOde;
use crate::linalg::{compensated_sum, CsrMatrix, FactorCache};
use crate::operators::{LinearOp, OperatorSet};
use crate::relaxation::Invariants;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct HypState {
    data: Vec<f64>,
}

impl HypState {
    pub fn new(v: Vec<f64>, w: Vec<f64>, nu: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        let n = v.len();
        check_len("HypState w", w.len(), n)?;
        check_len("HypState nu", nu.len(), n)?;
        check_len("HypState omega", omega.len(), n)?;
        let mut data = v;
        data.extend(w);
        data.extend(nu);
        data.extend(omega);
        Self::from_flat(data)
    }

    pub fn from_flat(data: Vec<f64>) -> Result<Self> {
        if data.len() % 4 != 0 {
            return Err(Error::InvalidArgument(format!("flat hyperbolic state length {} is not a multiple of 4", data.len())));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("hyperbolic state has non-finite entries".into()));
        }
        Ok(Self { data })
    }

    pub fn zeros(n: usize) -> Self {
        Self { data: vec![0.0; 4 * n] }
    }

    pub fn n(&self) -> usize {
        self.data.len() / 4
    }

    fn part(&self, k: usize) -> &[f64] {
        let n = self.n();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn v(&self) -> &[f64] {
        self.part(0)
    }

    pub fn w(&self) -> &[f64] {
        self.part(1)
    }

    pub fn nu(&self) -> &[f64] {
        self.part(2)
    }

    pub fn omega(&self) -> &[f64] {
        self.part(3)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }
}

#[derive(Debug, Clone)]
pub struct HypParams {
    pub beta: f64,
    pub tau: f64,
    pub ops: Arc<OperatorSet>,
}

impl HypParams {
    pub fn new(beta: f64, tau: f64, ops: OperatorSet) -> Result<Self> {
        Self::from_shared(beta, tau, Arc::new(ops))
    }

    pub fn from_shared(beta: f64, tau: f64, ops: Arc<OperatorSet>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("tau must be positive, got {tau}")));
        }
        if ops.upwind().is_none() {
            return Err(Error::InvalidArgument(format!("{} operators have no upwind pair", ops.kind)));
        }
        if !ops.is_periodic() {
            return Err(Error::InvalidArgument("the hyperbolic system needs periodic operators".into()));
        }
        Ok(Self { beta, tau, ops })
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    fn plus(&self) -> &LinearOp {
        self.ops.d_plus.as_ref().expect("checked in constructor")
    }

    fn minus(&self) -> &LinearOp {
        self.ops.d_minus.as_ref().expect("checked in constructor")
    }

    fn check(&self, s: &[f64]) -> Result<()> {
        check_len("hyperbolic state", s.len(), 4 * self.n())
    }
}

fn split_into(p: &HypParams, s: &[f64], lin: &mut [f64], nonlin: &mut [f64]) {
    let n = p.n();
    let (v, rest) = s.split_at(n);
    let (w, rest) = rest.split_at(n);
    let (nu, om) = rest.split_at(n);
    let (lv, rest) = lin.split_at_mut(n);
    let (lw, rest) = rest.split_at_mut(n);
    let (lnu, lom) = rest.split_at_mut(n);
    p.minus().apply_pair_into(om, nu, lv, lw);
    lv.iter_mut().for_each(|x| *x = -*x);
    p.plus().apply_pair_into(w, v, lnu, lom);
    let inv_tau = 1.0 / p.tau;
    for i in 0..n {
        lnu[i] = (lnu[i] - om[i]) * inv_tau;
        lom[i] = (nu[i] - lom[i]) * inv_tau;
    }
    let (nv, rest) = nonlin.split_at_mut(n);
    let (nw, rest) = rest.split_at_mut(n);
    rest.fill(0.0);
    for i in 0..n {
        let b = p.beta * (v[i] * v[i] + w[i] * w[i]);
        nv[i] = -b * w[i];
        nw[i] = b * v[i];
    }
}

/// Linear part (all `D+-` couplings and relaxation terms) and cubic part.
pub fn hyp_rhs_split(params: &HypParams, s: &HypState) -> Result<(HypState, HypState)> {
    params.check(s.as_flat())?;
    let mut lin = vec![0.0; 4 * params.n()];
    let mut nonlin = vec![0.0; 4 * params.n()];
    split_into(params, s.as_flat(), &mut lin, &mut nonlin);
    Ok((HypState { data: lin }, HypState { data: nonlin }))
}

pub fn hyp_rhs(params: &HypParams, s: &HypState) -> Result<HypState> {
    let (mut lin, nonlin) = hyp_rhs_split(params, s)?;
    lin.data.iter_mut().zip(&nonlin.data).for_each(|(a, b)| *a += b);
    Ok(lin)
}

/// `(q, p)`: mass of `(v, w)` and of `(nu, omega)`, without the factor `tau`.
fn mass_parts(ops: &OperatorSet, s: &[f64]) -> (f64, f64) {
    let n = ops.n();
    let q = ops.norm_sq(&s[..n]) + ops.norm_sq(&s[n..2 * n]);
    let p = ops.norm_sq(&s[2 * n..3 * n]) + ops.norm_sq(&s[3 * n..]);
    (q, p)
}

pub fn hyp_mass(params: &HypParams, s: &HypState) -> f64 {
    let (q, p) = mass_parts(&params.ops, s.as_flat());
    q + params.tau * p
}

fn quartic(ops: &OperatorSet, s: &[f64]) -> f64 {
    let n = ops.n();
    compensated_sum((0..n).map(|i| {
        let r = s[i] * s[i] + s[n + i] * s[n + i];
        ops.mass_diag[i] * r * r
    }))
}

/// `nu^T M D+ v + omega^T M D+ w` between two (possibly different) states.
fn coupling(p: &HypParams, aux: &[f64], prim: &[f64]) -> f64 {
    let n = p.n();
    let ops = &p.ops;
    let (mut dv, mut dw) = (vec![0.0; n], vec![0.0; n]);
    p.plus().apply_pair_into(&prim[..n], &prim[n..2 * n], &mut dv, &mut dw);
    ops.inner(&aux[2 * n..3 * n], &dv) + ops.inner(&aux[3 * n..], &dw)
}

fn energy_flat(p: &HypParams, s: &[f64]) -> f64 {
    let (_, aux) = mass_parts(&p.ops, s);
    2.0 * coupling(p, s, s) - aux - 0.5 * p.beta * quartic(&p.ops, s)
}

pub fn hyp_energy(params: &HypParams, s: &HypState) -> f64 {
    energy_flat(params, s.as_flat())
}

/// `(v0, w0, D+ v0, D+ w0)`
pub fn well_prepared_init(params: &HypParams, v0: &[f64], w0: &[f64]) -> Result<HypState> {
    let n = params.n();
    check_len("v0", v0.len(), n)?;
    check_len("w0", w0.len(), n)?;
    let (mut nu, mut om) = (vec![0.0; n], vec![0.0; n]);
    params.plus().apply_pair_into(v0, w0, &mut nu, &mut om);
    HypState::new(v0.to_vec(), w0.to_vec(), nu, om)
}

/// Scale factors `(alpha1, alpha2)` with `q alpha1^2 + tau p alpha2^2 = c` and
/// `alpha2 = 1 + tau (alpha1 - 1)`.
pub fn ellipsoid_factors(q: f64, p: f64, tau: f64, c: f64) -> Result<(f64, f64)> {
    let den = q + p * tau.powi(3);
    let disc = -p * q * (tau - 1.0).powi(2) * tau + c * den;
    if !(den > 0.0) || !(disc >= 0.0) || !(c > 0.0) {
        return Err(Error::ProjectionFailure(format!("mass {c} is unreachable along the ellipsoid normal (q = {q}, p = {p})")));
    }
    let root = disc.sqrt();
    let a1 = (p * (tau - 1.0) * tau * tau + root) / den;
    let a2 = (q * (1.0 - tau) + tau * root) / den;
    Ok((a1, a2))
}

fn project_flat(p: &HypParams, s: &[f64], target: f64) -> Result<Vec<f64>> {
    let (q, aux) = mass_parts(&p.ops, s);
    let (a1, a2) = ellipsoid_factors(q, aux, p.tau, target)?;
    let n = p.n();
    Ok(s.iter().enumerate().map(|(i, x)| if i < 2 * n { a1 * x } else { a2 * x }).collect())
}

/// Rescales `(v, w)` and `(nu, omega)` so that the hyperbolic mass equals `target_mass`.
pub fn project_mass_ellipsoid(params: &HypParams, s: &HypState, target_mass: f64) -> Result<HypState> {
    params.check(s.as_flat())?;
    HypState::from_flat(project_flat(params, s.as_flat(), target_mass)?)
}

/// The hyperbolic semidiscretization as a [`SplitOde`] with cached stage factorizations.
#[derive(Debug)]
pub struct HypSystem {
    pub params: HypParams,
    cache: FactorCache,
}

impl HypSystem {
    pub fn new(params: HypParams) -> Self {
        Self { params, cache: FactorCache::new() }
    }

    /// Row-scaled stage matrix `W (I - coeff L)` with `W = diag(m, m, tau m, tau m)`
    /// in node-interleaved ordering; its symmetric part is `W`.
    fn stage_matrix(&self, coeff: f64, dp: &CsrMatrix, dm: &CsrMatrix) -> CsrMatrix {
        let p = &self.params;
        let n = p.n();
        let m = &p.ops.mass_diag;
        let mut t = Vec::with_capacity(4 * n + 4 * (dp.nnz() + dm.nnz()));
        for i in 0..n {
            t.push((4 * i, 4 * i, m[i]));
            t.push((4 * i + 1, 4 * i + 1, m[i]));
            t.push((4 * i + 2, 4 * i + 2, p.tau * m[i]));
            t.push((4 * i + 3, 4 * i + 3, p.tau * m[i]));
            t.push((4 * i + 2, 4 * i + 3, coeff * m[i]));
            t.push((4 * i + 3, 4 * i + 2, -coeff * m[i]));
        }
        for (i, j, d) in dm.triplets() {
            t.push((4 * i, 4 * j + 3, coeff * m[i] * d));
            t.push((4 * i + 1, 4 * j + 2, -coeff * m[i] * d));
        }
        for (i, j, d) in dp.triplets() {
            t.push((4 * i + 2, 4 * j + 1, -coeff * m[i] * d));
            t.push((4 * i + 3, 4 * j, coeff * m[i] * d));
        }
        CsrMatrix::from_triplets(4 * n, 4 * n, &t)
    }

    pub fn implicit_stage_solve(&self, coeff: f64, rhs: &HypState) -> Result<HypState> {
        self.params.check(rhs.as_flat())?;
        let mut out = vec![0.0; rhs.as_flat().len()];
        self.implicit_solve(coeff, rhs.as_flat(), &mut out)?;
        Ok(HypState { data: out })
    }
}

impl SplitOde for HypSystem {
    fn dim(&self) -> usize {
        4 * self.params.n()
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
        let (Some(dp), Some(dm)) = (self.params.plus().as_sparse(), self.params.minus().as_sparse()) else {
            return Err(Error::InvalidArgument("implicit hyperbolic solves need sparse upwind operators".into()));
        };
        let solver = self.cache.get_or_factor(coeff, |c| self.stage_matrix(c, dp, dm))?;
        let m = &self.params.ops.mass_diag;
        let tau = self.params.tau;
        let mut b = vec![0.0; 4 * n];
        for i in 0..n {
            b[4 * i] = m[i] * rhs[i];
            b[4 * i + 1] = m[i] * rhs[n + i];
            b[4 * i + 2] = tau * m[i] * rhs[2 * n + i];
            b[4 * i + 3] = tau * m[i] * rhs[3 * n + i];
        }
        let x = solver.solve(&b)?;
        for i in 0..n {
            for k in 0..4 {
                out[k * n + i] = x[4 * i + k];
            }
        }
        Ok(())
    }

    fn cached_factorizations(&self) -> usize {
        self.cache.len()
    }
}

impl Invariants for HypSystem {
    fn mu(&self, u: &[f64]) -> f64 {
        let (q, p) = mass_parts(&self.params.ops, u);
        q + self.params.tau * p
    }

    fn eta(&self, u: &[f64]) -> f64 {
        energy_flat(&self.params, u)
    }

    fn project(&self, u: &[f64], target: f64) -> Result<Vec<f64>> {
        project_flat(&self.params, u, target)
    }

    fn projected_line<'a>(
        &'a self,
        base: &'a [f64],
        dir: &'a [f64],
        target: f64,
    ) -> Result<Box<dyn Fn(f64) -> f64 + 'a>> {
        let p = &self.params;
        let ops = &*p.ops;
        let n = p.n();
        let cross = |a: &[f64], b: &[f64]| {
            let prim = ops.inner(&a[..n], &b[..n]) + ops.inner(&a[n..2 * n], &b[n..2 * n]);
            let aux = ops.inner(&a[2 * n..3 * n], &b[2 * n..3 * n]) + ops.inner(&a[3 * n..], &b[3 * n..]);
            (prim, aux)
        };
        let (q_bb, p_bb) = cross(base, base);
        let (q_bd, p_bd) = cross(base, dir);
        let (q_dd, p_dd) = cross(dir, dir);
        let c_bb = coupling(p, base, base);
        let c_bd = coupling(p, base, dir) + coupling(p, dir, base);
        let c_dd = coupling(p, dir, dir);
        let (beta, tau) = (p.beta, p.tau);
        Ok(Box::new(move |g: f64| {
            let q = q_bb + 2.0 * g * q_bd + g * g * q_dd;
            let pa = p_bb + 2.0 * g * p_bd + g * g * p_dd;
            let Ok((a1, a2)) = ellipsoid_factors(q, pa, tau, target) else { return f64::NAN };
            let b = c_bb + g * c_bd + g * g * c_dd;
            let mut q4 = 0.0;
            for i in 0..n {
                let v = base[i] + g * dir[i];
                let w = base[n + i] + g * dir[n + i];
                let r = v * v + w * w;
                q4 += ops.mass_diag[i] * r * r;
            }
            2.0 * a1 * a2 * b - a2 * a2 * pa - 0.5 * beta * a1.powi(4) * q4
        }))
    }
}
