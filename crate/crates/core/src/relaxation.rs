//! Relaxation of Runge-Kutta steps.
//!
//! Standard relaxation conserves one invariant `eta` by moving along the
//! secant `u + gamma (u~ - u)` and advancing time by `gamma dt`.
//! Quadratic-preserving relaxation first projects the provisional value
//! onto the level set of a quadratic invariant `mu` and then relaxes along
//! the projected secant, conserving both `mu` and `eta`.

use crate::error::{Error, Result};
use crate::integrators::{Accepted, Method, SplitOde, StepHook, StepOutput};
use crate::nls::{project_sphere_flat, NlsParams, NlsState};
use roots::{find_root_brent, Convergency};
use serde::{Deserialize, Serialize};
use std::cell::Cell;

/// Steps whose first-stage right-hand side is this small relative to the
/// state are treated as degenerate.
const DEGENERACY_RATIO: f64 = 1e-14;
const GAMMA_ABS_TOL: f64 = 1e-13;
const GAMMA_MIN: f64 = 0.5;
const POLISH_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelaxationMode {
    #[default]
    None,
    Standard,
    QuadraticPreserving,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationConfig {
    pub mode: RelaxationMode,
    /// Residual tolerance on `eta`, relative to `|eta(u^n)|`.
    pub gamma_tol: f64,
    /// Initial half-width of the bracket around 1.
    pub gamma_bracket: f64,
    pub max_expansions: usize,
    pub max_iterations: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        Self { mode: RelaxationMode::None, gamma_tol: 1e-13, gamma_bracket: 0.1, max_expansions: 6, max_iterations: 100 }
    }
}

impl RelaxationConfig {
    pub fn with_mode(mode: RelaxationMode) -> Self {
        Self { mode, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_tol > 0.0) {
            return Err(Error::Config(format!("gamma_tol must be positive, got {}", self.gamma_tol)));
        }
        if !(self.gamma_bracket > 0.0 && self.gamma_bracket < 1.0) {
            return Err(Error::Config(format!("gamma_bracket must lie in (0, 1), got {}", self.gamma_bracket)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// A quadratic invariant `mu` with its projection, and a second invariant `eta`.
pub trait Invariants: Sync {
    fn mu(&self, u: &[f64]) -> f64;

    fn eta(&self, u: &[f64]) -> f64;

    /// Projects `u` onto `{mu = target}`.
    fn project(&self, u: &[f64], target: f64) -> Result<Vec<f64>>;

    /// `gamma -> eta(base + gamma dir)`.
    fn line<'a>(&'a self, base: &'a [f64], dir: &'a [f64]) -> Result<Box<dyn Fn(f64) -> f64 + 'a>> {
        Ok(Box::new(move |g| {
            let x: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + g * d).collect();
            self.eta(&x)
        }))
    }

    /// `gamma -> eta(project(base + gamma dir, target))`, NaN where the projection fails.
    fn projected_line<'a>(
        &'a self,
        base: &'a [f64],
        dir: &'a [f64],
        target: f64,
    ) -> Result<Box<dyn Fn(f64) -> f64 + 'a>> {
        Ok(Box::new(move |g| {
            let x: Vec<f64> = base.iter().zip(dir).map(|(b, d)| b + g * d).collect();
            self.project(&x, target).map_or(f64::NAN, |p| self.eta(&p))
        }))
    }
}

/// Scales the state onto the sphere `mass = target_mass`.
pub fn project_mass_sphere(state: &NlsState, target_mass: f64, params: &NlsParams) -> Result<NlsState> {
    NlsState::from_flat(project_sphere_flat(&params.ops, state.as_flat(), target_mass)?)
}

/// Brent convergence on the bracket width only; residual tolerances are checked afterwards.
struct Width {
    max_iter: usize,
}

impl Convergency<f64> for Width {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }

    fn is_converged(&mut self, a: f64, b: f64) -> bool {
        (a - b).abs() <= 2.0 * f64::EPSILON * a.abs().max(b.abs())
    }

    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= self.max_iter
    }
}

/// Best point of a Brent search on `[a, b]`.
fn refine(residual: &dyn Fn(f64) -> f64, a: f64, b: f64, max_iter: usize) -> (f64, f64) {
    let best = Cell::new((f64::NAN, f64::INFINITY));
    let f = |x: f64| {
        let r = residual(x);
        if r.abs() < best.get().1.abs() {
            best.set((x, r));
        }
        r
    };
    let _ = find_root_brent(a, b, f, &mut Width { max_iter });
    best.get()
}

/// Root of `residual` closest to 1, accepted when
/// `|residual| <= max(gamma_tol |eta0|, 1e-13)`.
///
/// The bracket `[1 - h, 1 + h]` starts at `h = gamma_bracket` and doubles up
/// to `max_expansions` times until a sign change against `residual(1)` appears
/// on either side.
pub fn solve_gamma(residual: impl Fn(f64) -> f64, eta0: f64, cfg: &RelaxationConfig) -> Result<f64> {
    let tol = (cfg.gamma_tol * eta0.abs()).max(GAMMA_ABS_TOL);
    let r1 = residual(1.0);
    if r1 == 0.0 {
        return Ok(1.0);
    }
    if !r1.is_finite() {
        return Err(Error::RelaxationFailure(format!("relaxation residual at gamma = 1 is {r1}")));
    }
    let changes = |x: f64| {
        let r = residual(x);
        r.is_finite() && (r == 0.0 || r.signum() != r1.signum())
    };
    let mut h = cfg.gamma_bracket;
    for _ in 0..=cfg.max_expansions {
        let lo = (1.0 - h).max(GAMMA_MIN);
        let hi = 1.0 + h;
        let mut candidates = Vec::with_capacity(2);
        if changes(lo) {
            candidates.push(refine(&residual, lo, 1.0, cfg.max_iterations));
        }
        if changes(hi) {
            candidates.push(refine(&residual, 1.0, hi, cfg.max_iterations));
        }
        let best = candidates.into_iter().filter(|(_, r)| r.abs() <= tol).min_by(|a, b| (a.0 - 1.0).abs().total_cmp(&(b.0 - 1.0).abs()));
        if let Some((g, _)) = best {
            return Ok(g);
        }
        h *= 2.0;
    }
    if r1.abs() <= tol {
        return Ok(1.0);
    }
    Err(Error::RelaxationFailure(format!(
        "no relaxation parameter found within {} bracket expansions (residual at 1: {r1:e})",
        cfg.max_expansions
    )))
}

fn check_nondegenerate(u: &[f64], rhs_norm: f64) -> Result<()> {
    let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if rhs_norm <= DEGENERACY_RATIO * un {
        return Err(Error::RelaxationFailure(format!("degenerate step: |f(u)| = {rhs_norm:e} for |u| = {un:e}")));
    }
    Ok(())
}

fn axpy(u: &[f64], g: f64, d: &[f64]) -> Vec<f64> {
    u.iter().zip(d).map(|(a, b)| a + g * b).collect()
}

/// Newton steps on `gamma` against the directly evaluated `eta`, which can
/// round differently from a fast `projected_line`. Keeps the best iterate.
fn polish(
    inv: &dyn Invariants,
    u: &[f64],
    d: &[f64],
    target: f64,
    eta0: f64,
    gamma: f64,
    line: &dyn Fn(f64) -> f64,
) -> Result<(Vec<f64>, f64)> {
    let eval = |g: f64| -> Result<(Vec<f64>, f64)> {
        let s = inv.project(&axpy(u, g, d), target)?;
        let r = inv.eta(&s) - eta0;
        Ok((s, r))
    };
    let (mut best, mut r) = eval(gamma)?;
    let mut g = gamma;
    let delta = 1e-4;
    let slope = (line(g + delta) - line(g - delta)) / (2.0 * delta);
    if !(slope.is_finite() && slope != 0.0) {
        return Ok((best, g));
    }
    for _ in 0..POLISH_STEPS {
        if r == 0.0 {
            break;
        }
        let g_new = g - r / slope;
        if g_new == g {
            break;
        }
        let (s, r_new) = eval(g_new)?;
        if !(r_new.abs() < r.abs()) {
            break;
        }
        (best, r, g) = (s, r_new, g_new);
    }
    Ok((best, g))
}

/// Relaxes a provisional step `provisional` taken from `u`.
pub fn relax(inv: &dyn Invariants, cfg: &RelaxationConfig, u: &[f64], provisional: StepOutput) -> Result<Accepted> {
    match cfg.mode {
        RelaxationMode::None => Ok(Accepted { state: provisional.state, gamma: 1.0 }),
        RelaxationMode::Standard => {
            check_nondegenerate(u, provisional.rhs_norm)?;
            let eta0 = inv.eta(u);
            let d: Vec<f64> = provisional.state.iter().zip(u).map(|(a, b)| a - b).collect();
            let line = inv.line(u, &d)?;
            let gamma = solve_gamma(|g| line(g) - eta0, eta0, cfg)?;
            Ok(Accepted { state: axpy(u, gamma, &d), gamma })
        }
        RelaxationMode::QuadraticPreserving => {
            check_nondegenerate(u, provisional.rhs_norm)?;
            let target = inv.mu(u);
            let eta0 = inv.eta(u);
            let projected = inv.project(&provisional.state, target)?;
            let d: Vec<f64> = projected.iter().zip(u).map(|(a, b)| a - b).collect();
            let line = inv.projected_line(u, &d, target)?;
            let gamma = solve_gamma(|g| line(g) - eta0, eta0, cfg)?;
            let (state, gamma) = polish(inv, u, &d, target, eta0, gamma, &*line)?;
            Ok(Accepted { state, gamma })
        }
    }
}

/// [`StepHook`] applying [`relax`] after every step.
pub struct Relaxation<'a> {
    pub invariants: &'a dyn Invariants,
    pub config: RelaxationConfig,
}

impl<'a> Relaxation<'a> {
    pub fn new(invariants: &'a dyn Invariants, config: RelaxationConfig) -> Self {
        Self { invariants, config }
    }
}

impl StepHook for Relaxation<'_> {
    fn accept(&self, u: &[f64], provisional: StepOutput, _dt: f64) -> Result<Accepted> {
        relax(self.invariants, &self.config, u, provisional)
    }

    fn relaxes(&self) -> bool {
        self.config.mode != RelaxationMode::None
    }
}

#[derive(Debug, Clone)]
pub struct RelaxedStep {
    pub state: Vec<f64>,
    pub t: f64,
    pub dt: f64,
    pub gamma: f64,
}

fn relaxed_step(
    ode: &dyn SplitOde,
    method: &Method,
    u: &[f64],
    t: f64,
    dt: f64,
    inv: &dyn Invariants,
    cfg: &RelaxationConfig,
) -> Result<RelaxedStep> {
    let provisional = method.step(ode, u, dt)?;
    let a = relax(inv, cfg, u, provisional)?;
    Ok(RelaxedStep { state: a.state, t: t + a.gamma * dt, dt: a.gamma * dt, gamma: a.gamma })
}

/// One step conserving both `mu` and `eta`.
pub fn quadratic_preserving_step(
    ode: &dyn SplitOde,
    method: &Method,
    u: &[f64],
    t: f64,
    dt: f64,
    inv: &dyn Invariants,
    cfg: &RelaxationConfig,
) -> Result<RelaxedStep> {
    let cfg = RelaxationConfig { mode: RelaxationMode::QuadraticPreserving, ..cfg.clone() };
    relaxed_step(ode, method, u, t, dt, inv, &cfg)
}

/// One step conserving `eta` only.
pub fn standard_relaxation_step(
    ode: &dyn SplitOde,
    method: &Method,
    u: &[f64],
    t: f64,
    dt: f64,
    inv: &dyn Invariants,
    cfg: &RelaxationConfig,
) -> Result<RelaxedStep> {
    let cfg = RelaxationConfig { mode: RelaxationMode::Standard, ..cfg.clone() };
    relaxed_step(ode, method, u, t, dt, inv, &cfg)
}
