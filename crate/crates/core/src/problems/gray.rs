use crate::error::{Error, Result};
use crate::nls::NlsState;
use crate::operators::Grid;
use roots::{find_root_brent, SimpleConvergency};
use std::f64::consts::{PI, SQRT_2};

const QUAD_TOL: f64 = 1e-12;

/// Gray soliton of the defocusing NLS (`beta = -1`) with density
/// `rho = b1 - (b1 - b2) / cosh^2(sqrt(b1 - b2) (x / sqrt 2 - c t))`,
/// moving with speed `c sqrt 2` on a periodic domain `[x_left, x_right)`
/// chosen so that the phase is periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct GraySoliton {
    pub b1: f64,
    pub b2: f64,
    pub c: f64,
    pub x_left: f64,
    pub x_right: f64,
}

impl GraySoliton {
    pub fn new(b1: f64, b2: f64, c: f64, x_left: f64) -> Result<Self> {
        if !(b1 > b2 && b2 > 0.0) {
            return Err(Error::InvalidArgument(format!("gray soliton needs b1 > b2 > 0, got b1 = {b1}, b2 = {b2}")));
        }
        if !(x_left < 0.0) {
            return Err(Error::InvalidArgument(format!("left boundary must be negative, got {x_left}")));
        }
        let mut s = Self { b1, b2, c, x_left, x_right: f64::NAN };
        s.x_right = s.periodic_right_boundary()?;
        Ok(s)
    }

    /// The default setup: `b1 = 1.5`, `b2 = 1`, `c = 2` on `[-30, x_R)`.
    pub fn standard() -> Result<Self> {
        Self::new(1.5, 1.0, 2.0, -30.0)
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    fn profile(&self, xi: f64) -> f64 {
        let a = (self.b1 - self.b2).sqrt();
        let ch = (a * xi / SQRT_2).cosh();
        self.b1 - (self.b1 - self.b2) / (ch * ch)
    }

    /// Density on the unbounded line.
    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.profile(x - self.c * SQRT_2 * t)
    }

    /// Density of the periodically continued soliton (nearest image).
    pub fn periodic_density(&self, x: f64, t: f64) -> f64 {
        let l = self.length();
        let mut d = x - self.c * SQRT_2 * t;
        d -= l * (d / l).round();
        self.profile(d)
    }

    /// Hydrodynamic velocity `c - b1 sqrt(b2) / rho` in the traveling-wave variable.
    pub fn velocity(&self, x: f64) -> f64 {
        self.c - self.b1 * self.b2.sqrt() / self.density(x, 0.0)
    }

    /// Phase gradient `theta_x` at `t = 0`.
    pub fn phase_gradient(&self, x: f64) -> f64 {
        self.velocity(x) / SQRT_2
    }

    /// `theta(b) - theta(a)` by double-exponential quadrature on unit-length pieces.
    fn phase_increment(&self, a: f64, b: f64) -> f64 {
        let pieces = ((b - a).abs().ceil() as usize).max(1);
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|k| {
                let lo = a + k as f64 * h;
                quadrature::integrate(|x| self.phase_gradient(x), lo, lo + h, QUAD_TOL / pieces as f64).integral
            })
            .sum()
    }

    /// Smallest `x_R >= |x_left|` with `theta(x_R) - theta(x_left)` a multiple of `2 pi`.
    fn periodic_right_boundary(&self) -> Result<f64> {
        let start = -self.x_left;
        let base = self.phase_increment(self.x_left, start);
        let windings = (base / (2.0 * PI)).ceil();
        let target = 2.0 * PI * windings - base;
        if target == 0.0 {
            return Ok(start);
        }
        // theta_x is bounded below by its background value, which bounds the search interval
        let slope = self.phase_gradient(start).min(self.phase_gradient(0.0));
        if !(slope > 0.0) {
            return Err(Error::SetupFailure("gray soliton phase is not monotone; cannot make it periodic".into()));
        }
        let hi = start + target / slope * 1.01;
        let f = |x: f64| self.phase_increment(start, x) - target;
        find_root_brent(start, hi, f, &mut SimpleConvergency { eps: 1e-13, max_iter: 200 })
            .map_err(|e| Error::SetupFailure(format!("periodic right boundary not found: {e:?}")))
    }

    /// `u = sqrt(rho) exp(i theta)` at `t = 0`, `theta(x_left) = 0`.
    pub fn initial_state(&self, grid: &Grid) -> Result<NlsState> {
        let mut theta = 0.0;
        let mut prev = self.x_left;
        let mut v = Vec::with_capacity(grid.len());
        let mut w = Vec::with_capacity(grid.len());
        for &x in &grid.nodes {
            theta += self.phase_increment(prev, x);
            prev = x;
            let r = self.density(x, 0.0).sqrt();
            v.push(r * theta.cos());
            w.push(r * theta.sin());
        }
        NlsState::new(v, w)
    }
}
