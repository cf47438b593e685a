//! Initial data, exact solutions and post-processing.

mod gray;
mod hydro;

pub use gray::GraySoliton;
pub use hydro::{to_hydro, unwrap_phase, HydroFields, VACUUM_THRESHOLD};

use crate::error::{check_len, Error, Result};
use crate::nls::NlsState;
use crate::operators::{Grid, OperatorSet};
use serde::{Deserialize, Serialize};
use std::fmt;

/// `u = sech(x + 4t) exp(-i (2x + 3t))`, a solution for `beta = 2`.
pub fn one_soliton(grid: &Grid, t: f64) -> NlsState {
    let (v, w) = grid
        .nodes
        .iter()
        .map(|&x| {
            let s = 1.0 / (x + 4.0 * t).cosh();
            let (sn, cs) = (2.0 * x + 3.0 * t).sin_cos();
            (s * cs, -s * sn)
        })
        .unzip();
    NlsState::new(v, w).expect("matching lengths")
}

/// Bound-state data `u0 = N sech(x)` for `N` in {2, 3}.
pub fn bound_state_soliton(order_n: usize, grid: &Grid) -> Result<NlsState> {
    if !(2..=3).contains(&order_n) {
        return Err(Error::InvalidArgument(format!("bound state order must be 2 or 3, got {order_n}")));
    }
    let a = order_n as f64;
    NlsState::new(grid.nodes.iter().map(|x| a / x.cosh()).collect(), vec![0.0; grid.len()])
}

/// Smoothed Riemann data `rho = 1.5 - 0.5 tanh(100 x)`, `theta = 0`.
pub fn dispersive_shock(grid: &Grid) -> NlsState {
    let (rho_l, rho_r) = (2.0, 1.0);
    let v = grid.nodes.iter().map(|x| (0.5 * (rho_l + rho_r) + 0.5 * (rho_r - rho_l) * (100.0 * x).tanh()).sqrt()).collect();
    NlsState::new(v, vec![0.0; grid.len()]).expect("matching lengths")
}

/// `sqrt((a - b)^T M (a - b))` over both components.
pub fn l2_error(ops: &OperatorSet, a: &NlsState, b: &NlsState) -> Result<f64> {
    check_len("first state", a.n(), ops.n())?;
    check_len("second state", b.n(), ops.n())?;
    let d: Vec<f64> = a.as_flat().iter().zip(b.as_flat()).map(|(x, y)| x - y).collect();
    let n = ops.n();
    Ok((ops.norm_sq(&d[..n]) + ops.norm_sq(&d[n..])).sqrt())
}

/// Discrete L2 distance between the densities `|u|^2`.
pub fn density_l2_error(ops: &OperatorSet, a: &NlsState, rho: &[f64]) -> Result<f64> {
    check_len("state", a.n(), ops.n())?;
    check_len("density", rho.len(), ops.n())?;
    let d: Vec<f64> = (0..ops.n()).map(|i| a.v()[i] * a.v()[i] + a.w()[i] * a.w()[i] - rho[i]).collect();
    Ok(ops.norm_sq(&d).sqrt())
}

/// Least-squares slope of `log(error)` against `log(time)` over samples with `time >= t_floor`.
pub fn growth_fit(times: &[f64], errors: &[f64], t_floor: f64) -> Result<f64> {
    if times.len() != errors.len() {
        return Err(Error::FitFailure(format!("{} times but {} errors", times.len(), errors.len())));
    }
    let pts: Vec<(f64, f64)> = times.iter().zip(errors).filter(|(t, _)| **t >= t_floor).map(|(t, e)| (*t, *e)).collect();
    if pts.len() < 5 {
        return Err(Error::FitFailure(format!("need at least 5 samples after t = {t_floor}, got {}", pts.len())));
    }
    if let Some((t, e)) = pts.iter().find(|(t, e)| !(*t > 0.0 && *e > 0.0 && t.is_finite() && e.is_finite())) {
        return Err(Error::FitFailure(format!("non-positive sample (t = {t}, error = {e})")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::FitFailure("all sample times are identical".into()));
    }
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    OneSoliton,
    TwoSoliton,
    ThreeSoliton,
    GraySoliton,
    DispersiveShock,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        ProblemKind::OneSoliton,
        ProblemKind::TwoSoliton,
        ProblemKind::ThreeSoliton,
        ProblemKind::GraySoliton,
        ProblemKind::DispersiveShock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::OneSoliton => "one_soliton",
            ProblemKind::TwoSoliton => "two_soliton",
            ProblemKind::ThreeSoliton => "three_soliton",
            ProblemKind::GraySoliton => "gray_soliton",
            ProblemKind::DispersiveShock => "dispersive_shock",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A named test problem with its default parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub beta: f64,
    pub x_left: f64,
    pub x_right: f64,
    pub periodic: bool,
    pub default_horizon: f64,
    gray: Option<GraySoliton>,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Result<Self> {
        let (beta, x_left, x_right, horizon) = match kind {
            ProblemKind::OneSoliton => (2.0, -40.0, 40.0, 1.0),
            ProblemKind::TwoSoliton | ProblemKind::ThreeSoliton => (2.0, -35.0, 35.0, 4.3),
            ProblemKind::GraySoliton => (-1.0, -30.0, f64::NAN, 20.0),
            ProblemKind::DispersiveShock => (-1.0, -1600.0, 1600.0, 100.0),
        };
        let gray = match kind {
            ProblemKind::GraySoliton => Some(GraySoliton::standard()?),
            _ => None,
        };
        let x_right = gray.as_ref().map_or(x_right, |g| g.x_right);
        Ok(Self { kind, beta, x_left, x_right, periodic: true, default_horizon: horizon, gray })
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let kind = ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown problem '{name}'")))?;
        Self::new(kind)
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Replaces the domain (the gray soliton domain is fixed by periodicity).
    pub fn with_domain(mut self, x_left: f64, x_right: f64) -> Result<Self> {
        if self.gray.is_some() {
            return Err(Error::InvalidArgument("the gray soliton domain is determined by its phase".into()));
        }
        if !(x_right > x_left) {
            return Err(Error::InvalidArgument(format!("empty domain [{x_left}, {x_right}]")));
        }
        self.x_left = x_left;
        self.x_right = x_right;
        Ok(self)
    }

    pub fn gray(&self) -> Option<&GraySoliton> {
        self.gray.as_ref()
    }

    pub fn initial_state(&self, grid: &Grid) -> Result<NlsState> {
        match self.kind {
            ProblemKind::OneSoliton => Ok(one_soliton(grid, 0.0)),
            ProblemKind::TwoSoliton => bound_state_soliton(2, grid),
            ProblemKind::ThreeSoliton => bound_state_soliton(3, grid),
            ProblemKind::GraySoliton => self.gray.as_ref().expect("gray parameters").initial_state(grid),
            ProblemKind::DispersiveShock => Ok(dispersive_shock(grid)),
        }
    }

    pub fn exact_solution(&self, grid: &Grid, t: f64) -> Option<NlsState> {
        match self.kind {
            ProblemKind::OneSoliton => Some(one_soliton(grid, t)),
            _ => None,
        }
    }

    pub fn exact_density(&self, grid: &Grid, t: f64) -> Option<Vec<f64>> {
        match self.kind {
            ProblemKind::GraySoliton => {
                let g = self.gray.as_ref()?;
                Some(grid.nodes.iter().map(|&x| g.periodic_density(x, t)).collect())
            }
            _ => self.exact_solution(grid, t).map(|s| s.v().iter().zip(s.w()).map(|(a, b)| a * a + b * b).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nls::{mass, NlsParams};
    use crate::operators::make_fourier;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_soliton_samples() {
        let grid = Grid::periodic(8, -4.0, 4.0).unwrap();
        let u = one_soliton(&grid, 0.0);
        let i0 = grid.nodes.iter().position(|x| *x == 0.0).unwrap();
        assert_eq!((u.v()[i0], u.w()[i0]), (1.0, 0.0));
        let u = one_soliton(&grid, 0.37);
        for (i, x) in grid.nodes.iter().enumerate() {
            let m = (u.v()[i].powi(2) + u.w()[i].powi(2)).sqrt();
            assert!((m - 1.0 / (x + 4.0 * 0.37).cosh()).abs() < 1e-15);
        }
    }

    #[test]
    fn bound_state_masses() {
        let ops = make_fourier(1024, -35.0, 35.0).unwrap();
        let p = NlsParams::new(2.0, ops.clone());
        let two = bound_state_soliton(2, &ops.grid).unwrap();
        let i0 = ops.grid.nodes.iter().position(|x| *x == 0.0).unwrap();
        assert_eq!(two.v()[i0], 2.0);
        assert!((mass(&p, &two) - 8.0).abs() < 1e-8);
        assert!((mass(&p, &bound_state_soliton(3, &ops.grid).unwrap()) - 18.0).abs() < 1e-8);
        assert!(bound_state_soliton(4, &ops.grid).is_err());
    }

    #[test]
    fn dispersive_shock_data() {
        let grid = Grid::periodic(4, -2.0, 2.0).unwrap();
        let u = dispersive_shock(&grid);
        assert!((u.v()[2].powi(2) - 1.5).abs() < 1e-15);
        assert!((u.v()[1].powi(2) - 2.0).abs() < 1e-8 && (u.v()[3].powi(2) - 1.0).abs() < 1e-8);
        assert!(u.w().iter().all(|w| *w == 0.0));
    }

    #[test]
    fn l2_error_properties() {
        let ops = make_fourier(16, 0.0, 4.0).unwrap();
        let a = NlsState::new(vec![1.0; 16], vec![0.5; 16]).unwrap();
        assert_eq!(l2_error(&ops, &a, &a).unwrap(), 0.0);
        let b = NlsState::new(vec![1.25; 16], vec![0.5; 16]).unwrap();
        assert!((l2_error(&ops, &a, &b).unwrap() - 0.25 * 2.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut r = || NlsState::new((0..16).map(|_| rng.gen_range(-1.0..1.0)).collect(), (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        for _ in 0..20 {
            let (x, y, z) = (r(), r(), r());
            let e = |a, b| l2_error(&ops, a, b).unwrap();
            assert!(e(&x, &z) <= e(&x, &y) + e(&y, &z) + 1e-15);
        }
        assert!(l2_error(&ops, &a, &NlsState::zeros(8)).is_err());
    }

    #[test]
    fn growth_fits() {
        let t: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        let lin: Vec<f64> = t.iter().map(|t| 3e-6 * t).collect();
        let quad: Vec<f64> = t.iter().map(|t| 3e-6 * t * t).collect();
        assert!((growth_fit(&t, &lin, 0.0).unwrap() - 1.0).abs() < 1e-10);
        assert!((growth_fit(&t, &quad, 0.0).unwrap() - 2.0).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noisy: Vec<f64> = t.iter().map(|t| t.powf(1.5) * (1.0 + rng.gen_range(-0.05..0.05))).collect();
        let s = growth_fit(&t, &noisy, 0.0).unwrap();
        assert!((1.4..=1.6).contains(&s));
        assert!(matches!(growth_fit(&t, &vec![0.0; 20], 0.0), Err(Error::FitFailure(_))));
        assert!(growth_fit(&t, &lin, 17.0).is_err());
    }

    #[test]
    fn registry() {
        for k in ProblemKind::ALL {
            let p = ProblemSpec::by_name(k.name()).unwrap();
            assert_eq!(p.kind, k);
            if p.kind != ProblemKind::DispersiveShock {
                let ops = make_fourier(64, p.x_left, p.x_right).unwrap();
                let u = p.initial_state(&ops.grid).unwrap();
                if let Some(e) = p.exact_solution(&ops.grid, 0.0) {
                    assert!(e.as_flat().iter().zip(u.as_flat()).all(|(a, b)| (a - b).abs() <= 1e-12));
                }
            }
        }
        assert!(ProblemSpec::by_name("four_soliton").is_err());
        let g = ProblemSpec::by_name("gray_soliton").unwrap();
        assert!(g.clone().with_domain(0.0, 1.0).is_err());
        let ops = make_fourier(256, g.x_left, g.x_right).unwrap();
        let rho = g.exact_density(&ops.grid, 0.0).unwrap();
        let u = g.initial_state(&ops.grid).unwrap();
        assert!(density_l2_error(&ops, &u, &rho).unwrap() < 1e-12);
    }
}
