//! Explicit and IMEX Runge-Kutta one-step methods and the time loop.

mod ode;
mod run;
pub mod tableau;

pub use ode::{explicit_ode, FnOde, SplitOde};
pub use run::{integrate, Accepted, EndPolicy, IntegrateOptions, NoHook, Observation, RunFailure, RunRecord, RunRow, RunStats, Snapshot, StepHook};
pub use tableau::{ButcherTableau, ImexTableau};

use crate::error::{Error, Result};

/// A one-step method addressable by name.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Explicit(ButcherTableau),
    Imex(ImexTableau),
}

/// Provisional step result.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub state: Vec<f64>,
    /// Euclidean norm of the full right-hand side at the initial state.
    pub rhs_norm: f64,
}

impl Method {
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name.to_ascii_lowercase().as_str() {
            "rk4" => Method::Explicit(tableau::rk4()),
            "heun" => Method::Explicit(tableau::heun()),
            "ars343" | "ars443" | "ars3" => Method::Imex(tableau::ars443()),
            "kc43" | "kc4" => Method::Imex(tableau::kc43()),
            "kc54" | "kc5" => Method::Imex(tableau::kc54()),
            other => return Err(Error::InvalidArgument(format!("unknown tableau '{other}'"))),
        })
    }

    pub fn names() -> &'static [&'static str] {
        &["rk4", "heun", "ars343", "kc43", "kc54"]
    }

    pub fn name(&self) -> &str {
        match self {
            Method::Explicit(t) => &t.name,
            Method::Imex(t) => &t.name,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            Method::Explicit(t) => t.order,
            Method::Imex(t) => t.order,
        }
    }

    pub fn step(&self, ode: &dyn SplitOde, u: &[f64], dt: f64) -> Result<StepOutput> {
        match self {
            Method::Explicit(t) => erk_step(ode, t, u, dt),
            Method::Imex(t) => imex_step(ode, t, u, dt),
        }
    }
}

fn check_step(ode: &dyn SplitOde, u: &[f64], dt: f64) -> Result<()> {
    crate::error::check_len("state", u.len(), ode.dim())?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

fn finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericFailure(format!("non-finite values in {what}")))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `out = u + dt sum_j coef_j k_j` over nonzero coefficients.
fn combine(out: &mut [f64], u: &[f64], dt: f64, terms: &[(f64, &[f64])]) {
    out.copy_from_slice(u);
    for &(c, k) in terms {
        if c != 0.0 {
            let s = dt * c;
            out.iter_mut().zip(k).for_each(|(o, k)| *o += s * k);
        }
    }
}

pub fn erk_step(ode: &dyn SplitOde, tab: &ButcherTableau, u: &[f64], dt: f64) -> Result<StepOutput> {
    check_step(ode, u, dt)?;
    let s = tab.stages();
    let n = u.len();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; s];
    let mut stage = vec![0.0; n];
    for i in 0..s {
        let terms: Vec<(f64, &[f64])> = (0..i).map(|j| (tab.a[i][j], k[j].as_slice())).collect();
        combine(&mut stage, u, dt, &terms);
        finite(&stage, "explicit stage")?;
        ode.rhs(&stage, &mut k[i])?;
    }
    let rhs_norm = norm(&k[0]);
    let terms: Vec<(f64, &[f64])> = (0..s).map(|j| (tab.b[j], k[j].as_slice())).collect();
    let mut out = vec![0.0; n];
    combine(&mut out, u, dt, &terms);
    finite(&out, "explicit step")?;
    Ok(StepOutput { state: out, rhs_norm })
}

pub fn imex_step(ode: &dyn SplitOde, tab: &ImexTableau, u: &[f64], dt: f64) -> Result<StepOutput> {
    check_step(ode, u, dt)?;
    let s = tab.stages;
    let n = u.len();
    let mut fi: Vec<Vec<f64>> = vec![vec![0.0; n]; s];
    let mut fe: Vec<Vec<f64>> = vec![vec![0.0; n]; s];
    let mut rhs = vec![0.0; n];
    let mut stage = vec![0.0; n];
    let stiffly_accurate = tab.stiffly_accurate();
    let mut rhs_norm = 0.0;
    for i in 0..s {
        let mut terms: Vec<(f64, &[f64])> = Vec::with_capacity(2 * i);
        for j in 0..i {
            terms.push((tab.a_explicit[i][j], fe[j].as_slice()));
            terms.push((tab.a_implicit[i][j], fi[j].as_slice()));
        }
        combine(&mut rhs, u, dt, &terms);
        let diag = tab.a_implicit[i][i];
        if diag != 0.0 {
            ode.implicit_solve(diag * dt, &rhs, &mut stage)?;
        } else {
            stage.copy_from_slice(&rhs);
        }
        finite(&stage, "IMEX stage")?;
        if stiffly_accurate && i == s - 1 {
            return Ok(StepOutput { state: stage, rhs_norm });
        }
        let (a, b) = (&mut fi[i], &mut fe[i]);
        ode.rhs_split(&stage, a, b)?;
        if i == 0 {
            rhs_norm = a.iter().zip(b.iter()).map(|(x, y)| (x + y) * (x + y)).sum::<f64>().sqrt();
        }
    }
    let mut terms: Vec<(f64, &[f64])> = Vec::with_capacity(2 * s);
    for j in 0..s {
        terms.push((tab.b_explicit[j], fe[j].as_slice()));
        terms.push((tab.b_implicit[j], fi[j].as_slice()));
    }
    let mut out = vec![0.0; n];
    combine(&mut out, u, dt, &terms);
    finite(&out, "IMEX step")?;
    Ok(StepOutput { state: out, rhs_norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_linear(lambda: f64) -> impl SplitOde {
        FnOde {
            dim: 1,
            linear: move |u: &[f64], o: &mut [f64]| o[0] = lambda * u[0],
            nonlinear: |_: &[f64], o: &mut [f64]| o[0] = 0.0,
            implicit: move |c: f64, r: &[f64], o: &mut [f64]| {
                o[0] = r[0] / (1.0 - c * lambda);
                Ok(())
            },
        }
    }

    fn rotation() -> impl SplitOde {
        explicit_ode(2, |u: &[f64], o: &mut [f64]| {
            o[0] = -u[1];
            o[1] = u[0];
        })
    }

    #[test]
    fn rk4_exponential() {
        let ode = explicit_ode(1, |u: &[f64], o: &mut [f64]| o[0] = u[0]);
        let out = Method::by_name("rk4").unwrap().step(&ode, &[1.0], 0.1).unwrap();
        // 1 + h + h^2/2 + h^3/6 + h^4/24 with h = 0.1
        let taylor = 1.0 + 0.1 + 0.005 + 0.1_f64.powi(3) / 6.0 + 0.1_f64.powi(4) / 24.0;
        assert!((out.state[0] - taylor).abs() < 1e-15);
        assert!((out.state[0] - 0.1_f64.exp()).abs() < 1e-7);
    }

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let ode = explicit_ode(3, |_: &[f64], o: &mut [f64]| o.fill(0.0));
        for name in Method::names() {
            let out = Method::by_name(name).unwrap().step(&ode, &[1.0, -2.0, 3.0], 0.3).unwrap();
            assert_eq!(out.state, vec![1.0, -2.0, 3.0]);
            assert_eq!(out.rhs_norm, 0.0);
        }
    }

    #[test]
    fn rk4_rotation_norm_defect_is_fifth_order() {
        let m = Method::by_name("rk4").unwrap();
        let defect = |dt: f64| {
            let u = m.step(&rotation(), &[1.0, 0.0], dt).unwrap().state;
            (u[0] * u[0] + u[1] * u[1] - 1.0).abs()
        };
        // |R(i dt)|^2 - 1 = -dt^6/72 + O(dt^8)
        for dt in [0.1, 0.05] {
            assert!((defect(dt) - dt.powi(6) / 72.0).abs() < dt.powi(8));
        }
    }

    #[test]
    fn imex_linear_step_reproduces_stability_function() {
        for name in ["ars343", "kc43", "kc54"] {
            let Method::Imex(t) = Method::by_name(name).unwrap() else { unreachable!() };
            for z in [-0.3, -2.0, -50.0] {
                let dt = 0.1;
                let out = imex_step(&scalar_linear(z / dt), &t, &[1.0], dt).unwrap();
                let r = t.implicit_stability(z);
                assert!((out.state[0] - r).abs() < 1e-13 * r.abs().max(1e-3), "{name} z={z}");
            }
        }
    }

    #[test]
    fn imex_without_linear_part_is_the_explicit_method() {
        let ode = explicit_ode(2, |u: &[f64], o: &mut [f64]| {
            o[0] = -u[1] * u[0];
            o[1] = u[0].sin();
        });
        for name in ["ars343", "kc43", "kc54"] {
            let Method::Imex(t) = Method::by_name(name).unwrap() else { unreachable!() };
            let a: Vec<&[f64]> = t.a_explicit.iter().map(|r| r.as_slice()).collect();
            let erk = ButcherTableau::new("erk", &a, &t.b_explicit, t.order).unwrap();
            let x = imex_step(&ode, &t, &[0.4, 0.9], 0.07).unwrap().state;
            let y = erk_step(&ode, &erk, &[0.4, 0.9], 0.07).unwrap().state;
            assert!((x[0] - y[0]).abs() < 1e-15 && (x[1] - y[1]).abs() < 1e-15, "{name}");
        }
    }

    #[test]
    fn linear_invariants_are_preserved() {
        // u' = A u with 1^T A = 0
        let ode = FnOde {
            dim: 3,
            linear: |u: &[f64], o: &mut [f64]| {
                o[0] = -u[0] + 0.5 * u[2];
                o[1] = u[0] - 2.0 * u[1];
                o[2] = 2.0 * u[1] - 0.5 * u[2];
            },
            nonlinear: |u: &[f64], o: &mut [f64]| {
                let f = u[0] * u[1];
                o[0] = -f;
                o[1] = 0.0;
                o[2] = f;
            },
            implicit: |c: f64, r: &[f64], o: &mut [f64]| {
                let a = nalgebra::Matrix3::new(-1.0, 0.0, 0.5, 1.0, -2.0, 0.0, 0.0, 2.0, -0.5);
                let m = nalgebra::Matrix3::identity() - a * c;
                let lu = m.lu();
                let b = nalgebra::Vector3::new(r[0], r[1], r[2]);
                let mut x = lu.solve(&b).ok_or(Error::NumericFailure("singular".into()))?;
                x += lu.solve(&(b - m * x)).unwrap();
                o.copy_from_slice(x.as_slice());
                Ok(())
            },
        };
        for name in Method::names() {
            let m = Method::by_name(name).unwrap();
            let mut u = vec![0.2, 0.5, 0.3];
            for _ in 0..1000 {
                u = m.step(&ode, &u, 0.01).unwrap().state;
            }
            assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-13, "{name} {:e}", u.iter().sum::<f64>() - 1.0);
        }
    }

    #[test]
    fn steps_are_deterministic() {
        let m = Method::by_name("kc54").unwrap();
        let ode = scalar_linear(-3.0);
        let a = m.step(&ode, &[0.7], 0.2).unwrap().state;
        let b = m.step(&ode, &[0.7], 0.2).unwrap().state;
        assert_eq!(a[0].to_bits(), b[0].to_bits());
    }

    #[test]
    fn bad_inputs() {
        let m = Method::by_name("heun").unwrap();
        assert!(m.step(&rotation(), &[1.0], 0.1).is_err());
        assert!(m.step(&rotation(), &[1.0, 0.0], 0.0).is_err());
        let blowup = explicit_ode(1, |_: &[f64], o: &mut [f64]| o[0] = f64::INFINITY);
        assert!(matches!(m.step(&blowup, &[1.0], 0.1), Err(Error::NumericFailure(_))));
        assert!(Method::by_name("euler").is_err());
        assert_eq!(Method::by_name("KC5").unwrap().name(), "kc54");
    }
}
