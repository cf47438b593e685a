//! Declarative experiment runs: config parsing, simulation setup, reference
//! solutions and CSV/JSON output.

mod commands;
mod config;
pub mod output;

pub use commands::{
    cmd_bench, cmd_conformance, conformance_battery, cmd_converge, cmd_error_growth, cmd_run, observed_orders, BenchRow, ConvergenceRow,
    GrowthReport, GrowthSeries, RunSummary, BENCH_REPEATS,
};
pub use config::{Equation, GrowthConfig, OperatorConfig, RunConfig, SweepAxis, SweepConfig};

use crate::error::{Error, Result};
use crate::hyperbolic::{hyp_energy, hyp_mass, well_prepared_init, HypParams, HypState, HypSystem};
use crate::integrators::{integrate, EndPolicy, IntegrateOptions, Method, NoHook, Observation, RunFailure, RunRecord};
use crate::nls::{energy, mass, naive_energy, NlsParams, NlsState, NlsSystem};
use crate::operators::{make_operator, OperatorKind, OperatorSet};
use crate::problems::{l2_error, ProblemSpec};
use crate::relaxation::{Relaxation, RelaxationConfig};
use std::sync::Arc;

/// Step of the fine unrelaxed reference run, relative to the run's own step.
pub const REFERENCE_REFINEMENT: f64 = 10.0;

enum System {
    Nls(NlsSystem),
    Hyperbolic(HypSystem),
}

/// Everything needed to integrate one configuration.
pub struct Simulation {
    pub config: RunConfig,
    pub problem: ProblemSpec,
    pub beta: f64,
    pub ops: Arc<OperatorSet>,
    pub method: Method,
    system: System,
}

impl Simulation {
    pub fn new(config: &RunConfig) -> Result<Self> {
        config.validate()?;
        let mut problem = ProblemSpec::by_name(&config.problem)?;
        if let Some([a, b]) = config.domain {
            problem = problem.with_domain(a, b)?;
        }
        let beta = config.beta_override.unwrap_or(problem.beta);
        let oc = &config.operator;
        let ops = Arc::new(make_operator(oc.kind, oc.order, oc.n, problem.x_left, problem.x_right)?);
        let method = Method::by_name(&config.tableau)?;
        let system = match config.equation {
            Equation::Nls => System::Nls(NlsSystem::new(NlsParams { beta, ops: ops.clone() })),
            Equation::NlsHyperbolic => {
                let tau = config.tau.expect("validated");
                System::Hyperbolic(HypSystem::new(HypParams::from_shared(beta, tau, ops.clone())?))
            }
        };
        Ok(Self { config: config.clone(), problem, beta, ops, method, system })
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self.system, System::Hyperbolic(_))
    }

    pub fn nls_params(&self) -> NlsParams {
        NlsParams { beta: self.beta, ops: self.ops.clone() }
    }

    /// Initial data; auxiliary variables of the hyperbolic system are well prepared.
    pub fn initial_state(&self) -> Result<Vec<f64>> {
        let u0 = self.problem.initial_state(&self.ops.grid)?;
        match &self.system {
            System::Nls(_) => Ok(u0.into_flat()),
            System::Hyperbolic(h) => Ok(well_prepared_init(&h.params, u0.v(), u0.w())?.into_flat()),
        }
    }

    /// The `(v, w)` part of a full state.
    pub fn nls_part(&self, u: &[f64]) -> NlsState {
        NlsState::from_flat(u[..2 * self.n()].to_vec()).expect("state has at least 2n entries")
    }

    pub fn observe(&self, u: &[f64]) -> Observation {
        match &self.system {
            System::Nls(s) => {
                let st = NlsState::from_flat(u.to_vec()).expect("checked length");
                let naive = (self.ops.kind == OperatorKind::Fourier).then(|| naive_energy(&s.params, &st));
                Observation { mass: mass(&s.params, &st), energy: energy(&s.params, &st), naive_energy: naive }
            }
            System::Hyperbolic(h) => {
                let st = HypState::from_flat(u.to_vec()).expect("checked length");
                Observation { mass: hyp_mass(&h.params, &st), energy: hyp_energy(&h.params, &st), naive_energy: None }
            }
        }
    }

    pub fn options(&self, dt: f64, t_end: f64, snapshots: Vec<f64>) -> IntegrateOptions {
        IntegrateOptions::new(0.0, t_end, dt).with_snapshots(snapshots).with_end_policy(self.config.end_policy)
    }

    /// Integrates `u0` with the given relaxation settings.
    pub fn integrate_with(
        &self,
        relaxation: &RelaxationConfig,
        u0: &[f64],
        opts: &IntegrateOptions,
    ) -> std::result::Result<(Vec<f64>, RunRecord), RunFailure> {
        let observe = |u: &[f64]| self.observe(u);
        match &self.system {
            System::Nls(s) => integrate(s, &self.method, &Relaxation::new(s, relaxation.clone()), u0, opts, &observe),
            System::Hyperbolic(h) => {
                integrate(h, &self.method, &Relaxation::new(h, relaxation.clone()), u0, opts, &observe)
            }
        }
    }

    /// Runs the configuration as given.
    pub fn run(&self) -> std::result::Result<(Vec<f64>, RunRecord), RunFailure> {
        let u0 = match self.initial_state() {
            Ok(u) => u,
            Err(error) => return Err(RunFailure { error, record: RunRecord::default(), state: Vec::new() }),
        };
        let opts = self.options(self.config.dt, self.config.t_end, self.config.snapshot_times.clone());
        self.integrate_with(&self.config.relaxation, &u0, &opts)
    }

    /// `(v, w)` of the true solution at each of `times` (sorted or not).
    ///
    /// Uses the exact solution when known, otherwise an unrelaxed fifth-order
    /// NLS run with step `reference_dt` on the same operators landing exactly on each time.
    pub fn reference_states(&self, times: &[f64], reference_dt: f64) -> Result<Vec<NlsState>> {
        if self.problem.exact_solution(&self.ops.grid, 0.0).is_some() {
            return Ok(times.iter().filter_map(|&t| self.problem.exact_solution(&self.ops.grid, t)).collect());
        }
        let Some(t_max) = times.iter().copied().reduce(f64::max) else { return Ok(Vec::new()) };
        if !(t_max > 0.0) {
            return Err(Error::InvalidArgument("reference times must be positive".into()));
        }
        let sys = NlsSystem::new(self.nls_params());
        let method = Method::by_name("kc5")?;
        let u0 = self.problem.initial_state(&self.ops.grid)?;
        let opts = IntegrateOptions::new(0.0, t_max, reference_dt)
            .with_snapshots(times.to_vec())
            .with_end_policy(EndPolicy::Exact);
        let observe = |_: &[f64]| Observation { mass: 0.0, energy: 0.0, naive_energy: None };
        let (_, rec) = integrate(&sys, &method, &NoHook, u0.as_flat(), &opts, &observe)?;
        times
            .iter()
            .map(|&t| {
                let snap = rec
                    .snapshots
                    .iter()
                    .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
                    .filter(|s| (s.t - t).abs() <= 1e-9 * reference_dt)
                    .ok_or_else(|| Error::NumericFailure(format!("reference run missed t = {t}")))?;
                NlsState::from_flat(snap.state.clone())
            })
            .collect()
    }

    /// Discrete L2 error of the `(v, w)` part of `u` against a reference state.
    pub fn error_against(&self, u: &[f64], reference: &NlsState) -> Result<f64> {
        l2_error(&self.ops, &self.nls_part(u), reference)
    }
}
