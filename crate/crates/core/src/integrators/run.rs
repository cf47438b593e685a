use super::{Method, SplitOde, StepOutput};
use crate::error::{Error, Result};
use serde::Serialize;
use std::time::Instant;

/// Invariants reported after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub mass: f64,
    pub energy: f64,
    pub naive_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub step: usize,
    pub t: f64,
    pub gamma: f64,
    pub mass: f64,
    pub energy: f64,
    pub naive_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub state: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub steps: usize,
    /// Step retries with a halved time step after a relaxation or projection failure.
    pub halvings: usize,
    pub factorizations: usize,
    pub wall_seconds: f64,
    pub min_gamma: f64,
    pub max_gamma: f64,
}

/// Time series of invariants plus solution snapshots of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
    pub snapshots: Vec<Snapshot>,
    pub stats: RunStats,
}

impl RunRecord {
    pub fn final_time(&self) -> Option<f64> {
        self.rows.last().map(|r| r.t)
    }

    /// Largest `|mass - mass_0|` and `|energy - energy_0|` over the run.
    pub fn max_drift(&self) -> (f64, f64) {
        let Some(first) = self.rows.first() else { return (0.0, 0.0) };
        self.rows.iter().fold((0.0, 0.0), |(m, e), r| {
            (f64::max(m, (r.mass - first.mass).abs()), f64::max(e, (r.energy - first.energy).abs()))
        })
    }

    /// Largest naive-energy drift, if it was recorded.
    pub fn max_naive_drift(&self) -> Option<f64> {
        let e0 = self.rows.first()?.naive_energy?;
        self.rows.iter().map(|r| r.naive_energy.map(|e| (e - e0).abs())).try_fold(0.0, |m, e| e.map(|e| f64::max(m, e)))
    }
}

/// Result of post-processing a provisional step: the accepted state and the
/// factor `gamma` applied to the time increment.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub state: Vec<f64>,
    pub gamma: f64,
}

/// Post-step modification of a provisional step (e.g. relaxation).
pub trait StepHook {
    fn accept(&self, u: &[f64], provisional: StepOutput, dt: f64) -> Result<Accepted>;

    /// Whether the hook may change the time increment.
    fn relaxes(&self) -> bool {
        false
    }
}

/// Accepts every provisional step unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoHook;

impl StepHook for NoHook {
    fn accept(&self, _u: &[f64], provisional: StepOutput, _dt: f64) -> Result<Accepted> {
        Ok(Accepted { state: provisional.state, gamma: 1.0 })
    }
}

/// How a relaxed run treats the end of each segment (final time or snapshot time).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndPolicy {
    /// The last step of a segment is truncated so that the unrelaxed time hits
    /// the target; the relaxed time actually reached is reported.
    #[default]
    RelaxedTime,
    /// The last step of a segment is taken unrelaxed and lands exactly on the target.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOptions {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
    pub snapshot_times: Vec<f64>,
    pub end_policy: EndPolicy,
    pub max_halvings: usize,
}

impl IntegrateOptions {
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Self {
        Self { t0, t_end, dt, snapshot_times: Vec::new(), end_policy: EndPolicy::RelaxedTime, max_halvings: 4 }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshot_times = times;
        self
    }

    pub fn with_end_policy(mut self, policy: EndPolicy) -> Self {
        self.end_policy = policy;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::InvalidArgument(format!("t_end {} must exceed t0 {}", self.t_end, self.t0)));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= self.t0 && **t <= self.t_end)) {
            return Err(Error::InvalidArgument(format!("snapshot time {t} outside [{}, {}]", self.t0, self.t_end)));
        }
        Ok(())
    }
}

/// A failed run with everything recorded up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub record: RunRecord,
    pub state: Vec<f64>,
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        let t = f.record.final_time().unwrap_or(f64::NAN);
        match f.error {
            Error::NumericFailure(m) => Error::NumericFailure(format!("{m} (after t = {t})")),
            Error::RelaxationFailure(m) => Error::RelaxationFailure(format!("{m} (after t = {t})")),
            Error::ProjectionFailure(m) => Error::ProjectionFailure(format!("{m} (after t = {t})")),
            other => other,
        }
    }
}

fn retryable(e: &Error) -> bool {
    matches!(e, Error::RelaxationFailure(_) | Error::ProjectionFailure(_))
}

/// Integrates from `opts.t0` to `opts.t_end` with uniform steps, passing each
/// provisional step through `hook` and recording `observe` after every step.
///
/// Snapshot times split the run into segments; each segment ends according
/// to `opts.end_policy`. Relaxation and projection failures are retried with
/// halved steps up to `opts.max_halvings` times.
pub fn integrate(
    ode: &dyn SplitOde,
    method: &Method,
    hook: &dyn StepHook,
    u0: &[f64],
    opts: &IntegrateOptions,
    observe: &dyn Fn(&[f64]) -> Observation,
) -> std::result::Result<(Vec<f64>, RunRecord), RunFailure> {
    let started = Instant::now();
    let mut record = RunRecord::default();
    let mut u = u0.to_vec();
    if let Err(error) = opts.validate().and_then(|_| crate::error::check_len("initial state", u0.len(), ode.dim())) {
        return Err(RunFailure { error, record, state: u });
    }
    let dt = opts.dt;
    let mut snaps: Vec<f64> = opts.snapshot_times.clone();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut targets: Vec<(f64, bool)> = snaps.iter().map(|&s| (s, true)).collect();
    if targets.last().map_or(true, |&(s, _)| s < opts.t_end) {
        targets.push((opts.t_end, false));
    }

    let push_row = |record: &mut RunRecord, step: usize, t: f64, gamma: f64, u: &[f64]| {
        let o = observe(u);
        record.rows.push(RunRow { step, t, gamma, mass: o.mass, energy: o.energy, naive_energy: o.naive_energy });
    };
    let mut t = opts.t0;
    let mut step = 0;
    let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
    push_row(&mut record, 0, t, 1.0, &u);

    let outcome: Result<()> = (|| {
        for &(target, is_snapshot) in &targets {
            while target - t > 1e-9 * dt {
                let remaining = target - t;
                let mut h = if remaining <= dt * (1.0 + 1e-12) { remaining } else { dt };
                let mut halvings = 0;
                let (next, gamma, t_next) = loop {
                    let is_final = h == remaining;
                    if is_final && opts.end_policy == EndPolicy::Exact && hook.relaxes() {
                        break (method.step(ode, &u, h)?.state, 1.0, target);
                    }
                    let provisional = method.step(ode, &u, h)?;
                    match hook.accept(&u, provisional, h) {
                        Ok(a) => {
                            let t_next = if a.gamma == 1.0 && is_final { target } else { t + a.gamma * h };
                            if opts.end_policy == EndPolicy::Exact && t_next > target {
                                // a relaxed step overshot the target: land on it unrelaxed instead
                                break (method.step(ode, &u, remaining)?.state, 1.0, target);
                            }
                            break (a.state, a.gamma, t_next);
                        }
                        Err(e) if retryable(&e) && halvings < opts.max_halvings => {
                            log::debug!("step at t = {t} with dt = {h} rejected ({e}); halving");
                            halvings += 1;
                            record.stats.halvings += 1;
                            h *= 0.5;
                        }
                        Err(e) => return Err(e),
                    }
                };
                let was_final = h == remaining;
                u = next;
                t = t_next;
                step += 1;
                gmin = gmin.min(gamma);
                gmax = gmax.max(gamma);
                push_row(&mut record, step, t, gamma, &u);
                if was_final {
                    break;
                }
            }
            if is_snapshot {
                record.snapshots.push(Snapshot { t, state: u.clone() });
            }
        }
        Ok(())
    })();

    record.stats.steps = step;
    record.stats.factorizations = ode.cached_factorizations();
    record.stats.wall_seconds = started.elapsed().as_secs_f64();
    record.stats.min_gamma = if step > 0 { gmin } else { 1.0 };
    record.stats.max_gamma = if step > 0 { gmax } else { 1.0 };
    match outcome {
        Ok(()) => Ok((u, record)),
        Err(error) => Err(RunFailure { error, record, state: u }),
    }
}
