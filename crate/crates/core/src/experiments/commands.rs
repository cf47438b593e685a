use super::output::{fmt_f64, write_invariants, write_json, write_snapshots, write_table};
use super::{RunConfig, Simulation, SweepAxis, REFERENCE_REFINEMENT};
use crate::error::{Error, Result};
use crate::integrators::{Method, RunRecord, RunStats};
use crate::operators::{make_operator, sbp_conformance_seeded, ConformanceReport, OperatorKind};
use crate::problems::{density_l2_error, growth_fit};
use crate::relaxation::{RelaxationConfig, RelaxationMode};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Headline numbers of one run, also written to `metadata.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub final_time: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub naive_energy_drift: Option<f64>,
    /// Error against the exact solution, when one is known.
    pub error: Option<f64>,
    pub stats: RunStats,
}

#[derive(Serialize)]
struct Metadata<'a> {
    crate_version: &'static str,
    config: &'a RunConfig,
    summary: &'a RunSummary,
    status: String,
}

fn summarize(sim: &Simulation, u: &[f64], record: &RunRecord) -> Result<RunSummary> {
    let final_time = record.final_time().unwrap_or(0.0);
    let (mass_drift, energy_drift) = record.max_drift();
    let error = match sim.problem.exact_solution(&sim.ops.grid, final_time) {
        Some(exact) if !u.is_empty() => Some(sim.error_against(u, &exact)?),
        _ => None,
    };
    Ok(RunSummary {
        final_time,
        mass_drift,
        energy_drift,
        naive_energy_drift: record.max_naive_drift(),
        error,
        stats: record.stats.clone(),
    })
}

fn write_run(dir: &Path, sim: &Simulation, record: &RunRecord, summary: &RunSummary, status: String) -> Result<()> {
    write_invariants(&dir.join("invariants.csv"), record)?;
    if !record.snapshots.is_empty() {
        write_snapshots(&dir.join("snapshots.csv"), record, sim.n())?;
    }
    let meta = Metadata { crate_version: env!("CARGO_PKG_VERSION"), config: &sim.config, summary, status };
    write_json(&dir.join("metadata.json"), &meta)
}

/// Runs one configuration and writes `invariants.csv`, `snapshots.csv` (if
/// snapshots were requested) and `metadata.json` into `out_dir`.
///
/// On a solver failure the partial record is still written before the error is returned.
pub fn cmd_run(config: &RunConfig, out_dir: &Path) -> Result<RunSummary> {
    let sim = Simulation::new(config)?;
    match sim.run() {
        Ok((u, record)) => {
            let summary = summarize(&sim, &u, &record)?;
            write_run(out_dir, &sim, &record, &summary, "ok".into())?;
            Ok(summary)
        }
        Err(failure) => {
            let summary = summarize(&sim, &[], &failure.record)?;
            write_run(out_dir, &sim, &failure.record, &summary, format!("failed: {}", failure.error))?;
            Err(failure.into())
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    /// Node count or time step.
    pub resolution: f64,
    /// Mesh width or time step.
    pub h: f64,
    pub final_time: f64,
    pub error: f64,
    /// Observed order from this and the previous row; NaN when undefined.
    pub order: f64,
}

/// `log(e[i-1] / e[i]) / log(h[i-1] / h[i])`, NaN for the first entry and wherever undefined.
pub fn observed_orders(h: &[f64], errors: &[f64]) -> Vec<f64> {
    (0..h.len())
        .map(|i| {
            if i == 0 {
                return f64::NAN;
            }
            let p = (errors[i - 1] / errors[i]).ln() / (h[i - 1] / h[i]).ln();
            if p.is_finite() {
                p
            } else {
                f64::NAN
            }
        })
        .collect()
}

fn run_final(config: &RunConfig) -> Result<(Simulation, Vec<f64>, f64)> {
    let sim = Simulation::new(config)?;
    let (u, rec) = sim.run()?;
    let t = rec.final_time().unwrap_or(0.0);
    Ok((sim, u, t))
}

/// Spatial or temporal convergence sweep over `config.sweep`; writes `convergence.csv` when `out_dir` is given.
pub fn cmd_converge(config: &RunConfig, out_dir: Option<&Path>) -> Result<Vec<ConvergenceRow>> {
    let sweep = config.sweep.as_ref().ok_or_else(|| Error::InvalidArgument("config has no [sweep] table".into()))?;
    if sweep.values.len() < 3 {
        return Err(Error::InvalidArgument(format!("a sweep needs at least 3 values, got {}", sweep.values.len())));
    }
    let configs: Vec<RunConfig> = sweep
        .values
        .iter()
        .map(|&v| {
            let mut c = config.clone();
            match sweep.axis {
                SweepAxis::Space => c.operator.n = v as usize,
                SweepAxis::Time => c.dt = v,
            }
            c.snapshot_times.clear();
            c
        })
        .collect();
    let runs: Vec<(Simulation, Vec<f64>, f64)> = configs.par_iter().map(run_final).collect::<Result<_>>()?;

    let errors: Vec<f64> = match sweep.axis {
        SweepAxis::Space => runs
            .iter()
            .map(|(sim, u, t)| {
                let exact = sim.problem.exact_solution(&sim.ops.grid, *t).ok_or_else(|| {
                    Error::InvalidArgument(format!("space sweeps need an exact solution; {} has none", sim.problem.name()))
                })?;
                sim.error_against(u, &exact)
            })
            .collect::<Result<_>>()?,
        SweepAxis::Time => {
            let times: Vec<f64> = runs.iter().map(|r| r.2).collect();
            let dt_min = sweep.values.iter().copied().fold(f64::INFINITY, f64::min);
            let reference_dt = sweep.reference_dt.unwrap_or(dt_min / REFERENCE_REFINEMENT);
            let refs = runs[0].0.reference_states(&times, reference_dt)?;
            runs.iter().zip(&refs).map(|((sim, u, _), r)| sim.error_against(u, r)).collect::<Result<_>>()?
        }
    };
    let h: Vec<f64> = match sweep.axis {
        SweepAxis::Space => runs.iter().map(|r| r.0.ops.grid.dx).collect(),
        SweepAxis::Time => sweep.values.clone(),
    };
    let orders = observed_orders(&h, &errors);
    let rows: Vec<ConvergenceRow> = (0..runs.len())
        .map(|i| ConvergenceRow {
            resolution: sweep.values[i],
            h: h[i],
            final_time: runs[i].2,
            error: errors[i],
            order: orders[i],
        })
        .collect();
    if let Some(dir) = out_dir {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| vec![fmt_f64(r.resolution), fmt_f64(r.h), fmt_f64(r.final_time), fmt_f64(r.error), fmt_f64(r.order)])
            .collect();
        write_table(&dir.join("convergence.csv"), &["resolution", "h", "final_time", "error", "order"], &table)?;
    }
    Ok(rows)
}

/// Error samples and fitted growth rates of one run.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthSeries {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    /// Error of the density `v^2 + w^2`, when the exact density is known.
    pub density_errors: Option<Vec<f64>>,
    /// Log-log slope of `errors`; NaN when the fit failed.
    pub slope: f64,
    pub density_slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub baseline: GrowthSeries,
    pub relaxed: GrowthSeries,
}

fn fit_or_nan(times: &[f64], errors: &[f64], t_floor: f64) -> f64 {
    growth_fit(times, errors, t_floor).unwrap_or_else(|e| {
        log::warn!("{e}");
        f64::NAN
    })
}

/// Error growth with and without relaxation at `config.error_growth.sample_times`.
pub fn cmd_error_growth(config: &RunConfig, out_dir: Option<&Path>) -> Result<GrowthReport> {
    let g = config
        .error_growth
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("config has no [error_growth] table".into()))?;
    let t_end = g.sample_times.iter().copied().fold(0.0, f64::max);
    let relaxed_mode = match config.relaxation.mode {
        RelaxationMode::None => RelaxationMode::QuadraticPreserving,
        m => m,
    };
    let sim = Simulation::new(config)?;
    let u0 = sim.initial_state()?;
    let opts = sim.options(config.dt, t_end, g.sample_times.clone());
    let modes = [RelaxationMode::None, relaxed_mode];
    let records: Vec<RunRecord> = modes
        .par_iter()
        .map(|&mode| {
            let cfg = RelaxationConfig { mode, ..config.relaxation.clone() };
            Ok(sim.integrate_with(&cfg, &u0, &opts)?.1)
        })
        .collect::<Result<_>>()?;

    let all_times: Vec<f64> = records.iter().flat_map(|r| r.snapshots.iter().map(|s| s.t)).collect();
    let refs = sim.reference_states(&all_times, g.reference_dt.unwrap_or(config.dt / REFERENCE_REFINEMENT))?;
    let mut refs = refs.into_iter();
    let mut series = Vec::with_capacity(2);
    for rec in &records {
        let times: Vec<f64> = rec.snapshots.iter().map(|s| s.t).collect();
        let errors: Vec<f64> = rec
            .snapshots
            .iter()
            .map(|s| sim.error_against(&s.state, &refs.next().expect("one reference per snapshot")))
            .collect::<Result<_>>()?;
        let density_errors = match sim.problem.exact_density(&sim.ops.grid, 0.0) {
            Some(_) => Some(
                rec.snapshots
                    .iter()
                    .map(|s| {
                        let rho = sim.problem.exact_density(&sim.ops.grid, s.t).expect("known density");
                        density_l2_error(&sim.ops, &sim.nls_part(&s.state), &rho)
                    })
                    .collect::<Result<Vec<f64>>>()?,
            ),
            None => None,
        };
        let slope = fit_or_nan(&times, &errors, g.fit_from);
        let density_slope = density_errors.as_ref().map(|d| fit_or_nan(&times, d, g.fit_from));
        series.push(GrowthSeries { times, errors, density_errors, slope, density_slope });
    }
    let relaxed = series.pop().expect("two runs");
    let baseline = series.pop().expect("two runs");
    let report = GrowthReport { baseline, relaxed };

    if let Some(dir) = out_dir {
        let header = ["t_baseline", "error_baseline", "density_error_baseline", "t_relaxed", "error_relaxed", "density_error_relaxed"];
        let col = |s: &GrowthSeries, i: usize| {
            [
                s.times.get(i).copied(),
                s.errors.get(i).copied(),
                s.density_errors.as_ref().and_then(|d| d.get(i).copied()),
            ]
            .map(|x| fmt_f64(x.unwrap_or(f64::NAN)))
        };
        let k = report.baseline.times.len().max(report.relaxed.times.len());
        let rows: Vec<Vec<String>> =
            (0..k).map(|i| col(&report.baseline, i).into_iter().chain(col(&report.relaxed, i)).collect()).collect();
        write_table(&dir.join("error_growth.csv"), &header, &rows)?;
        write_json(&dir.join("error_growth.json"), &report)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub problem: String,
    pub operator: OperatorKind,
    pub order: usize,
    pub n: usize,
    pub tableau: String,
    pub dt: f64,
    pub relaxation: RelaxationMode,
    pub wall_seconds: Vec<f64>,
    pub min_wall_seconds: f64,
    /// Rough working-set size: stage vectors plus operator storage.
    pub peak_memory_bytes: usize,
    pub error: f64,
    pub repeats_identical: bool,
}

pub const BENCH_REPEATS: usize = 3;

fn memory_estimate(sim: &Simulation, dim: usize) -> usize {
    let stages = match &sim.method {
        Method::Explicit(t) => t.b.len(),
        Method::Imex(t) => t.stages,
    };
    // stage derivatives (two per IMEX stage), state copies and the operator matrices
    let vectors = dim * (2 * stages + 6);
    let ops = [&sim.ops.d1, &sim.ops.d2, &sim.ops.a2]
        .iter()
        .map(|op| op.as_sparse().map_or(2 * op.dim(), |m| 2 * m.nnz()))
        .sum::<usize>();
    8 * (vectors + ops)
}

/// Runs each configuration [`BENCH_REPEATS`] times; reports the best wall time and the final error.
pub fn cmd_bench(configs: &[RunConfig], out_dir: Option<&Path>) -> Result<Vec<BenchRow>> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("bench needs at least one config".into()));
    }
    let mut rows = Vec::with_capacity(configs.len());
    for c in configs {
        let mut c = c.clone();
        c.snapshot_times.clear();
        let sim = Simulation::new(&c)?;
        let mut walls = Vec::with_capacity(BENCH_REPEATS);
        let mut finals: Vec<(Vec<f64>, f64)> = Vec::with_capacity(BENCH_REPEATS);
        for _ in 0..BENCH_REPEATS {
            let (u, rec) = sim.run()?;
            walls.push(rec.stats.wall_seconds);
            finals.push((u, rec.final_time().unwrap_or(0.0)));
        }
        let repeats_identical = finals.windows(2).all(|w| w[0] == w[1]);
        let (u, t) = &finals[0];
        let reference = sim.reference_states(&[*t], c.dt / REFERENCE_REFINEMENT)?;
        let error = sim.error_against(u, &reference[0])?;
        rows.push(BenchRow {
            problem: c.problem.clone(),
            operator: c.operator.kind,
            order: c.operator.order,
            n: sim.n(),
            tableau: c.tableau.clone(),
            dt: c.dt,
            relaxation: c.relaxation.mode,
            min_wall_seconds: walls.iter().copied().fold(f64::INFINITY, f64::min),
            wall_seconds: walls,
            peak_memory_bytes: memory_estimate(&sim, u.len()),
            error,
            repeats_identical,
        });
    }
    if let Some(dir) = out_dir {
        let header = [
            "problem",
            "operator",
            "order",
            "n",
            "tableau",
            "dt",
            "relaxation",
            "min_wall_seconds",
            "peak_memory_bytes",
            "error",
        ];
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.problem.clone(),
                    r.operator.to_string(),
                    r.order.to_string(),
                    r.n.to_string(),
                    r.tableau.clone(),
                    fmt_f64(r.dt),
                    serde_json::to_value(r.relaxation).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                    fmt_f64(r.min_wall_seconds),
                    r.peak_memory_bytes.to_string(),
                    fmt_f64(r.error),
                ]
            })
            .collect();
        write_table(&dir.join("bench.csv"), &header, &table)?;
    }
    Ok(rows)
}

/// Operator sets checked by `conformance`: every kind and order on small even and odd grids.
pub fn conformance_battery() -> Vec<(OperatorKind, usize, usize)> {
    let mut out = Vec::new();
    for n in [64, 65] {
        out.push((OperatorKind::Fourier, 0, n));
        out.extend([2, 4, 6, 8].map(|o| (OperatorKind::CentralFd, o, n)));
        out.extend([2, 4, 6].map(|o| (OperatorKind::BoundedFdSbp, o, n)));
        out.extend([2, 4, 6].map(|o| (OperatorKind::UpwindFd, o, n)));
    }
    // large enough for the sampled eigenvalue estimate
    out.push((OperatorKind::CentralFd, 4, 600));
    out
}

/// Runs the SBP residual checks on [`conformance_battery`]; writes `conformance.csv` when `out_dir` is given.
pub fn cmd_conformance(tol: f64, seed: u64, out_dir: Option<&Path>) -> Result<Vec<(ConformanceReport, bool)>> {
    let reports: Vec<(ConformanceReport, bool)> = conformance_battery()
        .into_par_iter()
        .map(|(kind, order, n)| {
            let ops = make_operator(kind, order, n, -1.0, 1.0)?;
            let r = sbp_conformance_seeded(&ops, seed);
            let ok = r.passes(tol);
            Ok((r, ok))
        })
        .collect::<Result<_>>()?;
    if let Some(dir) = out_dir {
        let opt = |x: Option<f64>| fmt_f64(x.unwrap_or(f64::NAN));
        let table: Vec<Vec<String>> = reports
            .iter()
            .map(|(r, ok)| {
                vec![
                    r.kind.clone(),
                    r.order.to_string(),
                    r.n.to_string(),
                    fmt_f64(r.sbp1),
                    fmt_f64(r.sbp2),
                    fmt_f64(r.a2_symmetry),
                    fmt_f64(r.a2_min_eigenvalue),
                    fmt_f64(r.dtilde),
                    opt(r.upwind),
                    opt(r.upwind_symmetry),
                    fmt_f64(r.consistency),
                    ok.to_string(),
                ]
            })
            .collect();
        let header = [
            "kind",
            "order",
            "n",
            "sbp1",
            "sbp2",
            "a2_symmetry",
            "a2_min_eigenvalue",
            "dtilde",
            "upwind",
            "upwind_symmetry",
            "consistency",
            "pass",
        ];
        write_table(&dir.join("conformance.csv"), &header, &table)?;
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::SweepConfig;

    fn one_soliton(n: usize, dt: f64, t_end: f64) -> RunConfig {
        RunConfig::from_toml_str(&format!(
            "problem = \"one_soliton\"\ntableau = \"kc5\"\ndt = {dt}\nt_end = {t_end}\n[operator]\nkind = \"fourier\"\nn = {n}\n"
        ))
        .unwrap()
    }

    #[test]
    fn observed_order_of_exact_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h * h).collect();
        let p = observed_orders(&h, &e);
        assert!(p[0].is_nan());
        assert!((p[1] - 3.0).abs() < 1e-12 && (p[2] - 3.0).abs() < 1e-12);
        // identical resolutions leave the order undefined
        assert!(observed_orders(&[0.1, 0.1], &[1.0, 1.0])[1].is_nan());
    }

    #[test]
    fn short_sweeps_are_rejected() {
        let mut c = one_soliton(64, 0.01, 0.1);
        c.sweep = Some(SweepConfig { axis: SweepAxis::Time, values: vec![0.01, 0.005], reference_dt: None });
        assert!(matches!(cmd_converge(&c, None), Err(Error::InvalidArgument(_))));
        c.sweep = None;
        assert!(cmd_converge(&c, None).is_err());
    }

    #[test]
    fn identical_sweep_values_give_identical_rows() {
        let mut c = one_soliton(128, 0.02, 0.1);
        c.sweep = Some(SweepConfig { axis: SweepAxis::Time, values: vec![0.02; 3], reference_dt: None });
        let rows = cmd_converge(&c, None).unwrap();
        assert_eq!(rows[0].error, rows[1].error);
        assert_eq!(rows[1].error, rows[2].error);
        assert!(rows.iter().all(|r| r.order.is_nan()));
    }

    #[test]
    fn space_sweep_requires_exact_solution() {
        let mut c = one_soliton(64, 0.01, 0.05);
        c.problem = "two_soliton".into();
        c.sweep = Some(SweepConfig { axis: SweepAxis::Space, values: vec![32.0, 64.0, 128.0], reference_dt: None });
        assert!(matches!(cmd_converge(&c, None), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn run_writes_files_and_reports_failure() {
        let dir = tempfile::tempdir().unwrap();
        let c = one_soliton(512, 0.01, 0.05);
        let s = cmd_run(&c, dir.path()).unwrap();
        assert!(s.error.unwrap() < 1e-6);
        assert!(dir.path().join("invariants.csv").exists());
        assert!(dir.path().join("metadata.json").exists());
        assert!(!dir.path().join("snapshots.csv").exists());

        // explicit RK4 on a stiff Fourier discretization blows up
        let mut bad = one_soliton(512, 0.5, 20.0);
        bad.tableau = "rk4".into();
        let dir2 = tempfile::tempdir().unwrap();
        let err = cmd_run(&bad, dir2.path()).unwrap_err();
        assert!(matches!(err, Error::NumericFailure(_)), "{err}");
        let meta = std::fs::read_to_string(dir2.path().join("metadata.json")).unwrap();
        assert!(meta.contains("failed"));
    }

    #[test]
    fn conformance_battery_passes() {
        let dir = tempfile::tempdir().unwrap();
        let reports = cmd_conformance(1e-12, 7, Some(dir.path())).unwrap();
        for (r, ok) in &reports {
            assert!(ok, "{} order {} n {}: {:?}", r.kind, r.order, r.n, r);
        }
        let csv = std::fs::read_to_string(dir.path().join("conformance.csv")).unwrap();
        assert_eq!(csv.lines().count(), reports.len() + 1);
    }

    #[test]
    fn bench_is_deterministic() {
        let rows = cmd_bench(&[one_soliton(512, 0.01, 0.05)], None).unwrap();
        assert_eq!(rows[0].wall_seconds.len(), BENCH_REPEATS);
        assert!(rows[0].repeats_identical);
        assert!(rows[0].error < 1e-6);
        assert!(cmd_bench(&[], None).is_err());
    }
}
