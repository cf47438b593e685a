use clap::{Parser, Subcommand};
use nls_relax::experiments::{
    cmd_bench, cmd_conformance, cmd_converge, cmd_error_growth, cmd_run, output::fmt_f64, RunConfig,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Mass- and energy-conserving NLS experiments driven by TOML configs.
#[derive(Parser, Debug)]
#[command(name = "nls-relax", version)]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0x5b9)]
    seed: u64,

    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Base directory for outputs when neither --output nor the config sets one.
    #[arg(long, global = true, env = "NLS_RELAX_OUTPUT_DIR", default_value = "output")]
    output_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convergence sweep described by the config's [sweep] table.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Error growth with and without relaxation ([error_growth] table).
    ErrorGrowth {
        #[arg(long)]
        config: PathBuf,
    },
    /// Best-of-three timings and final errors.
    Bench {
        #[arg(long, required = true, num_args = 1..)]
        config: Vec<PathBuf>,
    },
    /// SBP identity checks for every operator family.
    Conformance {
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

fn out_dir(cli: &Cli, config: Option<(&Path, &RunConfig)>) -> PathBuf {
    if let Some(dir) = &cli.output {
        return dir.clone();
    }
    match config {
        Some((_, c)) if !c.output.as_os_str().is_empty() => c.output.clone(),
        Some((path, _)) => cli.output_root.join(path.file_stem().unwrap_or_default()),
        None => cli.output_root.clone(),
    }
}

fn execute(cli: &Cli) -> nls_relax::Result<bool> {
    match &cli.command {
        Command::Run { config } => {
            let cfg = RunConfig::from_file(config)?;
            let dir = out_dir(cli, Some((config, &cfg)));
            let s = cmd_run(&cfg, &dir)?;
            println!(
                "t = {}  steps = {}  |dM| = {:.3e}  |dE| = {:.3e}{}",
                fmt_f64(s.final_time),
                s.stats.steps,
                s.mass_drift,
                s.energy_drift,
                s.error.map_or(String::new(), |e| format!("  error = {e:.3e}"))
            );
            println!("wrote {}", dir.display());
            Ok(true)
        }
        Command::Converge { config } => {
            let cfg = RunConfig::from_file(config)?;
            let dir = out_dir(cli, Some((config, &cfg)));
            let rows = cmd_converge(&cfg, Some(&dir))?;
            println!("{:>14} {:>14} {:>8}", "resolution", "error", "order");
            for r in rows {
                println!("{:>14.6e} {:>14.6e} {:>8.3}", r.resolution, r.error, r.order);
            }
            println!("wrote {}", dir.join("convergence.csv").display());
            Ok(true)
        }
        Command::ErrorGrowth { config } => {
            let cfg = RunConfig::from_file(config)?;
            let dir = out_dir(cli, Some((config, &cfg)));
            let r = cmd_error_growth(&cfg, Some(&dir))?;
            println!("growth slope: baseline {:.3}, relaxed {:.3}", r.baseline.slope, r.relaxed.slope);
            if let (Some(b), Some(x)) = (r.baseline.density_slope, r.relaxed.density_slope) {
                println!("density error slope: baseline {b:.3}, relaxed {x:.3}");
            }
            println!("wrote {}", dir.join("error_growth.csv").display());
            Ok(true)
        }
        Command::Bench { config } => {
            let cfgs = config.iter().map(|p| RunConfig::from_file(p)).collect::<nls_relax::Result<Vec<_>>>()?;
            let dir = out_dir(cli, None);
            let rows = cmd_bench(&cfgs, Some(&dir))?;
            for r in rows {
                println!(
                    "{} {} n={} {} dt={}: {:.4} s, error {:.3e}",
                    r.problem, r.operator, r.n, r.tableau, r.dt, r.min_wall_seconds, r.error
                );
            }
            println!("wrote {}", dir.join("bench.csv").display());
            Ok(true)
        }
        Command::Conformance { tol } => {
            let dir = out_dir(cli, None);
            let reports = cmd_conformance(*tol, cli.seed, Some(&dir))?;
            let mut all = true;
            for (r, ok) in &reports {
                all &= ok;
                println!("{} {} order {} n {}: max residual {:.2e}", if *ok { "ok  " } else { "FAIL" }, r.kind, r.order, r.n, r.max_residual());
            }
            println!("wrote {}", dir.join("conformance.csv").display());
            Ok(all)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not configure {n} threads: {e}");
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
