use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rial_cli::{run_experiment, ArmSelection, CliError, ExperimentConfig};
use rial_core::{
    build_nonlinear_test, build_sparse_cca, build_sparse_pca, generate_cca_data, generate_pca_data,
    predict_outer_iterations, rial_solve, CcaInstance, CompositeProblem, DualMode, OuterConfig,
    PcaInstance, RunStatus,
};

const OUT_ENV: &str = "RIAL_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "rial",
    version,
    about = "Riemannian inexact augmented Lagrangian experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid from a JSON config.
    Run {
        config: PathBuf,
        /// Replace the config's seed list with this single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; falls back to the config, then $RIAL_OUT_DIR, then ./results.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        arm: Option<ArmSelection>,
        /// Parallel cells (0 = all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Solve small built-in instances with invariant checking on.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Predicted outer-iteration count for the geometric schedule.
    Predict {
        /// Lipschitz constant of h.
        #[arg(long)]
        lh: f64,
        #[arg(long, default_value_t = 1.5)]
        sigma1: f64,
        #[arg(long, default_value_t = 1.5)]
        eps1: f64,
        #[arg(long, default_value_t = 1.5)]
        b: f64,
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            arm,
            workers,
        } => run(config, seed, out, arm, workers),
        Command::Check { seed } => check(seed),
        Command::Predict {
            lh,
            sigma1,
            eps1,
            b,
            eps,
        } => match predict_outer_iterations(lh, sigma1, eps1, b, eps) {
            Ok(k) => {
                println!("{k}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}

fn run(
    path: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    arm: Option<ArmSelection>,
    workers: Option<usize>,
) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    if let Some(a) = arm {
        cfg.arms = a;
    }
    if workers.is_some() {
        cfg.workers = workers;
    }
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));

    match run_experiment(&cfg, &out) {
        Ok(summary) => {
            for row in &summary.rows {
                println!(
                    "{:<10} {:<16} mu={:<6} r={:<3} -phi={:<12.6} outer={:<7.2} total={:<9.1} converged={}/{}",
                    row.arm.name(),
                    row.key.dims.label(),
                    row.key.mu,
                    row.key.r,
                    row.neg_phi,
                    row.outer,
                    row.total,
                    row.converged,
                    row.runs
                );
            }
            let failures = summary.failures();
            println!("wrote {}", out.join("aggregate.csv").display());
            if failures > 0 {
                eprintln!(
                    "{failures} of {} runs failed; see timing.csv",
                    summary.cells.len()
                );
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ CliError::Config(_)) | Err(e @ CliError::Io { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn check(seed: u64) -> ExitCode {
    let builtins: Vec<(&str, rial_core::Result<CompositeProblem>)> = vec![
        (
            "pca d=60 n=30 r=3 mu=0.5",
            PcaInstance::new(generate_pca_data(60, 30, seed), 0.5, 3)
                .and_then(|i| build_sparse_pca(&i)),
        ),
        ("cca d=100 p=q=10 r=2 mu=0.05", {
            let (a, b) = generate_cca_data(100, 10, 10, seed);
            CcaInstance::new(a, b, 0.05, 0.05, 2).and_then(|i| build_sparse_cca(&i))
        }),
        ("nonlinear p=12 r=3", build_nonlinear_test(12, 3, seed)),
    ];
    let mut ok = true;
    for (name, problem) in builtins {
        for mode in [DualMode::Classical, DualMode::Damped] {
            let cfg = OuterConfig {
                seed,
                dual_mode: mode,
                check_invariants: true,
                ..OuterConfig::default()
            };
            let result = match &problem {
                Ok(p) => rial_solve(p, &cfg).map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            };
            match result {
                Ok(run) => {
                    let pass = run.status == RunStatus::Converged && run.violations.is_empty();
                    ok &= pass;
                    println!(
                        "{} {name} [{mode:?}]: {} outer, {} inner, {} violations",
                        if pass { "PASS" } else { "FAIL" },
                        run.outer_iterations(),
                        run.total_inner_iterations(),
                        run.violations.len()
                    );
                    for v in run.violations.iter().take(5) {
                        println!("    {v}");
                    }
                }
                Err(e) => {
                    ok = false;
                    println!("FAIL {name} [{mode:?}]: {e}");
                }
            }
        }
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
