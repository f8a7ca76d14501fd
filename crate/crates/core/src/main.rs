use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dagp::harness::{
    build_setup, certify, emit_plots, parse_config, run_experiment, solve_reference, ExperimentConfig, HarnessError,
};

/// Decentralized constrained optimization experiments over directed graphs.
#[derive(Parser)]
#[command(name = "dagp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm and write CSV traces, metadata and plots.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Instance seed (overrides `instance_seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Iteration budget (overrides `iterations`).
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Check the gossip kernel conditions and scan the eigenvalue condition.
    Certify { config: PathBuf },
    /// Solve the centralized reference problem only.
    SolveRef { config: PathBuf },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_ABORT: u8 = 2;
const EXIT_IO: u8 = 3;

fn exit_code(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Io { .. } => EXIT_IO,
        HarnessError::Run(_) | HarnessError::Algorithm(dagp::algorithms::AlgorithmError::NonFinite { .. }) => {
            EXIT_ABORT
        }
        _ => EXIT_CONFIG,
    }
}

fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes")
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn dispatch(command: Command) -> Result<u8, HarnessError> {
    match command {
        Command::Run {
            config,
            out,
            seed,
            iters,
        } => {
            let mut cfg = load(&config)?;
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(seed) = seed {
                cfg.instance_seed = seed;
            }
            if let Some(iters) = iters {
                cfg.iterations = iters;
            }
            cfg.validate()?;
            let outcome = run_experiment(&cfg)?;
            emit_plots(&outcome.traces, &cfg.output_dir)?;
            println!("reference f* = {:.12e}", outcome.reference.f_star);
            for (name, trace) in &outcome.traces {
                if let Some(last) = trace.last() {
                    println!(
                        "{name}: n={} objective={:.6e} feasibility_gap={:.3e} consensus_error={:.3e} optimality_gap={:.3e}",
                        last.n, last.objective, last.feasibility_gap, last.consensus_error, last.optimality_gap
                    );
                }
            }
            println!("outputs written to {}", cfg.output_dir.display());
            if outcome.aborted.is_empty() {
                Ok(0)
            } else {
                for (name, trace) in &outcome.traces {
                    if let Some(abort) = &trace.metadata.abort {
                        eprintln!("{name}: aborted in round {}: {}", abort.round, abort.message);
                    }
                }
                Ok(EXIT_ABORT)
            }
        }
        Command::Certify { config } => {
            let cfg = load(&config)?;
            let outcome = certify(&cfg)?;
            println!("kernel report:\n{}", json(&outcome.kernel_report));
            for (c, report) in &outcome.scans {
                println!(
                    "C = {c}: {} points, {} singular, min |eig - 1| = {:.6e}, margin {:.1e}: {}",
                    report.points.len(),
                    report.singular_count,
                    report.min_distance,
                    report.margin,
                    if report.pass { "pass" } else { "fail" }
                );
            }
            let dir = &cfg.output_dir;
            fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
                path: dir.clone(),
                source,
            })?;
            for (k, (_, report)) in outcome.scans.iter().enumerate() {
                let path = dir.join(format!("assumption5_c{k}.csv"));
                fs::write(&path, report.to_csv()).map_err(|source| HarnessError::Io { path, source })?;
            }
            let path = dir.join("certify.json");
            fs::write(&path, json(&outcome)).map_err(|source| HarnessError::Io { path, source })?;
            println!("reports written to {}", dir.display());
            Ok(0)
        }
        Command::SolveRef { config } => {
            let cfg = load(&config)?;
            let setup = build_setup(&cfg)?;
            let solution = solve_reference(&cfg, &setup.instance)?;
            println!("{}", json(&solution));
            Ok(0)
        }
    }
}
