use branchsolve::config::{Command as RunCommand, RunConfig};
use branchsolve::run::run;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "branchsolve",
    about = "q-valued elliptic Dirichlet solver and diagnostics on the cylinder"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (defaults to the config's `out_dir` or `.`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (fallback: env BRANCHSOLVE_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Random seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Solve the linear Dirichlet problem by the mode pipeline.
    SolvePoisson(CommonArgs),
    /// Run the small-data fixed-point iteration for a quasilinear system.
    SolveNonlinear(CommonArgs),
    /// Compute decay/frequency/branch/Cauchy diagnostics of a field file.
    Diagnose(CommonArgs),
    /// Write the data files of a named example problem.
    GenExample(CommonArgs),
    /// Compare the mode pipeline against the direct FD reference solver.
    CrossCheck(CommonArgs),
}

fn main() {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        CliCommand::SolvePoisson(a) => (RunCommand::SolvePoisson, a),
        CliCommand::SolveNonlinear(a) => (RunCommand::SolveNonlinear, a),
        CliCommand::Diagnose(a) => (RunCommand::Diagnose, a),
        CliCommand::GenExample(a) => (RunCommand::GenExample, a),
        CliCommand::CrossCheck(a) => (RunCommand::CrossCheck, a),
    };
    let mut cfg = match RunConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(4);
        }
    };
    if let Some(conf_cmd) = cfg.command {
        if conf_cmd != cmd {
            eprintln!(
                "config specifies command '{}', CLI asked for '{}'",
                conf_cmd.name(),
                cmd.name()
            );
            std::process::exit(4);
        }
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let threads = args
        .threads
        .or_else(|| {
            std::env::var("BRANCHSOLVE_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .or(cfg.threads);
    let out_dir = args
        .out
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let code = match threads {
        Some(t) => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("cannot build thread pool: {e}");
                    std::process::exit(4);
                }
            };
            pool.install(|| run(cmd, &cfg, &out_dir))
        }
        None => run(cmd, &cfg, &out_dir),
    };
    std::process::exit(code);
}
