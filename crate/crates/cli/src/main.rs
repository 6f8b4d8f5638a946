//! Command line runner. Exit codes: 0 all selected checks passed, 1 invalid
//! configuration or usage, 2 numerical failure, 3 a check ran and failed.

mod config;
mod emit;
mod experiments;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;

use clap::{Parser, Subcommand};

use config::{resolve, Experiment, RunConfig};
use experiments::{build_summary, write_summary, Runner};

#[derive(Parser)]
#[command(
    name = "minorspec",
    version,
    about = "Sampling and verification runner for dimension-coupled Hermitian minor ensembles"
)]
struct Cli {
    /// JSON run configuration; every field has a default.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,
    /// Worker threads; 0 uses the machine default.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// 0 silent, 1 verdict lines, 2 adds progress and decomposition defects
    /// on stderr, 3 adds the resolved parameters.
    #[arg(long, global = true, default_value_t = 1,
          value_parser = clap::value_parser!(u8).range(..=3))]
    verbosity: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write one sampled Hermitian minor as text.
    Sample,
    /// Spectral counting and projection measures against their limits.
    Converge,
    /// Centered operator norm over n against the closed-form bound.
    Norm,
    /// Norm of the small-point plus Gaussian part after an epsilon split.
    Split,
    /// Monte Carlo norm moments against the exact rising factorial.
    Moments,
    /// Squared Haar column entries against the Beta(1, n-1) law.
    Beta,
    /// Invert one minor back to parameter estimates.
    Estimate,
    /// Cayley transform unitarity, eigenvalue correspondence, round trip.
    Cayley,
    /// Every experiment selected in the config, in config order.
    All,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            exit(code);
        }
    };
    exit(run(cli));
}

fn fail(code: i32, msg: &str) -> i32 {
    eprintln!("error: {msg}");
    code
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, String> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn run(cli: Cli) -> i32 {
    let mut config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(m) => return fail(1, &m),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let resolved = match resolve(&config) {
        Ok(r) => r,
        Err(m) => return fail(1, &m),
    };
    if cli.verbosity >= 3 {
        eprintln!("resolved params: {:?}", resolved.params);
        eprintln!("n_grid {:?}, pairs (0-based) {:?}", resolved.n_grid, resolved.pairs);
    }

    if cli.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
        if let Err(e) = pool {
            return fail(1, &format!("thread pool: {e}"));
        }
    }

    let (name, selected): (&str, Option<Vec<Experiment>>) = match cli.command {
        Command::Sample => ("sample", None),
        Command::Converge => ("converge", Some(vec![Experiment::Converge])),
        Command::Norm => ("norm", Some(vec![Experiment::Norm])),
        Command::Split => ("split", Some(vec![Experiment::Split])),
        Command::Moments => ("moments", Some(vec![Experiment::Moments])),
        Command::Beta => ("beta", Some(vec![Experiment::Beta])),
        Command::Estimate => ("estimate", Some(vec![Experiment::Estimate])),
        Command::Cayley => ("cayley", Some(vec![Experiment::Cayley])),
        Command::All => {
            if resolved.experiments.is_empty() {
                return fail(1, "config selects no experiments");
            }
            ("all", Some(resolved.experiments.clone()))
        }
    };

    if let Err(e) = fs::create_dir_all(&cli.out) {
        return fail(1, &format!("cannot create {}: {e}", cli.out.display()));
    }

    let runner = Runner {
        resolved: &resolved,
        out_dir: &cli.out,
        verbosity: cli.verbosity,
    };
    let outcomes = match &selected {
        None => runner.sample().map(|o| vec![o]),
        Some(list) => runner.run(list),
    };
    let outcomes = match outcomes {
        Ok(o) => o,
        Err(f) => return fail(f.exit_code(), f.message()),
    };

    let summary = build_summary(&resolved, name, cli.threads, outcomes);
    if let Err(f) = write_summary(&summary, &cli.out.join("summary.json")) {
        return fail(f.exit_code(), f.message());
    }
    if cli.verbosity >= 1 {
        for e in &summary.experiments {
            println!(
                "{}: {} ({}/{} checks)",
                e.name,
                if e.pass { "pass" } else { "FAIL" },
                e.checks_passed,
                e.checks_total
            );
        }
        println!("summary: {}", cli.out.join("summary.json").display());
    }
    if summary.all_pass {
        0
    } else {
        3
    }
}
