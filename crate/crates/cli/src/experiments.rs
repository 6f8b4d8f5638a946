//! Experiment runners behind the subcommands. Replicas fan out over rayon;
//! every collection preserves replica order, so output bytes do not depend
//! on the thread count.

use std::fs::File;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use minorspec::cayley::{cayley, correspondence_defect, inverse_cayley, UNITARITY_TOL_PER_N};
use minorspec::diagnostics::{
    beta_tail_test, estimate_params, median, moment_mc_check, norm_check, plan_convergence,
    run_replica, split_experiment, BetaTailReport, ConvergenceReport, DiagnosticsError,
    MomentCheck, NormPoint, SplitReport,
};
use minorspec::sampler::{replica_seed, CoupledSample};
use minorspec::spectral::eig_hermitian;

use crate::config::{Experiment, Resolved};
use crate::emit::{
    fmt, write_beta_csv, write_cayley_csv, write_converge_csv, write_estimate_csv,
    write_moments_csv, write_norm_csv, write_plotdata_csv, write_split_csv, CayleyRow,
};

pub const CAYLEY_CORRESPONDENCE_TOL: f64 = 1e-8;
pub const CAYLEY_ROUNDTRIP_REL_TOL: f64 = 1e-8;

/// Seed-stream offsets keeping per-experiment draws disjoint from the
/// replica streams 0..replicas used by converge, norm, split, cayley.
const STREAM_MOMENT: u64 = 1 << 32;
const STREAM_BETA: u64 = 2 << 32;

#[derive(Debug)]
pub enum RunFailure {
    /// Invalid configuration or usage.
    Config(String),
    /// A decomposition or solve did not converge.
    Numerical(String),
    /// Could not write an output file.
    Io(String),
}

impl RunFailure {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunFailure::Config(_) | RunFailure::Io(_) => 1,
            RunFailure::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunFailure::Config(m) | RunFailure::Numerical(m) | RunFailure::Io(m) => m,
        }
    }
}

fn map_diag(e: DiagnosticsError) -> RunFailure {
    match e {
        DiagnosticsError::Spectral(_) => RunFailure::Numerical(e.to_string()),
        _ => RunFailure::Config(e.to_string()),
    }
}

fn map_io(e: std::io::Error) -> RunFailure {
    RunFailure::Io(e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutcome {
    pub name: String,
    pub pass: bool,
    pub checks_passed: u64,
    pub checks_total: u64,
    pub files: Vec<String>,
    pub notes: Vec<String>,
}

impl ExperimentOutcome {
    fn new(name: &str) -> Self {
        ExperimentOutcome {
            name: name.into(),
            pass: true,
            checks_passed: 0,
            checks_total: 0,
            files: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool) {
        self.checks_total += 1;
        if ok {
            self.checks_passed += 1;
        } else {
            self.pass = false;
        }
    }
}

pub struct Runner<'a> {
    pub resolved: &'a Resolved,
    pub out_dir: &'a Path,
    pub verbosity: u8,
}

impl Runner<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn run(&self, experiments: &[Experiment]) -> Result<Vec<ExperimentOutcome>, RunFailure> {
        experiments
            .iter()
            .map(|&e| {
                if self.verbosity >= 2 {
                    eprintln!("running {}", e.name());
                }
                match e {
                    Experiment::Converge => self.converge(),
                    Experiment::Norm => self.norm(),
                    Experiment::Split => self.split(),
                    Experiment::Moments => self.moments(),
                    Experiment::Beta => self.beta(),
                    Experiment::Estimate => self.estimate(),
                    Experiment::Cayley => self.cayley(),
                }
            })
            .collect()
    }

    /// Writes one minor as plain text; no checks.
    pub fn sample(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        let sample = CoupledSample::new(r.params.clone(), r.seed);
        let minor = sample.minor(r.sample_n);
        let path = self.path("minor.txt");
        let mut file = File::create(&path).map_err(map_io)?;
        minor.write_text(&mut file).map_err(map_io)?;
        let mut out = ExperimentOutcome::new("sample");
        out.files.push("minor.txt".into());
        out.notes
            .push(format!("n = {}, seed = {}", r.sample_n, r.seed));
        Ok(out)
    }

    fn converge(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        let plan = plan_convergence(
            r.params.clone(),
            r.seed,
            r.n_grid.clone(),
            r.intervals.clone(),
            r.pairs.clone(),
            r.clearance,
            r.replicas,
        )
        .map_err(map_diag)?;
        let traces = (0..r.replicas)
            .into_par_iter()
            .map(|k| run_replica(&plan, k))
            .collect::<Result<Vec<_>, _>>()
            .map_err(map_diag)?;
        let report = ConvergenceReport::assemble(&plan, traces);
        self.report_defects(&report);

        let mut out = ExperimentOutcome::new("converge");
        out.files.push("converge.csv".into());
        write_converge_csv(&report, &self.path("converge.csv")).map_err(map_io)?;
        if !report.cells.is_empty() {
            out.files.push("plotdata.csv".into());
            write_plotdata_csv(&report, &self.path("plotdata.csv")).map_err(map_io)?;
        }

        let grid = &report.n_grid;
        if !report.intervals.is_empty() {
            let top_two: Vec<usize> = grid.iter().rev().take(2).copied().collect();
            let exact = (0..r.replicas)
                .filter(|&k| {
                    report
                        .cells
                        .iter()
                        .filter(|c| c.replica == k && top_two.contains(&c.n))
                        .all(|c| c.abs_err_lambda == 0.0)
                })
                .count();
            let frac = exact as f64 / r.replicas as f64;
            out.check(frac >= r.converge_pass_fraction);
            out.notes.push(format!(
                "counting exact at n in {top_two:?}: {exact}/{} replicas",
                r.replicas
            ));
        }
        let (&n_first, &n_last) = match (grid.first(), grid.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => unreachable!("plan guarantees a nonempty grid"),
        };
        for iv in &report.intervals {
            for &(a, b) in &report.pairs {
                let last = median(&report.slot_values(n_last, iv, Some((a, b)), |c| c.abs_err_sigma));
                out.check(last <= r.converge_sigma_err_max);
                if r.converge_require_median_decrease && grid.len() >= 2 {
                    let first =
                        median(&report.slot_values(n_first, iv, Some((a, b)), |c| c.abs_err_sigma));
                    out.check(last < first);
                    out.notes.push(format!(
                        "pair ({}, {}) on [{}, {}]: median sigma err {} -> {}",
                        a + 1,
                        b + 1,
                        iv.lo,
                        iv.hi,
                        fmt(first),
                        fmt(last)
                    ));
                }
            }
        }
        Ok(out)
    }

    fn report_defects(&self, report: &ConvergenceReport) {
        if self.verbosity < 2 {
            return;
        }
        for c in &report.norms {
            eprintln!(
                "replica {} n {}: residual defect {}, orthogonality defect {}",
                c.replica,
                c.n,
                fmt(c.residual_defect),
                fmt(c.orth_defect)
            );
        }
    }

    /// Bound checks along the whole grid are recorded, but the verdict is
    /// taken at the largest dimension only: the bound is asymptotic and
    /// finite-size excess at small n is expected.
    fn norm(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        let per_replica = (0..r.replicas)
            .into_par_iter()
            .map(|k| {
                let sample = CoupledSample::new(r.params.clone(), replica_seed(r.seed, k));
                norm_check(&sample, &r.n_grid, r.norm_slack).map(|pts| (k, pts))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(map_diag)?;
        let rows: Vec<(u64, NormPoint)> = per_replica
            .iter()
            .flat_map(|(k, pts)| pts.iter().map(move |p| (*k, *p)))
            .collect();
        if self.verbosity >= 2 {
            for (k, p) in &rows {
                eprintln!(
                    "replica {k} n {}: residual defect {}, orthogonality defect {}",
                    p.n,
                    fmt(p.residual_defect),
                    fmt(p.orth_defect)
                );
            }
        }
        let mut out = ExperimentOutcome::new("norm");
        out.files.push("norm.csv".into());
        write_norm_csv(&rows, &self.path("norm.csv")).map_err(map_io)?;
        let n_last = *r.n_grid.iter().max().unwrap();
        let mut held = 0u64;
        for (_, p) in rows.iter().filter(|(_, p)| p.n == n_last) {
            out.check(p.pass);
            if p.pass {
                held += 1;
            }
        }
        out.notes.push(format!(
            "bound held at n = {n_last} in {held}/{} replicas",
            r.replicas
        ));
        Ok(out)
    }

    fn split(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        let rows = (0..r.replicas)
            .into_par_iter()
            .map(|k| {
                split_experiment(
                    &r.params,
                    r.split_epsilon,
                    replica_seed(r.seed, k),
                    r.split_n,
                    r.split_slack,
                )
                .map(|rep| (k, rep))
            })
            .collect::<Result<Vec<(u64, SplitReport)>, _>>()
            .map_err(map_diag)?;
        let mut out = ExperimentOutcome::new("split");
        out.files.push("split.csv".into());
        write_split_csv(&rows, &self.path("split.csv")).map_err(map_io)?;
        for (_, rep) in &rows {
            out.check(rep.pass);
        }
        out.notes.push(format!(
            "epsilon = {}, n = {}: {}/{} under bound",
            r.split_epsilon, r.split_n, out.checks_passed, out.checks_total
        ));
        Ok(out)
    }

    fn moments(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        if r.moment_replicas < 100 {
            return Err(RunFailure::Config(format!(
                "moment_replicas = {} is below the minimum of 100",
                r.moment_replicas
            )));
        }
        if r.moment_ns.iter().any(|&n| n == 0) || r.moment_rs.iter().any(|&k| k == 0) {
            return Err(RunFailure::Config(
                "moment_ns and moment_rs entries must be >= 1".into(),
            ));
        }
        let cells: Vec<(usize, u32)> = r
            .moment_ns
            .iter()
            .flat_map(|&n| r.moment_rs.iter().map(move |&k| (n, k)))
            .collect();
        let checks: Vec<MomentCheck> = cells
            .par_iter()
            .enumerate()
            .map(|(i, &(n, rr))| {
                moment_mc_check(
                    n,
                    rr,
                    r.moment_replicas,
                    replica_seed(r.seed, STREAM_MOMENT + i as u64),
                )
            })
            .collect();
        let mut out = ExperimentOutcome::new("moments");
        out.files.push("moments.csv".into());
        write_moments_csv(&checks, &self.path("moments.csv")).map_err(map_io)?;
        let mut worst = 0.0f64;
        for c in &checks {
            out.check(c.z.abs() <= r.moment_z_bound);
            worst = worst.max(c.z.abs());
        }
        out.notes.push(format!(
            "worst |z| = {} over {} cells at {} replicas",
            fmt(worst),
            checks.len(),
            r.moment_replicas
        ));
        Ok(out)
    }

    fn beta(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        let reports = r
            .beta_ns
            .par_iter()
            .enumerate()
            .map(|(i, &n)| {
                beta_tail_test(n, r.beta_draws, replica_seed(r.seed, STREAM_BETA + i as u64))
            })
            .collect::<Result<Vec<BetaTailReport>, _>>()
            .map_err(map_diag)?;
        let mut out = ExperimentOutcome::new("beta");
        out.files.push("beta.csv".into());
        write_beta_csv(&reports, &self.path("beta.csv")).map_err(map_io)?;
        for rep in &reports {
            out.check(rep.pass);
            out.notes.push(format!(
                "n = {}: KS {} vs threshold {}",
                rep.n,
                fmt(rep.ks),
                fmt(rep.threshold)
            ));
        }
        Ok(out)
    }

    /// Informational: no oracle check, the estimates themselves are the
    /// product. Always passes unless the inversion cannot run.
    fn estimate(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        let sample = CoupledSample::new(r.params.clone(), r.seed);
        let est =
            estimate_params(&sample, r.estimate_n, r.estimate_threshold).map_err(map_diag)?;
        let mut out = ExperimentOutcome::new("estimate");
        out.files.push("estimate.csv".into());
        write_estimate_csv(&est, &self.path("estimate.csv")).map_err(map_io)?;
        out.notes.push(format!(
            "gamma1 = {}, gamma2 = {}, {} points above threshold {}",
            fmt(est.gamma1),
            fmt(est.gamma2),
            est.points.len(),
            r.estimate_threshold
        ));
        Ok(out)
    }

    fn cayley(&self) -> Result<ExperimentOutcome, RunFailure> {
        let r = self.resolved;
        let n = r.cayley_n;
        if n == 0 {
            return Err(RunFailure::Config("cayley_n must be positive".into()));
        }
        let rows = (0..r.cayley_replicas)
            .into_par_iter()
            .map(|k| -> Result<CayleyRow, RunFailure> {
                let sample = CoupledSample::new(r.params.clone(), replica_seed(r.seed, k));
                let minor = sample.minor(n);
                let dec = eig_hermitian(&minor)
                    .map_err(|e| RunFailure::Numerical(e.to_string()))?;
                let u = cayley(&minor).map_err(|e| RunFailure::Numerical(e.to_string()))?;
                let back =
                    inverse_cayley(&u).map_err(|e| RunFailure::Numerical(e.to_string()))?;
                let unitarity_defect = u.unitarity_defect();
                let corr = correspondence_defect(&dec, &u);
                let roundtrip_rel_err =
                    (minor.entries() - back.entries()).norm() / minor.frobenius().max(1.0);
                let pass = unitarity_defect <= UNITARITY_TOL_PER_N * n as f64
                    && corr <= CAYLEY_CORRESPONDENCE_TOL
                    && roundtrip_rel_err <= CAYLEY_ROUNDTRIP_REL_TOL;
                Ok(CayleyRow {
                    replica: k,
                    n,
                    unitarity_defect,
                    correspondence_defect: corr,
                    roundtrip_rel_err,
                    pass,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = ExperimentOutcome::new("cayley");
        out.files.push("cayley.csv".into());
        write_cayley_csv(&rows, &self.path("cayley.csv")).map_err(map_io)?;
        for row in &rows {
            out.check(row.pass);
        }
        out.notes.push(format!(
            "n = {n}: {}/{} transforms within tolerance",
            out.checks_passed, out.checks_total
        ));
        Ok(out)
    }
}

/// Written last, after every experiment file is on disk.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub params: minorspec::params::RawParams,
    pub n_grid: Vec<usize>,
    pub intervals: Vec<minorspec::spectral::Interval>,
    /// 1-based, matching the config convention.
    pub pairs: Vec<(usize, usize)>,
    pub replicas: u64,
    pub clearance: Option<f64>,
    pub experiments: Vec<ExperimentOutcome>,
    pub all_pass: bool,
    pub generated_unix_ms: u128,
}

pub fn write_summary(summary: &Summary, path: &Path) -> Result<(), RunFailure> {
    let mut text = serde_json::to_string_pretty(summary)
        .map_err(|e| RunFailure::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(map_io)
}

pub fn build_summary(
    resolved: &Resolved,
    command: &str,
    threads: usize,
    experiments: Vec<ExperimentOutcome>,
) -> Summary {
    let all_pass = experiments.iter().all(|e| e.pass);
    Summary {
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        seed: resolved.seed,
        threads,
        params: resolved.params.to_raw(),
        n_grid: resolved.n_grid.clone(),
        intervals: resolved.intervals.clone(),
        pairs: resolved.pairs.iter().map(|&(a, b)| (a + 1, b + 1)).collect(),
        replicas: resolved.replicas,
        clearance: resolved.clearance,
        experiments,
        all_pass,
        generated_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
    }
}
