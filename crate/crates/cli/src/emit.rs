//! Output files. All floats are written as `{:.16e}` (17 significant digits)
//! so values round-trip exactly and files are byte-stable across runs.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use minorspec::diagnostics::{
    median, BetaTailReport, ConvergenceReport, EstimatedParams, MomentCheck, NormPoint, SplitReport,
};

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn write_rows(path: &Path, header: &str, rows: &[String]) -> io::Result<PathBuf> {
    let mut text = String::with_capacity(rows.len() * 64 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

/// One row per (replica, n, interval, pair) cell. Pairless rows carry the
/// 1-based sentinel a = b = 0 and zero projection fields.
pub fn write_converge_csv(report: &ConvergenceReport, path: &Path) -> io::Result<PathBuf> {
    let header = "replica,n,interval_lo,interval_hi,a,b,lambda_n,lambda_inf,\
                  sigma_re,sigma_im,sigma_inf_re,sigma_inf_im,abs_err_lambda,abs_err_sigma";
    let rows: Vec<String> = report
        .cells
        .iter()
        .map(|c| {
            let (a, b) = c.pair.map_or((0, 0), |(a, b)| (a + 1, b + 1));
            format!(
                "{},{},{},{},{a},{b},{},{},{},{},{},{},{},{}",
                c.replica,
                c.n,
                fmt(c.interval.lo),
                fmt(c.interval.hi),
                fmt(c.lambda_n),
                fmt(c.lambda_inf),
                fmt(c.sigma_n.re),
                fmt(c.sigma_n.im),
                fmt(c.sigma_inf.re),
                fmt(c.sigma_inf.im),
                fmt(c.abs_err_lambda),
                fmt(c.abs_err_sigma)
            )
        })
        .collect();
    write_rows(path, header, &rows)
}

/// Long-format medians over replicas: one `lambda` row per (n, interval) and
/// one `sigma` row per (n, interval, pair).
pub fn write_plotdata_csv(report: &ConvergenceReport, path: &Path) -> io::Result<PathBuf> {
    let header = "kind,n,interval_lo,interval_hi,a,b,median_abs_err";
    let lambda_slot = report.pairs.first().copied();
    let mut rows = Vec::new();
    for &n in &report.n_grid {
        for iv in &report.intervals {
            let errs = report.slot_values(n, iv, lambda_slot, |c| c.abs_err_lambda);
            rows.push(format!(
                "lambda,{n},{},{},0,0,{}",
                fmt(iv.lo),
                fmt(iv.hi),
                fmt(median(&errs))
            ));
        }
    }
    for &n in &report.n_grid {
        for iv in &report.intervals {
            for &(a, b) in &report.pairs {
                let errs = report.slot_values(n, iv, Some((a, b)), |c| c.abs_err_sigma);
                rows.push(format!(
                    "sigma,{n},{},{},{},{},{}",
                    fmt(iv.lo),
                    fmt(iv.hi),
                    a + 1,
                    b + 1,
                    fmt(median(&errs))
                ));
            }
        }
    }
    write_rows(path, header, &rows)
}

pub fn write_norm_csv(points: &[(u64, NormPoint)], path: &Path) -> io::Result<PathBuf> {
    let header = "replica,n,norm_over_n,bound,pass";
    let rows: Vec<String> = points
        .iter()
        .map(|(k, p)| {
            format!(
                "{k},{},{},{},{}",
                p.n,
                fmt(p.norm_over_n),
                fmt(p.bound),
                flag(p.pass)
            )
        })
        .collect();
    write_rows(path, header, &rows)
}

pub fn write_split_csv(reports: &[(u64, SplitReport)], path: &Path) -> io::Result<PathBuf> {
    let header = "replica,epsilon,n,b_norm_over_n,bound,pass";
    let rows: Vec<String> = reports
        .iter()
        .map(|(k, r)| {
            format!(
                "{k},{},{},{},{},{}",
                fmt(r.epsilon),
                r.n,
                fmt(r.b_norm_over_n),
                fmt(r.bound),
                flag(r.pass)
            )
        })
        .collect();
    write_rows(path, header, &rows)
}

pub fn write_moments_csv(checks: &[MomentCheck], path: &Path) -> io::Result<PathBuf> {
    let header = "n,r,empirical,oracle,z";
    let rows: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "{},{},{},{},{}",
                c.n,
                c.r,
                fmt(c.empirical),
                fmt(c.oracle),
                fmt(c.z)
            )
        })
        .collect();
    write_rows(path, header, &rows)
}

pub fn write_beta_csv(reports: &[BetaTailReport], path: &Path) -> io::Result<PathBuf> {
    let header = "n,draws,ks,threshold,pass";
    let rows: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.n,
                r.draws,
                fmt(r.ks),
                fmt(r.threshold),
                flag(r.pass)
            )
        })
        .collect();
    write_rows(path, header, &rows)
}

/// kind in {gamma1, gamma2, point}; index is 1-based for points, 0 otherwise.
pub fn write_estimate_csv(est: &EstimatedParams, path: &Path) -> io::Result<PathBuf> {
    let header = "kind,index,value";
    let mut rows = vec![
        format!("gamma1,0,{}", fmt(est.gamma1)),
        format!("gamma2,0,{}", fmt(est.gamma2)),
    ];
    for (i, &x) in est.points.iter().enumerate() {
        rows.push(format!("point,{},{}", i + 1, fmt(x)));
    }
    write_rows(path, header, &rows)
}

#[derive(Debug, Clone, Copy)]
pub struct CayleyRow {
    pub replica: u64,
    pub n: usize,
    pub unitarity_defect: f64,
    pub correspondence_defect: f64,
    pub roundtrip_rel_err: f64,
    pub pass: bool,
}

pub fn write_cayley_csv(rows: &[CayleyRow], path: &Path) -> io::Result<PathBuf> {
    let header = "replica,n,unitarity_defect,correspondence_defect,roundtrip_rel_err,pass";
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                r.replica,
                r.n,
                fmt(r.unitarity_defect),
                fmt(r.correspondence_defect),
                fmt(r.roundtrip_rel_err),
                flag(r.pass)
            )
        })
        .collect();
    write_rows(path, header, &lines)
}
