//! Acceptance suite: ten seeded desk-scale experiments, one test and one
//! printed verdict line each. Seeds and tolerances are frozen; a failure is
//! a real regression, not noise.

use std::fs;
use std::process::Command;
use std::sync::LazyLock;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use minorspec::cayley::{cayley, correspondence_defect, inverse_cayley, UNITARITY_TOL_PER_N};
use minorspec::diagnostics::{
    beta_tail_test, convergence_run, median, moment_mc_check, moment_oracle, plan_convergence,
    split_experiment, ConvergenceReport,
};
use minorspec::limits::eigvec_limit;
use minorspec::params::{ErgodicParams, PowerTailSpec, RawParams};
use minorspec::sampler::{replica_seed, CoupledSample, InjectedFields};
use minorspec::spectral::{
    eig_hermitian, lowrank_spectrum, normalized_eigvec, Interval, Side, DEFAULT_PHASE_TOL,
};

fn params(gamma1: f64, gamma2: f64, points: &[f64]) -> ErgodicParams {
    ErgodicParams::validate(&RawParams {
        gamma1,
        gamma2,
        points: points.to_vec(),
        tail: None,
        tail_bound: None,
    })
    .unwrap()
}

/// Gaussian part plus the 1/l point sequence truncated at square-sum
/// remainder 0.01 (cutoff 100).
fn power_tail_params() -> ErgodicParams {
    ErgodicParams::validate(&RawParams {
        gamma1: 0.0,
        gamma2: 1.0,
        points: vec![],
        tail: Some(PowerTailSpec {
            c: 1.0,
            exponent: 1.0,
            tol: 0.01,
        }),
        tail_bound: None,
    })
    .unwrap()
}

fn verdict(num: u32, name: &str, pass: bool) -> bool {
    println!(
        "criterion {num:02} {name}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

const SHARED_SEED: u64 = 20260822;
const SHARED_REPLICAS: u64 = 100;

/// The criterion 1/2/5 scenario: two unit-mass points, five dimensions,
/// three probe intervals, both coordinate pairs, 100 replicas.
static SHARED: LazyLock<(ConvergenceReport, Duration)> = LazyLock::new(|| {
    let plan = plan_convergence(
        params(0.0, 0.0, &[2.0, -1.0]),
        SHARED_SEED,
        vec![32, 64, 128, 256, 512],
        vec![
            Interval::closed(1.5, 2.5),
            Interval::open(-1.5, -0.5),
            Interval::open(0.5, 1.5),
        ],
        vec![(0, 0), (0, 1)],
        None,
        SHARED_REPLICAS,
    )
    .unwrap();
    let start = Instant::now();
    let report = convergence_run(&plan).unwrap();
    (report, start.elapsed())
});

#[test]
fn c01_eigenvalue_counting_is_exact_at_large_n() {
    let (report, elapsed) = &*SHARED;
    let exact = (0..SHARED_REPLICAS)
        .filter(|&k| {
            report
                .cells
                .iter()
                .filter(|c| c.replica == k && (c.n == 256 || c.n == 512))
                .all(|c| c.abs_err_lambda == 0.0)
        })
        .count();
    let in_time = *elapsed <= Duration::from_secs(120);
    let pass = exact >= 95 && in_time;
    verdict(1, "eigenvalue counting exact at n = 256, 512", pass);
    assert!(
        pass,
        "exact in {exact}/100 replicas (need 95), runtime {elapsed:?} (cap 120s)"
    );
}

#[test]
fn c02_projection_weight_error_shrinks_on_every_slot() {
    let (report, _) = &*SHARED;
    let mut failures = Vec::new();
    for iv in &report.intervals {
        for &(a, b) in &report.pairs {
            let at = |n: usize| {
                median(&report.slot_values(n, iv, Some((a, b)), |c| c.abs_err_sigma))
            };
            let (m32, m512) = (at(32), at(512));
            if !(m512 < m32) || m512 > 0.2 {
                failures.push(format!(
                    "interval [{}, {}] pair ({}, {}): median err {m32:.3e} at n=32 vs {m512:.3e} at n=512",
                    iv.lo, iv.hi, a + 1, b + 1
                ));
            }
        }
    }
    let pass = failures.is_empty();
    verdict(2, "projection weight error strictly shrinks, final <= 0.2", pass);
    assert!(pass, "{}", failures.join("; "));
}

#[test]
fn c03_top_eigenvector_coordinates_reach_their_limit() {
    let p = params(0.0, 0.0, &[2.0]);
    let n = 512;
    let mut hits = 0;
    for k in 0..100 {
        let sample = CoupledSample::new(p.clone(), replica_seed(31337, k));
        let dec = eig_hermitian(&sample.minor(n)).unwrap();
        let v = normalized_eigvec(&dec, 0, Side::Largest, DEFAULT_PHASE_TOL).unwrap();
        let lim = eigvec_limit(&sample, 0, Side::Largest, &[0, 1, 2]).unwrap();
        let err = (0..3)
            .map(|a| (v[a] - lim[a]).norm())
            .fold(0.0f64, f64::max);
        if err <= 0.1 {
            hits += 1;
        }
    }

    // Injected rank-1 field: the top eigenvector is exactly xi/||xi||, so the
    // anchored coordinates must match the closed form to rounding.
    let n_inj = 24;
    let xi: Vec<Complex64> = (0..n_inj)
        .map(|j| Complex64::new((j % 5) as f64 + 1.0, (j % 3) as f64 - 1.0))
        .collect();
    let sample = CoupledSample::with_fields(
        params(0.0, 0.0, &[2.0]),
        InjectedFields {
            gauss: None,
            xi: vec![xi.clone()],
        },
    );
    let dec = eig_hermitian(&sample.minor(n_inj)).unwrap();
    let v = normalized_eigvec(&dec, 0, Side::Largest, DEFAULT_PHASE_TOL).unwrap();
    let norm = xi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let anchor = xi[0] / xi[0].norm();
    let closed_err = (0..n_inj)
        .map(|a| {
            let expected = xi[a] * (n_inj as f64).sqrt() / (norm * anchor);
            (v[a] - expected).norm()
        })
        .fold(0.0f64, f64::max);

    let pass = hits >= 90 && closed_err <= 1e-10;
    verdict(3, "top eigenvector coordinates converge", pass);
    assert!(
        pass,
        "within 0.1 in {hits}/100 replicas (need 90); injected closed-form error {closed_err:.3e}"
    );
}

#[test]
fn c04_lowrank_fast_path_matches_dense_and_is_faster() {
    let presets: [&[f64]; 3] = [&[2.0], &[2.0, -1.0], &[2.0, -1.0, 1.0, 0.5, -0.25]];
    let mut worst_rel = 0.0f64;
    for (i, xs) in presets.iter().enumerate() {
        let p = params(0.3, 0.0, xs);
        for &n in &[128usize, 512] {
            let sample = CoupledSample::new(p.clone(), 777 + i as u64);
            let dense = eig_hermitian(&sample.minor(n)).unwrap();
            let mut fast = lowrank_spectrum(&sample, n).unwrap();
            fast.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let scale = dense
                .eigenvalues()
                .iter()
                .fold(1.0f64, |acc, l| acc.max(l.abs()));
            let rel = dense
                .eigenvalues()
                .iter()
                .zip(&fast)
                .map(|(d, f)| (d - f).abs() / scale)
                .fold(0.0f64, f64::max);
            worst_rel = worst_rel.max(rel);
        }
    }

    let p5 = params(0.3, 0.0, presets[2]);
    let sample = CoupledSample::new(p5, 1234);
    let minor = sample.minor(512);
    let t_fast = Instant::now();
    lowrank_spectrum(&sample, 512).unwrap();
    let t_fast = t_fast.elapsed();
    let t_dense = Instant::now();
    eig_hermitian(&minor).unwrap();
    let t_dense = t_dense.elapsed();
    let speedup = t_dense.as_secs_f64() / t_fast.as_secs_f64().max(1e-9);

    let pass = worst_rel <= 1e-8 && speedup >= 5.0;
    verdict(4, "low-rank fast path matches dense", pass);
    println!(
        "  fast path speedup at p = 5, n = 512: {speedup:.0}x (target 20x, pass floor 5x)"
    );
    assert!(
        pass,
        "worst relative gap {worst_rel:.3e} (cap 1e-8), speedup {speedup:.1}x (need 5x)"
    );
}

#[test]
fn c05_centered_norm_over_n_respects_the_bound() {
    // Two-point scenario: reuse the shared report's norm series at n = 512.
    let (report, _) = &*SHARED;
    let two_point_ok = report
        .norms
        .iter()
        .filter(|c| c.n == 512)
        .all(|c| c.norm_over_n <= c.bound + 0.25);
    let two_point_count = report.norms.iter().filter(|c| c.n == 512).count();

    // Power-tail preset with a Gaussian part, fresh 100 replicas.
    let p = power_tail_params();
    let mut tail_held = 0;
    for k in 0..100u64 {
        let sample = CoupledSample::new(p.clone(), replica_seed(555, k));
        let pts =
            minorspec::diagnostics::norm_check(&sample, &[512], 0.25).unwrap();
        if pts[0].pass {
            tail_held += 1;
        }
    }

    let pass = two_point_ok && two_point_count == 100 && tail_held == 100;
    verdict(5, "centered norm within closed-form bound at n = 512", pass);
    assert!(
        pass,
        "two-point scenario held in all {two_point_count} replicas: {two_point_ok}; \
         power-tail held in {tail_held}/100"
    );
}

#[test]
fn c06_moment_oracle_and_monte_carlo_agree() {
    let start = Instant::now();

    let mut exact_r2 = true;
    for n in 1..=100usize {
        let formula = (n * n + n) as f64;
        exact_r2 &= moment_oracle(n, 2) == formula;
    }

    let mut bounded = true;
    for &r in &[3u32, 4] {
        for &n in &[8usize, 16, 32, 64] {
            let nf = n as f64;
            let leading = nf.powi(r as i32)
                + (r * (r - 1)) as f64 / 2.0 * nf.powi(r as i32 - 1);
            let ratio = (moment_oracle(n, r) - leading) / nf.powi(r as i32 - 2);
            bounded &= ratio.abs() <= 16.0;
        }
    }

    let mut worst_z = 0.0f64;
    for (i, &(n, r)) in [(10usize, 2u32), (10, 3), (100, 2), (100, 3)]
        .iter()
        .enumerate()
    {
        let check = moment_mc_check(n, r, 100_000, replica_seed(606, i as u64));
        worst_z = worst_z.max(check.z.abs());
    }

    let elapsed = start.elapsed();
    let pass =
        exact_r2 && bounded && worst_z <= 4.0 && elapsed <= Duration::from_secs(60);
    verdict(6, "norm moments match the rising-factorial oracle", pass);
    assert!(
        pass,
        "r=2 exact: {exact_r2}; corrections bounded: {bounded}; worst |z| {worst_z:.2} \
         (cap 4); runtime {elapsed:?} (cap 60s)"
    );
}

#[test]
fn c07_haar_column_entries_follow_the_beta_law() {
    let mut all = true;
    for (i, &n) in [2usize, 8, 32].iter().enumerate() {
        let report = beta_tail_test(n, 10_000, replica_seed(4242, i as u64)).unwrap();
        all &= report.pass;
    }
    let pass = all;
    verdict(7, "squared Haar entries pass the KS test at 1%", pass);
    assert!(pass);
}

#[test]
fn c08_split_small_part_norm_respects_the_energy_bound() {
    let p = power_tail_params();
    let mut held = 0;
    for k in 0..100u64 {
        let report =
            split_experiment(&p, 0.1, replica_seed(888, k), 512, 0.2).unwrap();
        if report.pass {
            held += 1;
        }
    }
    let pass = held == 100;
    verdict(8, "split small-part norm within energy bound", pass);
    assert!(pass, "held in {held}/100 replicas");
}

#[test]
fn c09_cayley_bridge_is_unitary_faithful_and_invertible() {
    let p = params(0.5, 1.0, &[2.0, -1.0]);
    let n = 64;
    let mut failures = Vec::new();
    for k in 0..100u64 {
        let sample = CoupledSample::new(p.clone(), replica_seed(99_999, k));
        let minor = sample.minor(n);
        let dec = eig_hermitian(&minor).unwrap();
        let u = cayley(&minor).unwrap();
        let back = inverse_cayley(&u).unwrap();
        let unitarity = u.unitarity_defect();
        let preservation = correspondence_defect(&dec, &u);
        let roundtrip = (minor.entries() - back.entries()).norm() / minor.frobenius();
        if unitarity > UNITARITY_TOL_PER_N * n as f64
            || preservation > 1e-8
            || roundtrip > 1e-8
        {
            failures.push(format!(
                "replica {k}: unitarity {unitarity:.2e}, preservation {preservation:.2e}, \
                 roundtrip {roundtrip:.2e}"
            ));
        }
    }
    let pass = failures.is_empty();
    verdict(9, "Cayley bridge unitary, eigen-faithful, invertible", pass);
    assert!(pass, "{}", failures.join("; "));
}

#[test]
fn c10_output_bytes_are_reproducible_across_threads_and_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{"params": {"gamma2": 0.3, "points": [2.0, -1.0]}, "seed": 42,
            "n_grid": [16, 32, 64], "intervals": [{"lo": 1.5, "hi": 2.5}],
            "pairs": [[1, 1], [1, 2]], "replicas": 8,
            "experiments": ["converge", "norm"], "norm_slack": 2.0,
            "converge_pass_fraction": 0.0, "converge_sigma_err_max": 1e9,
            "converge_require_median_decrease": false}"#,
    )
    .unwrap();

    let mut bundles = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "8"), ("c", "1")] {
        let out_dir = dir.path().join(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_minorspec"))
            .args([
                "all",
                "--config",
                config_path.to_str().unwrap(),
                "--threads",
                threads,
                "--out",
                out_dir.to_str().unwrap(),
                "--verbosity",
                "0",
            ])
            .status()
            .unwrap();
        assert!(status.success(), "run {tag} failed");
        let mut bundle = String::new();
        for name in ["converge.csv", "plotdata.csv", "norm.csv"] {
            bundle.push_str(&fs::read_to_string(out_dir.join(name)).unwrap());
        }
        bundles.push(bundle);
    }
    let pass = bundles[0] == bundles[1] && bundles[0] == bundles[2];
    verdict(10, "CSV bytes identical across runs and thread counts", pass);
    assert!(pass);
}
