//! Seeded experiments tracing the finite-n spectral measures toward their
//! limits, plus norm, moment, splitting, and distributional checks.

use crate::limits::{norm_bound, LimitPack};
use crate::params::ErgodicParams;
use crate::sampler::{haar_column_entry_samples, replica_seed, xi_field, CoupledSample, SamplerError};
use crate::spectral::{
    eig_hermitian, lambda_measure, sigma_measure, Interval, MeasureError, SpectralError,
};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Geometric grid exposing large-n trends in few decompositions.
pub const DEFAULT_N_GRID: [usize; 5] = [32, 64, 128, 256, 512];
/// Default interval clearance as a fraction of the limit support diameter.
pub const DEFAULT_CLEARANCE_REL: f64 = 1e-3;
/// Default slack on the norm bound checks.
pub const DEFAULT_NORM_SLACK: f64 = 0.25;
/// Asymptotic 1% Kolmogorov-Smirnov coefficient.
pub const KS_ONE_PERCENT_COEFF: f64 = 1.63;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error(transparent)]
    Boundary(#[from] MeasureError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("pair indices need dimension >= {needed}, smallest grid dimension is {got}")]
    DimensionTooSmall { needed: usize, got: usize },
    #[error("interval [{lo}, {hi}] straddles zero, where the limit measures are not queryable")]
    IntervalStraddlesZero { lo: f64, hi: f64 },
    #[error("invalid run: {detail}")]
    InvalidRun { detail: String },
}

fn invalid(detail: impl Into<String>) -> DiagnosticsError {
    DiagnosticsError::InvalidRun {
        detail: detail.into(),
    }
}

/// Validated inputs of a convergence experiment. Replicas are independent
/// work items: `run_replica(k)` is pure given the plan.
#[derive(Debug, Clone)]
pub struct ConvergencePlan {
    params: ErgodicParams,
    seed: u64,
    n_grid: Vec<usize>,
    intervals: Vec<Interval>,
    pairs: Vec<(usize, usize)>,
    clearance: f64,
    replicas: u64,
}

impl ConvergencePlan {
    pub fn params(&self) -> &ErgodicParams {
        &self.params
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn n_grid(&self) -> &[usize] {
        &self.n_grid
    }
    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
    pub fn clearance(&self) -> f64 {
        self.clearance
    }
    pub fn replicas(&self) -> u64 {
        self.replicas
    }
}

/// Validates an experiment: increasing grid, pair indices below the smallest
/// dimension, intervals away from zero and clearing every limit atom.
/// `clearance = None` resolves to the relative default.
pub fn plan_convergence(
    params: ErgodicParams,
    seed: u64,
    n_grid: Vec<usize>,
    intervals: Vec<Interval>,
    pairs: Vec<(usize, usize)>,
    clearance: Option<f64>,
    replicas: u64,
) -> Result<ConvergencePlan, DiagnosticsError> {
    if n_grid.is_empty() || n_grid[0] == 0 {
        return Err(invalid("n_grid must be nonempty with positive dimensions"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_grid must be strictly increasing"));
    }
    if replicas == 0 {
        return Err(invalid("need at least one replica"));
    }
    let min_n = n_grid[0];
    if let Some(&idx) = pairs.iter().flat_map(|(a, b)| [a, b]).max() {
        if idx >= min_n {
            return Err(DiagnosticsError::DimensionTooSmall {
                needed: idx + 1,
                got: min_n,
            });
        }
    }
    let lambda_inf = crate::limits::lambda_limit(&params);
    let clearance = clearance
        .unwrap_or(DEFAULT_CLEARANCE_REL * lambda_inf.support_diameter_with_origin());
    if !(clearance >= 0.0) {
        return Err(invalid(format!("clearance {clearance} must be >= 0")));
    }
    for iv in &intervals {
        if iv.straddles_zero() {
            return Err(DiagnosticsError::IntervalStraddlesZero {
                lo: iv.lo,
                hi: iv.hi,
            });
        }
        lambda_inf.query(iv, clearance, true)?;
    }
    Ok(ConvergencePlan {
        params,
        seed,
        n_grid,
        intervals,
        pairs,
        clearance,
        replicas,
    })
}

/// One (replica, n, interval, pair) evaluation. `pair = None` rows carry
/// the counting-measure values with zero projection fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCell {
    pub replica: u64,
    pub n: usize,
    pub interval: Interval,
    pub pair: Option<(usize, usize)>,
    pub lambda_n: f64,
    pub lambda_inf: f64,
    pub sigma_n: Complex64,
    pub sigma_inf: Complex64,
    pub abs_err_lambda: f64,
    pub abs_err_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormCell {
    pub replica: u64,
    pub n: usize,
    pub norm_over_n: f64,
    pub bound: f64,
    pub residual_defect: f64,
    pub orth_defect: f64,
}

/// Everything one replica produces, in deterministic order.
#[derive(Debug, Clone)]
pub struct ReplicaTrace {
    pub replica: u64,
    pub cells: Vec<ConvergenceCell>,
    pub norms: Vec<NormCell>,
}

/// Runs replica k of the plan: sample the fields once, then walk the grid
/// decomposing minors and querying both finite and limit measures. Finite
/// and limit queries share the realized fields, so projection errors
/// measure convergence, not sampling noise.
pub fn run_replica(plan: &ConvergencePlan, k: u64) -> Result<ReplicaTrace, DiagnosticsError> {
    let sample = CoupledSample::new(plan.params.clone(), replica_seed(plan.seed, k));
    let pack = LimitPack::build(&sample, &plan.pairs);
    let gamma1 = plan.params.gamma1();
    let mut cells = Vec::new();
    let mut norms = Vec::new();
    for &n in &plan.n_grid {
        let dec = eig_hermitian(&sample.minor(n))?;
        let lam = lambda_measure(&dec);
        let sigmas: Vec<_> = plan
            .pairs
            .iter()
            .map(|&(a, b)| sigma_measure(&dec, a, b))
            .collect::<Result<_, _>>()?;
        // The gamma1 shift translates the spectrum, so the centered norm
        // reads off the same decomposition.
        let centered = dec
            .eigenvalues()
            .iter()
            .fold(0.0f64, |acc, l| acc.max((l - gamma1).abs()));
        norms.push(NormCell {
            replica: k,
            n,
            norm_over_n: centered / n as f64,
            bound: pack.norm_bound(),
            residual_defect: dec.residual_defect(),
            orth_defect: dec.orth_defect(),
        });
        for iv in &plan.intervals {
            let lambda_n = lam.query(iv, 0.0, false)?.re;
            let lambda_inf = pack.lambda_inf().query(iv, 0.0, false)?.re;
            let abs_err_lambda = (lambda_n - lambda_inf).abs();
            let mut push = |pair, sigma_n: Complex64, sigma_inf: Complex64| {
                cells.push(ConvergenceCell {
                    replica: k,
                    n,
                    interval: *iv,
                    pair,
                    lambda_n,
                    lambda_inf,
                    sigma_n,
                    sigma_inf,
                    abs_err_lambda,
                    abs_err_sigma: (sigma_n - sigma_inf).norm(),
                });
            };
            if plan.pairs.is_empty() {
                let zero = Complex64::new(0.0, 0.0);
                push(None, zero, zero);
            } else {
                for (&(a, b), sm) in plan.pairs.iter().zip(&sigmas) {
                    let sigma_n = sm.query(iv, 0.0, false)?;
                    let sigma_inf = pack
                        .sigma_inf(a, b)
                        .expect("pack built from the plan pairs")
                        .query(iv, 0.0, false)?;
                    push(Some((a, b)), sigma_n, sigma_inf);
                }
            }
        }
    }
    Ok(ReplicaTrace {
        replica: k,
        cells,
        norms,
    })
}

/// Merged convergence experiment output.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub params: ErgodicParams,
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub intervals: Vec<Interval>,
    pub pairs: Vec<(usize, usize)>,
    pub clearance: f64,
    pub replica_seeds: Vec<u64>,
    pub cells: Vec<ConvergenceCell>,
    pub norms: Vec<NormCell>,
}

impl ConvergenceReport {
    /// Pure reduction: order traces by replica and concatenate.
    pub fn assemble(plan: &ConvergencePlan, mut traces: Vec<ReplicaTrace>) -> Self {
        traces.sort_by_key(|t| t.replica);
        let replica_seeds = traces
            .iter()
            .map(|t| replica_seed(plan.seed, t.replica))
            .collect();
        let mut cells = Vec::new();
        let mut norms = Vec::new();
        for t in traces {
            cells.extend(t.cells);
            norms.extend(t.norms);
        }
        ConvergenceReport {
            params: plan.params.clone(),
            seed: plan.seed,
            n_grid: plan.n_grid.clone(),
            intervals: plan.intervals.clone(),
            pairs: plan.pairs.clone(),
            clearance: plan.clearance,
            replica_seeds,
            cells,
            norms,
        }
    }

    /// Per-replica values of one cell slot, in replica order.
    pub fn slot_values<F: Fn(&ConvergenceCell) -> f64>(
        &self,
        n: usize,
        interval: &Interval,
        pair: Option<(usize, usize)>,
        value: F,
    ) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.n == n && c.interval == *interval && c.pair == pair)
            .map(value)
            .collect()
    }
}

/// Sequential driver over the replicas of a validated plan.
pub fn convergence_run(plan: &ConvergencePlan) -> Result<ConvergenceReport, DiagnosticsError> {
    let traces = (0..plan.replicas)
        .map(|k| run_replica(plan, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ConvergenceReport::assemble(plan, traces))
}

/// Differences of exponential sums: sum over the scaled nonzero spectrum of
/// e^{i mu lambda} minus the same sum over the points. Exactly zero at
/// mu = 0 when the counts agree.
pub fn charfn_error(nonzero_eigs_over_n: &[f64], params: &ErgodicParams, mu: f64) -> Complex64 {
    let finite: Complex64 = nonzero_eigs_over_n
        .iter()
        .map(|&l| Complex64::from_polar(1.0, mu * l))
        .sum();
    let limit: Complex64 = params
        .points()
        .iter()
        .map(|&x| Complex64::from_polar(1.0, mu * x))
        .sum();
    finite - limit
}

/// Exact 2r-th norm moment of an n-coordinate standard complex Gaussian
/// vector: the squared norm is Gamma(n, 1), so the moment is the rising
/// factorial n(n+1)...(n+r-1).
pub fn moment_oracle(n: usize, r: u32) -> f64 {
    assert!(n >= 1 && r >= 1, "need n, r >= 1");
    (0..r).fold(1.0, |acc, k| acc * (n as f64 + k as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentCheck {
    pub n: usize,
    pub r: u32,
    pub replicas: u64,
    pub empirical: f64,
    pub oracle: f64,
    pub z: f64,
}

/// Monte Carlo check of `moment_oracle`: fresh coordinate fields per
/// replica, Welford accumulation, studentized deviation of the mean.
pub fn moment_mc_check(n: usize, r: u32, replicas: u64, seed: u64) -> MomentCheck {
    assert!(replicas >= 100, "need at least 100 replicas");
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for k in 0..replicas {
        let sq_norm: f64 = (0..n)
            .map(|j| xi_field(seed, k as usize, j).norm_sqr())
            .sum();
        let value = sq_norm.powi(r as i32);
        let delta = value - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (value - mean);
    }
    let oracle = moment_oracle(n, r);
    let var = m2 / (replicas - 1) as f64;
    let z = (mean - oracle) / (var / replicas as f64).sqrt();
    MomentCheck {
        n,
        r,
        replicas,
        empirical: mean,
        oracle,
        z,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormPoint {
    pub n: usize,
    pub norm_over_n: f64,
    pub bound: f64,
    pub pass: bool,
    pub residual_defect: f64,
    pub orth_defect: f64,
}

/// Centered operator norm over the grid against the tail-aware bound plus
/// slack. Centering removes the gamma1 diagonal only.
pub fn norm_check(
    sample: &CoupledSample,
    n_grid: &[usize],
    slack: f64,
) -> Result<Vec<NormPoint>, DiagnosticsError> {
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("n_grid must be nonempty, positive, strictly increasing"));
    }
    let gamma1 = sample.params().gamma1();
    let bound = norm_bound(sample.params()) + slack;
    n_grid
        .iter()
        .map(|&n| {
            let dec = eig_hermitian(&sample.minor(n))?;
            let centered = dec
                .eigenvalues()
                .iter()
                .fold(0.0f64, |acc, l| acc.max((l - gamma1).abs()));
            let norm_over_n = centered / n as f64;
            Ok(NormPoint {
                n,
                norm_over_n,
                bound,
                pass: norm_over_n <= bound,
                residual_defect: dec.residual_defect(),
                orth_defect: dec.orth_defect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitReport {
    pub epsilon: f64,
    pub n: usize,
    pub b_norm_over_n: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Splits the sample at |x| <= epsilon: the small-point part plus the
/// Gaussian part forms B_n, whose norm over n is checked against the
/// small-point energy bound plus slack.
pub fn split_experiment(
    params: &ErgodicParams,
    epsilon: f64,
    seed: u64,
    n: usize,
    slack: f64,
) -> Result<SplitReport, DiagnosticsError> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon {epsilon} must be positive")));
    }
    if n == 0 {
        return Err(invalid("need n >= 1"));
    }
    let sample = CoupledSample::new(params.clone(), seed);
    let dec = eig_hermitian(&sample.small_part_minor(n, epsilon))?;
    let b_norm_over_n = dec.max_abs_eigenvalue() / n as f64;
    let small_energy: f64 = params
        .points()
        .iter()
        .filter(|x| x.abs() <= epsilon)
        .map(|x| x * x)
        .sum();
    let bound = (small_energy + params.tail_bound()).sqrt() + slack;
    Ok(SplitReport {
        epsilon,
        n,
        b_norm_over_n,
        bound,
        pass: b_norm_over_n <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaTailReport {
    pub n: usize,
    pub draws: usize,
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Kolmogorov-Smirnov comparison of squared Haar column entries against
/// the Beta(1, n-1) law F(t) = 1 - (1-t)^{n-1} at the asymptotic 1% level.
pub fn beta_tail_test(n: usize, draws: usize, seed: u64) -> Result<BetaTailReport, DiagnosticsError> {
    if draws < 1000 {
        return Err(invalid(format!("need at least 1000 draws, got {draws}")));
    }
    let mut samples = haar_column_entry_samples(n, draws, seed)?;
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count = draws as f64;
    let exponent = (n - 1) as i32;
    let mut ks = 0.0f64;
    for (i, &t) in samples.iter().enumerate() {
        let cdf = 1.0 - (1.0 - t).powi(exponent);
        ks = ks
            .max(cdf - i as f64 / count)
            .max((i + 1) as f64 / count - cdf);
    }
    let threshold = KS_ONE_PERCENT_COEFF / count.sqrt();
    Ok(BetaTailReport {
        n,
        draws,
        ks,
        threshold,
        pass: ks <= threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatedParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub points: Vec<f64>,
}

/// Inverts one minor back to parameter estimates: gamma1 from the trace,
/// points from eigenvalues over n above the threshold, gamma2 from the
/// residual second trace moment.
pub fn estimate_params(
    sample: &CoupledSample,
    n: usize,
    threshold: f64,
) -> Result<EstimatedParams, DiagnosticsError> {
    if n < 4 {
        return Err(DiagnosticsError::DimensionTooSmall { needed: 4, got: n });
    }
    if !(threshold > 0.0) {
        return Err(invalid(format!("threshold {threshold} must be positive")));
    }
    let minor = sample.minor(n);
    let gamma1 = (0..n).map(|j| minor.entries()[(j, j)].re).sum::<f64>() / n as f64;
    let dec = eig_hermitian(&minor)?;
    let scale = n as f64;
    let mut points: Vec<f64> = dec
        .eigenvalues()
        .iter()
        .map(|l| (l - gamma1) / scale)
        .filter(|x| x.abs() >= threshold)
        .collect();
    points.sort_by(|a, b| {
        b.abs()
            .partial_cmp(&a.abs())
            .unwrap()
            .then(b.partial_cmp(a).unwrap())
    });
    let second: f64 = dec
        .eigenvalues()
        .iter()
        .map(|l| (l - gamma1).powi(2))
        .sum::<f64>()
        / (scale * scale);
    let energy: f64 = points.iter().map(|x| x * x).sum();
    let gamma2 = (second - energy).max(0.0);
    Ok(EstimatedParams {
        gamma1,
        gamma2,
        points,
    })
}

/// Median of a nonempty slice; even lengths average the middle pair.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}
