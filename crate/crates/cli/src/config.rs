//! Run configuration: a single JSON file drives every subcommand. Every field
//! has a default, so `{}` is a valid config and the file itself is optional.

use minorspec::diagnostics::{DEFAULT_CLEARANCE_REL, DEFAULT_NORM_SLACK, DEFAULT_N_GRID};
use minorspec::limits::lambda_limit;
use minorspec::params::{ErgodicParams, RawParams};
use minorspec::spectral::Interval;
use serde::{Deserialize, Serialize};

/// Interval entry. Endpoints default to closed. `clearance` overrides the
/// global relative default for this interval only, as an absolute distance.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_true")]
    pub lo_closed: bool,
    #[serde(default = "default_true")]
    pub hi_closed: bool,
    #[serde(default)]
    pub clearance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Converge,
    Norm,
    Split,
    Moments,
    Beta,
    Estimate,
    Cayley,
}

pub const ALL_EXPERIMENTS: [Experiment; 7] = [
    Experiment::Converge,
    Experiment::Norm,
    Experiment::Split,
    Experiment::Moments,
    Experiment::Beta,
    Experiment::Estimate,
    Experiment::Cayley,
];

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::Norm => "norm",
            Experiment::Split => "split",
            Experiment::Moments => "moments",
            Experiment::Beta => "beta",
            Experiment::Estimate => "estimate",
            Experiment::Cayley => "cayley",
        }
    }
}

/// Raw config as parsed. Coordinate pairs are 1-based; (0, 0) is the
/// explicit "no pair" sentinel and is dropped on resolution.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_params")]
    pub params: RawParams,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_intervals")]
    pub intervals: Vec<IntervalSpec>,
    #[serde(default = "default_pairs")]
    pub pairs: Vec<(usize, usize)>,
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    /// Experiments the `all` subcommand runs, in this order.
    #[serde(default = "default_experiments")]
    pub experiments: Vec<Experiment>,

    /// Dimension for the `sample` subcommand; defaults to the grid maximum.
    #[serde(default)]
    pub sample_n: Option<usize>,

    #[serde(default = "default_norm_slack")]
    pub norm_slack: f64,

    #[serde(default = "default_split_epsilon")]
    pub split_epsilon: f64,
    #[serde(default)]
    pub split_n: Option<usize>,
    #[serde(default = "default_norm_slack")]
    pub split_slack: f64,

    #[serde(default = "default_moment_ns")]
    pub moment_ns: Vec<usize>,
    #[serde(default = "default_moment_rs")]
    pub moment_rs: Vec<u32>,
    #[serde(default = "default_moment_replicas")]
    pub moment_replicas: u64,
    #[serde(default = "default_moment_z_bound")]
    pub moment_z_bound: f64,

    #[serde(default = "default_beta_ns")]
    pub beta_ns: Vec<usize>,
    #[serde(default = "default_beta_draws")]
    pub beta_draws: usize,

    #[serde(default)]
    pub estimate_n: Option<usize>,
    #[serde(default = "default_estimate_threshold")]
    pub estimate_threshold: f64,

    #[serde(default = "default_cayley_n")]
    pub cayley_n: usize,
    #[serde(default = "default_cayley_replicas")]
    pub cayley_replicas: u64,

    /// Fraction of replicas whose counting measure must be exact at the two
    /// largest grid dimensions for the converge experiment to pass.
    #[serde(default = "default_pass_fraction")]
    pub converge_pass_fraction: f64,
    /// Ceiling on the median projection-weight error at the largest n.
    #[serde(default = "default_sigma_err_max")]
    pub converge_sigma_err_max: f64,
    /// Require the median errors to decrease from the smallest to the
    /// largest grid dimension.
    #[serde(default = "default_true")]
    pub converge_require_median_decrease: bool,
}

fn default_true() -> bool {
    true
}
/// Applies only when the whole `params` object is absent; an explicit
/// object starts from zeros field by field. The atoms sit inside the
/// default intervals so a bare run demonstrates convergence.
fn default_params() -> RawParams {
    RawParams {
        gamma2: 0.25,
        points: vec![2.0, -1.0],
        ..RawParams::default()
    }
}
fn default_seed() -> u64 {
    1
}
fn default_n_grid() -> Vec<usize> {
    DEFAULT_N_GRID.to_vec()
}
fn default_intervals() -> Vec<IntervalSpec> {
    vec![
        IntervalSpec {
            lo: 1.5,
            hi: 2.5,
            lo_closed: true,
            hi_closed: true,
            clearance: None,
        },
        IntervalSpec {
            lo: -1.5,
            hi: -0.5,
            lo_closed: false,
            hi_closed: false,
            clearance: None,
        },
    ]
}
fn default_pairs() -> Vec<(usize, usize)> {
    vec![(1, 1), (1, 2)]
}
fn default_replicas() -> u64 {
    20
}
fn default_experiments() -> Vec<Experiment> {
    ALL_EXPERIMENTS.to_vec()
}
fn default_norm_slack() -> f64 {
    DEFAULT_NORM_SLACK
}
fn default_split_epsilon() -> f64 {
    0.1
}
fn default_moment_ns() -> Vec<usize> {
    vec![10, 100]
}
fn default_moment_rs() -> Vec<u32> {
    vec![2, 3]
}
fn default_moment_replicas() -> u64 {
    100_000
}
fn default_moment_z_bound() -> f64 {
    4.0
}
fn default_beta_ns() -> Vec<usize> {
    vec![2, 8, 32]
}
fn default_beta_draws() -> usize {
    10_000
}
fn default_estimate_threshold() -> f64 {
    0.05
}
fn default_cayley_n() -> usize {
    64
}
fn default_cayley_replicas() -> u64 {
    20
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config must deserialize")
    }
}

/// Validated, 0-based form consumed by the experiment runners.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub params: ErgodicParams,
    pub seed: u64,
    pub n_grid: Vec<usize>,
    pub intervals: Vec<Interval>,
    /// Minimum of the per-interval clearances; what the planner enforces.
    pub clearance: Option<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub replicas: u64,
    pub experiments: Vec<Experiment>,
    pub sample_n: usize,
    pub norm_slack: f64,
    pub split_epsilon: f64,
    pub split_n: usize,
    pub split_slack: f64,
    pub moment_ns: Vec<usize>,
    pub moment_rs: Vec<u32>,
    pub moment_replicas: u64,
    pub moment_z_bound: f64,
    pub beta_ns: Vec<usize>,
    pub beta_draws: usize,
    pub estimate_n: usize,
    pub estimate_threshold: f64,
    pub cayley_n: usize,
    pub cayley_replicas: u64,
    pub converge_pass_fraction: f64,
    pub converge_sigma_err_max: f64,
    pub converge_require_median_decrease: bool,
}

pub fn resolve(config: &RunConfig) -> Result<Resolved, String> {
    let params = ErgodicParams::validate(&config.params).map_err(|e| e.to_string())?;

    if config.n_grid.is_empty() {
        return Err("n_grid must be nonempty".into());
    }
    let max_n = *config.n_grid.iter().max().unwrap();

    let mut pairs = Vec::new();
    for &(a, b) in &config.pairs {
        if (a, b) == (0, 0) {
            continue;
        }
        if a == 0 || b == 0 {
            return Err(format!(
                "pair ({a}, {b}): coordinates are 1-based; (0, 0) is the only sentinel"
            ));
        }
        pairs.push((a - 1, b - 1));
    }

    // Each interval must clear the limit atoms and the origin by its own
    // clearance; the planner then re-checks everything at the minimum.
    let lambda_inf = lambda_limit(&params);
    let default_abs = DEFAULT_CLEARANCE_REL * lambda_inf.support_diameter_with_origin();
    let mut min_clearance: Option<f64> = None;
    let mut intervals = Vec::new();
    for spec in &config.intervals {
        let iv = Interval {
            lo: spec.lo,
            hi: spec.hi,
            lo_closed: spec.lo_closed,
            hi_closed: spec.hi_closed,
        };
        let c = spec.clearance.unwrap_or(default_abs);
        if !(c >= 0.0) || !c.is_finite() {
            return Err(format!(
                "interval [{}, {}]: clearance {c} must be finite and >= 0",
                iv.lo, iv.hi
            ));
        }
        if iv.straddles_zero() {
            return Err(format!(
                "interval ({}, {}) straddles zero where the spurious null eigenvalues pile up",
                iv.lo, iv.hi
            ));
        }
        lambda_inf
            .query(&iv, c, true)
            .map_err(|e| format!("interval [{}, {}]: {e}", iv.lo, iv.hi))?;
        min_clearance = Some(min_clearance.map_or(c, |m: f64| m.min(c)));
        intervals.push(iv);
    }

    let sample_n = config.sample_n.unwrap_or(max_n);
    if sample_n == 0 {
        return Err("sample_n must be positive".into());
    }
    let split_n = config.split_n.unwrap_or(max_n);
    let estimate_n = config.estimate_n.unwrap_or(max_n);

    let mut experiments = Vec::new();
    for &e in &config.experiments {
        if !experiments.contains(&e) {
            experiments.push(e);
        }
    }

    Ok(Resolved {
        params,
        seed: config.seed,
        n_grid: config.n_grid.clone(),
        intervals,
        clearance: min_clearance,
        pairs,
        replicas: config.replicas,
        experiments,
        sample_n,
        norm_slack: config.norm_slack,
        split_epsilon: config.split_epsilon,
        split_n,
        split_slack: config.split_slack,
        moment_ns: config.moment_ns.clone(),
        moment_rs: config.moment_rs.clone(),
        moment_replicas: config.moment_replicas,
        moment_z_bound: config.moment_z_bound,
        beta_ns: config.beta_ns.clone(),
        beta_draws: config.beta_draws,
        estimate_n,
        estimate_threshold: config.estimate_threshold,
        cayley_n: config.cayley_n,
        cayley_replicas: config.cayley_replicas,
        converge_pass_fraction: config.converge_pass_fraction,
        converge_sigma_err_max: config.converge_sigma_err_max,
        converge_require_median_decrease: config.converge_require_median_decrease,
    })
}

fn default_pass_fraction() -> f64 {
    0.95
}
fn default_sigma_err_max() -> f64 {
    0.2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_is_a_full_default_config() {
        let c = RunConfig::default();
        assert_eq!(c.n_grid, DEFAULT_N_GRID.to_vec());
        assert_eq!(c.pairs, vec![(1, 1), (1, 2)]);
        assert_eq!(c.experiments.len(), 7);
        let r = resolve(&c).unwrap();
        assert_eq!(r.pairs, vec![(0, 0), (0, 1)]);
        assert_eq!(r.sample_n, 512);
        assert_eq!(r.params.points(), &[2.0, -1.0]);
        assert_eq!(serde_json::from_str::<RunConfig>(r#"{"params": {}}"#)
            .unwrap()
            .params
            .points
            .len(), 0);
    }

    #[test]
    fn unknown_field_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"n_gird": [8]}"#).unwrap_err();
        assert!(err.to_string().contains("n_gird"));
    }

    #[test]
    fn zero_pair_sentinel_dropped_and_half_sentinel_rejected() {
        let mut c = RunConfig::default();
        c.pairs = vec![(0, 0), (2, 3)];
        assert_eq!(resolve(&c).unwrap().pairs, vec![(1, 2)]);
        c.pairs = vec![(0, 1)];
        assert!(resolve(&c).unwrap_err().contains("1-based"));
    }

    #[test]
    fn interval_on_atom_rejected_by_per_interval_clearance() {
        let mut c = RunConfig::default();
        c.params = RawParams {
            points: vec![2.0, -1.0],
            ..RawParams::default()
        };
        c.intervals = vec![IntervalSpec {
            lo: 0.5,
            hi: 2.0,
            lo_closed: true,
            hi_closed: true,
            clearance: None,
        }];
        let err = resolve(&c).unwrap_err();
        assert!(err.contains("interval [0.5, 2]"), "{err}");
    }

    #[test]
    fn straddling_interval_rejected() {
        let mut c = RunConfig::default();
        c.intervals = vec![IntervalSpec {
            lo: -1.0,
            hi: 1.0,
            lo_closed: false,
            hi_closed: false,
            clearance: None,
        }];
        assert!(resolve(&c).unwrap_err().contains("straddles"));
    }
}
