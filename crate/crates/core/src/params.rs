//! Ensemble parameters (gamma1, gamma2, point configuration) in a canonical
//! validated form.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use thiserror::Error;

/// Parameter validation and tail-truncation failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("gamma2 must be nonnegative, got {gamma2}")]
    NegativeGaussianComponent { gamma2: f64 },
    #[error("point at input position {index} is zero")]
    ZeroPoint { index: usize },
    #[error("non-finite value in {field}")]
    NonFinite { field: &'static str },
    #[error("tail_bound must be nonnegative, got {bound}")]
    NegativeTailBound { bound: f64 },
    #[error("square sum of c/l^{exponent} diverges; exponent must exceed 1/2")]
    DivergentTail { exponent: f64 },
    #[error("tail tolerance must be positive, got {tol}")]
    InvalidTolerance { tol: f64 },
}

/// Power-law tail request: points c/l^exponent truncated once the discarded
/// square sum is provably below tol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTailSpec {
    pub c: f64,
    pub exponent: f64,
    pub tol: f64,
}

/// Unvalidated parameter set as read from configuration.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    #[serde(default)]
    pub gamma1: f64,
    #[serde(default)]
    pub gamma2: f64,
    #[serde(default)]
    pub points: Vec<f64>,
    /// Appended after the explicit points.
    #[serde(default)]
    pub tail: Option<PowerTailSpec>,
    /// Square-sum budget for points not represented explicitly.
    #[serde(default)]
    pub tail_bound: Option<f64>,
}

/// Explicit truncation of a power-law point sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTail {
    /// c/l^exponent for l = 1..=cutoff.
    pub points: Vec<f64>,
    /// Integral bound on the square sum of the discarded remainder.
    pub tail_bound: f64,
}

/// Validated parameters. Points are sorted by decreasing modulus, positive
/// before negative at equal modulus, input order kept within exact ties.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicParams {
    gamma1: f64,
    gamma2: f64,
    points: Vec<f64>,
    tail_bound: f64,
    sum_sq: f64,
}

fn canonical_cmp(a: &f64, b: &f64) -> Ordering {
    b.abs()
        .partial_cmp(&a.abs())
        .unwrap()
        .then(b.partial_cmp(a).unwrap())
}

impl ErgodicParams {
    /// Checks and canonicalizes a raw parameter set. Idempotent: feeding the
    /// canonical form back through `to_raw` reproduces it exactly.
    pub fn validate(raw: &RawParams) -> Result<Self, ParamsError> {
        if !raw.gamma1.is_finite() {
            return Err(ParamsError::NonFinite { field: "gamma1" });
        }
        if !raw.gamma2.is_finite() {
            return Err(ParamsError::NonFinite { field: "gamma2" });
        }
        if raw.gamma2 < 0.0 {
            return Err(ParamsError::NegativeGaussianComponent { gamma2: raw.gamma2 });
        }
        let mut tail_bound = raw.tail_bound.unwrap_or(0.0);
        if !tail_bound.is_finite() {
            return Err(ParamsError::NonFinite { field: "tail_bound" });
        }
        if tail_bound < 0.0 {
            return Err(ParamsError::NegativeTailBound { bound: tail_bound });
        }
        let mut points = raw.points.clone();
        if let Some(spec) = raw.tail {
            let frag = truncate_power_tail(spec.c, spec.exponent, spec.tol)?;
            points.extend(frag.points);
            tail_bound += frag.tail_bound;
        }
        for (index, x) in points.iter().enumerate() {
            if !x.is_finite() {
                return Err(ParamsError::NonFinite { field: "points" });
            }
            if *x == 0.0 {
                return Err(ParamsError::ZeroPoint { index });
            }
        }
        points.sort_by(canonical_cmp);
        // Summed in canonical order so equal parameter sets share bits.
        let sum_sq = points.iter().map(|x| x * x).sum();
        Ok(ErgodicParams {
            gamma1: raw.gamma1,
            gamma2: raw.gamma2,
            points,
            tail_bound,
            sum_sq,
        })
    }

    /// Raw view of the canonical form, with the tail already materialized.
    pub fn to_raw(&self) -> RawParams {
        RawParams {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            points: self.points.clone(),
            tail: None,
            tail_bound: Some(self.tail_bound),
        }
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    /// Canonically ordered point configuration.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Square sum of the represented points.
    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// gamma1 minus the sum of all points: the diagonal compensator folded
    /// into one scalar. With gamma2 = 0 the non-outlier eigenvalues of M_n
    /// sit exactly here.
    pub fn bulk_shift(&self) -> f64 {
        self.gamma1 - self.points.iter().sum::<f64>()
    }
}

/// Truncates x_l = c/l^exponent at the minimal cutoff L whose integral bound
/// on the discarded square sum, c^2 L^(1-2e) / (2e-1), is at most tol.
pub fn truncate_power_tail(c: f64, exponent: f64, tol: f64) -> Result<PowerTail, ParamsError> {
    if !c.is_finite() {
        return Err(ParamsError::NonFinite { field: "tail.c" });
    }
    if !exponent.is_finite() {
        return Err(ParamsError::NonFinite { field: "tail.exponent" });
    }
    if !tol.is_finite() {
        return Err(ParamsError::NonFinite { field: "tail.tol" });
    }
    if tol <= 0.0 {
        return Err(ParamsError::InvalidTolerance { tol });
    }
    if exponent <= 0.5 {
        return Err(ParamsError::DivergentTail { exponent });
    }
    if c == 0.0 {
        return Ok(PowerTail {
            points: Vec::new(),
            tail_bound: 0.0,
        });
    }
    let q = 2.0 * exponent - 1.0;
    let bound = |l: f64| c * c * l.powf(-q) / q;
    // Analytic candidate, then integer fixup against the exact bound.
    let mut l = (c * c / (tol * q)).powf(1.0 / q).ceil().max(1.0);
    while l > 1.0 && bound(l - 1.0) <= tol {
        l -= 1.0;
    }
    while bound(l) > tol {
        l += 1.0;
    }
    let cutoff = l as usize;
    let points = (1..=cutoff)
        .map(|k| c / (k as f64).powf(exponent))
        .collect();
    Ok(PowerTail {
        points,
        tail_bound: bound(l),
    })
}
