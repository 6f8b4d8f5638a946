//! Finitely atomic measures on the real line with complex weights.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Counting measures carry real nonnegative weights (multiplicities);
/// projection measures carry complex projection entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    Counting,
    Projection,
}

/// Tolerance on the counting-kind weight invariant.
pub const COUNTING_WEIGHT_TOL: f64 = 1e-12;

/// Interval query failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error(
        "endpoint {endpoint} is {distance:e} from {obstruction}, closer than clearance {clearance:e}"
    )]
    BoundaryTooClose {
        endpoint: f64,
        obstruction: f64,
        distance: f64,
        clearance: f64,
    },
}

/// Real interval with independently open or closed finite endpoints.
/// Unbounded ends are the infinities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default = "default_closed")]
    pub lo_closed: bool,
    #[serde(default = "default_closed")]
    pub hi_closed: bool,
}

fn default_closed() -> bool {
    true
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    /// [lo, +inf).
    pub fn at_least(lo: f64) -> Self {
        Interval::closed(lo, f64::INFINITY)
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_closed { x >= self.lo } else { x > self.lo };
        let below = if self.hi_closed { x <= self.hi } else { x < self.hi };
        above && below
    }

    /// Interior contains 0 strictly between the endpoints.
    pub fn straddles_zero(&self) -> bool {
        self.lo < 0.0 && self.hi > 0.0
    }

    fn finite_endpoints(&self) -> impl Iterator<Item = f64> {
        [self.lo, self.hi].into_iter().filter(|e| e.is_finite())
    }
}

/// Atomic measure with strictly increasing atom locations.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    kind: WeightKind,
    atoms: Vec<(f64, Complex64)>,
}

impl AtomicMeasure {
    /// Builds from unordered atoms; locations within merge_tol of a run's
    /// first location are merged by weight addition. merge_tol = 0 merges
    /// exact duplicates only.
    pub fn from_atoms(
        kind: WeightKind,
        atoms: impl IntoIterator<Item = (f64, Complex64)>,
        merge_tol: f64,
    ) -> Self {
        let mut raw: Vec<(f64, Complex64)> = atoms.into_iter().collect();
        assert!(
            raw.iter().all(|(x, _)| x.is_finite()),
            "atom locations must be finite"
        );
        raw.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut merged: Vec<(f64, Complex64)> = Vec::with_capacity(raw.len());
        for (x, w) in raw {
            match merged.last_mut() {
                Some((anchor, acc)) if x - *anchor <= merge_tol => *acc += w,
                _ => merged.push((x, w)),
            }
        }
        if kind == WeightKind::Counting {
            for (x, w) in &merged {
                assert!(
                    w.im.abs() <= COUNTING_WEIGHT_TOL && w.re >= -COUNTING_WEIGHT_TOL,
                    "counting weight at {x} is not a nonnegative real: {w}"
                );
            }
        }
        AtomicMeasure {
            kind,
            atoms: merged,
        }
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// Atoms in strictly increasing location order.
    pub fn atoms(&self) -> &[(f64, Complex64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> Complex64 {
        self.atoms.iter().map(|(_, w)| w).sum()
    }

    /// Diameter of the support together with the origin; the scale the
    /// default query clearance is derived from.
    pub fn support_diameter_with_origin(&self) -> f64 {
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        for (x, _) in &self.atoms {
            lo = lo.min(*x);
            hi = hi.max(*x);
        }
        hi - lo
    }

    /// Total weight inside the interval. Rejects the query if any atom, or
    /// the origin when exclude_zero is set, lies within clearance of a
    /// finite endpoint; with clearance 0 nothing is rejected and exact
    /// endpoint hits are decided by the open/closed flags.
    pub fn query(
        &self,
        interval: &Interval,
        clearance: f64,
        exclude_zero: bool,
    ) -> Result<Complex64, MeasureError> {
        for e in interval.finite_endpoints() {
            let mut obstructions = self.atoms.iter().map(|(x, _)| *x);
            let check = |o: f64| -> Result<(), MeasureError> {
                let distance = (e - o).abs();
                if distance < clearance {
                    return Err(MeasureError::BoundaryTooClose {
                        endpoint: e,
                        obstruction: o,
                        distance,
                        clearance,
                    });
                }
                Ok(())
            };
            if let Some(err) = obstructions.find_map(|o| check(o).err()) {
                return Err(err);
            }
            if exclude_zero {
                check(0.0)?;
            }
        }
        Ok(self
            .atoms
            .iter()
            .filter(|(x, _)| interval.contains(*x))
            .map(|(_, w)| w)
            .sum())
    }
}
