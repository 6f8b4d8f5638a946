//! Exact limit objects the finite-n spectral measures converge to.

use crate::params::ErgodicParams;
use crate::sampler::CoupledSample;
use crate::spectral::{AtomicMeasure, Side, WeightKind};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

/// Failures when resolving a point by extreme rank.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LimitsError {
    #[error("no point of rank {rank} on the {side:?} side, {available} candidates")]
    NoSuchPoint {
        rank: usize,
        side: Side,
        available: usize,
    },
    #[error("point value {value} has multiplicity {multiplicity}, eigenvector limit undefined")]
    NotUnique { value: f64, multiplicity: usize },
    #[error("coupling vector {point_index} has zero first coordinate, phase undefined")]
    PhaseUndefined { point_index: usize },
}

/// Limiting counting measure: one unit atom per point, repeats merged.
pub fn lambda_limit(params: &ErgodicParams) -> AtomicMeasure {
    let atoms = params
        .points()
        .iter()
        .map(|&x| (x, Complex64::new(1.0, 0.0)));
    AtomicMeasure::from_atoms(WeightKind::Counting, atoms, 0.0)
}

/// Limiting projection measure for the pair (a, b): the atom at x_l carries
/// xi_a conj(xi_b) of coupling vector l, summed over coincident points.
pub fn sigma_limit(sample: &CoupledSample, a: usize, b: usize) -> AtomicMeasure {
    let atoms = sample
        .params()
        .points()
        .iter()
        .enumerate()
        .map(|(l, &x)| (x, sample.xi(l, a) * sample.xi(l, b).conj()));
    AtomicMeasure::from_atoms(WeightKind::Projection, atoms, 0.0)
}

/// Index and value of the rank-th extreme point (rank 0 is the extreme).
/// The largest side requires a positive value, the smallest a negative one,
/// and the value must be unique among the stored points.
pub fn point_of_rank(
    params: &ErgodicParams,
    rank: usize,
    side: Side,
) -> Result<(usize, f64), LimitsError> {
    let points = params.points();
    let mut sorted: Vec<f64> = points.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if side == Side::Largest {
        sorted.reverse();
    }
    let missing = |available| LimitsError::NoSuchPoint {
        rank,
        side,
        available,
    };
    let value = *sorted.get(rank).ok_or(missing(sorted.len()))?;
    let sign_ok = match side {
        Side::Largest => value > 0.0,
        Side::Smallest => value < 0.0,
    };
    if !sign_ok {
        let available = match side {
            Side::Largest => sorted.iter().filter(|&&x| x > 0.0).count(),
            Side::Smallest => sorted.iter().filter(|&&x| x < 0.0).count(),
        };
        return Err(missing(available));
    }
    let multiplicity = points.iter().filter(|&&x| x == value).count();
    if multiplicity != 1 {
        return Err(LimitsError::NotUnique {
            value,
            multiplicity,
        });
    }
    let ell = points.iter().position(|&x| x == value).unwrap();
    Ok((ell, value))
}

/// Limiting eigenvector coordinates for the rank-th extreme point: the
/// coupling vector rotated so its first coordinate is real positive.
pub fn eigvec_limit(
    sample: &CoupledSample,
    rank: usize,
    side: Side,
    coords: &[usize],
) -> Result<Vec<Complex64>, LimitsError> {
    let (ell, _) = point_of_rank(sample.params(), rank, side)?;
    let anchor = sample.xi(ell, 0);
    if anchor.norm() == 0.0 {
        return Err(LimitsError::PhaseUndefined { point_index: ell });
    }
    let phase = (anchor / anchor.norm()).conj();
    Ok(coords
        .iter()
        .map(|&a| sample.xi(ell, a) * phase)
        .collect())
}

/// Upper bound on limsup of the centered minor norm over n.
pub fn norm_bound(params: &ErgodicParams) -> f64 {
    (params.sum_sq() + params.tail_bound()).sqrt()
}

/// The limit objects of one realized sample, bundled for reporting.
#[derive(Debug, Clone)]
pub struct LimitPack {
    params: ErgodicParams,
    lambda_inf: AtomicMeasure,
    sigma_inf: BTreeMap<(usize, usize), AtomicMeasure>,
    norm_bound: f64,
}

impl LimitPack {
    pub fn build(sample: &CoupledSample, pairs: &[(usize, usize)]) -> Self {
        let params = sample.params().clone();
        let lambda_inf = lambda_limit(&params);
        let sigma_inf = pairs
            .iter()
            .map(|&(a, b)| ((a, b), sigma_limit(sample, a, b)))
            .collect();
        let norm_bound = norm_bound(&params);
        debug_assert!(
            lambda_inf
                .atoms()
                .iter()
                .all(|&(x, _)| x.abs() <= norm_bound + 1e-12),
            "extreme point outside the norm bound"
        );
        LimitPack {
            params,
            lambda_inf,
            sigma_inf,
            norm_bound,
        }
    }

    pub fn lambda_inf(&self) -> &AtomicMeasure {
        &self.lambda_inf
    }

    pub fn sigma_inf(&self, a: usize, b: usize) -> Option<&AtomicMeasure> {
        self.sigma_inf.get(&(a, b))
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn ell_of_rank(&self, rank: usize, side: Side) -> Result<usize, LimitsError> {
        point_of_rank(&self.params, rank, side).map(|(ell, _)| ell)
    }
}
