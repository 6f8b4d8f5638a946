//! Hermitian eigendecomposition and the spectral measures at scale lambda/n.

mod lowrank;
mod measure;

pub use lowrank::{lowrank_point_eigenvalues, lowrank_spectrum};
pub use measure::{
    AtomicMeasure, Interval, MeasureError, WeightKind, COUNTING_WEIGHT_TOL,
};

use crate::sampler::HermitianMinor;
use nalgebra::linalg::{SymmetricEigen, LU};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

/// Eigenvalue gap below this fraction of the spectral diameter groups into
/// one multiplicity cluster.
pub const DEFAULT_MULT_TOL: f64 = 1e-8;
/// Residual bound ||M V - V D||_F <= tol * max(1, ||M||_F). The QR sweep
/// lands near 1.3e-9 relative on dense Gaussian minors, so the default
/// keeps several times that in margin.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
/// Orthonormality bound ||V* V - I||_F <= tol * n.
pub const DEFAULT_ORTH_TOL_PER_N: f64 = 1e-10;
/// Modulus a coordinate needs, relative to ||V||/sqrt(n), to anchor the phase.
pub const DEFAULT_PHASE_TOL: f64 = 1e-6;
/// Imaginary part allowed on the eigenvalues of the reduced point-part matrix.
pub const LOWRANK_IMAG_TOL: f64 = 1e-8;

/// Decomposition and eigenvector extraction failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("eigensolver failed to converge: {detail}")]
    ConvergenceFailure { detail: String },
    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("eigenvalue of rank {rank} lies in a multiplicity group of size {multiplicity}")]
    DegenerateEigenvalue { rank: usize, multiplicity: usize },
    #[error("no coordinate of modulus above {tol:e} to anchor the phase")]
    NoPhaseAnchor { tol: f64 },
    #[error("low-rank path requires gamma2 = 0, got {gamma2}")]
    GaussianPartPresent { gamma2: f64 },
}

/// Which end of the spectrum a rank counts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Largest,
    Smallest,
}

/// Full eigendecomposition of a Hermitian minor, eigenvalues ascending,
/// eigenvector columns aligned and orthonormal, near-equal eigenvalues
/// clustered into multiplicity groups.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    n: usize,
    eigenvalues: Vec<f64>,
    vectors: DMatrix<Complex64>,
    groups: Vec<Range<usize>>,
    residual_defect: f64,
    orth_defect: f64,
}

impl EigenDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are unit eigenvectors in eigenvalue order.
    pub fn vectors(&self) -> &DMatrix<Complex64> {
        &self.vectors
    }

    /// Contiguous index ranges of eigenvalues treated as one multiplicity.
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn group_mean(&self, group: &Range<usize>) -> f64 {
        let sum: f64 = self.eigenvalues[group.clone()].iter().sum();
        sum / group.len() as f64
    }

    /// ||M V - V D||_F recorded at construction.
    pub fn residual_defect(&self) -> f64 {
        self.residual_defect
    }

    /// ||V* V - I||_F recorded at construction.
    pub fn orth_defect(&self) -> f64 {
        self.orth_defect
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    /// Orthogonal projector onto the span of a multiplicity group.
    pub fn projector(&self, group: &Range<usize>) -> DMatrix<Complex64> {
        let block = self.vectors.columns(group.start, group.len());
        &block * block.adjoint()
    }
}

/// Decomposes a Hermitian minor and verifies the residual and orthonormality
/// bounds on the result, at the default residual tolerance.
pub fn eig_hermitian(minor: &HermitianMinor) -> Result<EigenDecomposition, SpectralError> {
    eig_hermitian_with(minor, DEFAULT_RESIDUAL_TOL)
}

/// Same decomposition with an explicit residual tolerance, relative to
/// max(1, ||M||_F).
pub fn eig_hermitian_with(
    minor: &HermitianMinor,
    tol_resid: f64,
) -> Result<EigenDecomposition, SpectralError> {
    let n = minor.n();
    let m = minor.entries();
    let fail = |detail: &str| SpectralError::ConvergenceFailure {
        detail: detail.to_string(),
    };
    if n == 0 {
        return Err(fail("empty matrix"));
    }
    let se = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100 * n)
        .ok_or_else(|| fail("iteration limit exceeded"))?;
    if se.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(fail("non-finite eigenvalue"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].partial_cmp(&se.eigenvalues[b]).unwrap());
    let mut eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        vectors.set_column(new, &se.eigenvectors.column(old));
    }

    let mut groups = group_by_gaps(&eigenvalues);

    let resid_tol = tol_resid * minor.frobenius().max(1.0);
    let mut col_resid = column_residuals(m, &vectors, &eigenvalues);
    let mut residual_defect = total_residual(&col_resid);
    if residual_defect > resid_tol {
        // The QR sweep occasionally leaves a single eigenvector polluted.
        // One inverse-iteration step per flagged column restores it.
        let col_gate = resid_tol / (2.0 * (n as f64).sqrt());
        for i in 0..n {
            if col_resid[i] > col_gate {
                refine_column(m, &mut vectors, &mut eigenvalues, &groups, i);
            }
        }
        groups = group_by_gaps(&eigenvalues);
        col_resid = column_residuals(m, &vectors, &eigenvalues);
        residual_defect = total_residual(&col_resid);
    }
    if residual_defect > resid_tol {
        return Err(fail(&format!(
            "residual {residual_defect:e} exceeds {resid_tol:e}"
        )));
    }
    let mut gram = vectors.ad_mul(&vectors);
    for i in 0..n {
        gram[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    let orth_defect = gram.norm();
    let orth_tol = DEFAULT_ORTH_TOL_PER_N * n as f64;
    if orth_defect > orth_tol {
        return Err(fail(&format!(
            "orthonormality defect {orth_defect:e} exceeds {orth_tol:e}"
        )));
    }

    Ok(EigenDecomposition {
        n,
        eigenvalues,
        vectors,
        groups,
        residual_defect,
        orth_defect,
    })
}

/// Maximal runs of consecutive eigenvalues with gaps within the multiplicity
/// tolerance, relative to the spectral diameter.
fn group_by_gaps(eigenvalues: &[f64]) -> Vec<Range<usize>> {
    let n = eigenvalues.len();
    let gap_tol = DEFAULT_MULT_TOL * (eigenvalues[n - 1] - eigenvalues[0]);
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..n {
        if eigenvalues[i] - eigenvalues[i - 1] > gap_tol {
            groups.push(start..i);
            start = i;
        }
    }
    groups.push(start..n);
    groups
}

fn column_residuals(
    m: &DMatrix<Complex64>,
    vectors: &DMatrix<Complex64>,
    eigenvalues: &[f64],
) -> Vec<f64> {
    let mut residual = m * vectors;
    for (i, &lambda) in eigenvalues.iter().enumerate() {
        let mut col = residual.column_mut(i);
        col.axpy(
            Complex64::new(-lambda, 0.0),
            &vectors.column(i),
            Complex64::new(1.0, 0.0),
        );
    }
    (0..eigenvalues.len())
        .map(|i| residual.column(i).norm())
        .collect()
}

fn total_residual(col_resid: &[f64]) -> f64 {
    col_resid.iter().map(|r| r * r).sum::<f64>().sqrt()
}

/// One inverse-iteration step for a column the QR sweep left inaccurate,
/// re-orthogonalized within its multiplicity group, with a Rayleigh update
/// of the eigenvalue guarded so the sorted order is preserved. Keeps the
/// original column when the solve or the projection degenerates.
fn refine_column(
    m: &DMatrix<Complex64>,
    vectors: &mut DMatrix<Complex64>,
    eigenvalues: &mut [f64],
    groups: &[Range<usize>],
    i: usize,
) {
    let n = m.nrows();
    let lambda = eigenvalues[i];
    let nudge = 1e-13 * m.norm().max(1.0);
    let seed = vectors.column(i).into_owned();
    let solved =
        shifted_solve(m, lambda, &seed).or_else(|| shifted_solve(m, lambda + nudge, &seed));
    let Some(mut x) = solved else { return };
    let group = groups
        .iter()
        .find(|g| g.contains(&i))
        .cloned()
        .unwrap_or(i..i + 1);
    for j in group {
        if j == i {
            continue;
        }
        let c = vectors.column(j).dotc(&x);
        x.axpy(-c, &vectors.column(j).into_owned(), Complex64::new(1.0, 0.0));
    }
    let norm = x.norm();
    if !(norm > 0.5) {
        return;
    }
    x /= Complex64::new(norm, 0.0);
    let rq = x.dotc(&(m * &x)).re;
    let lo_ok = i == 0 || eigenvalues[i - 1] <= rq;
    let hi_ok = i + 1 == n || rq <= eigenvalues[i + 1];
    if lo_ok && hi_ok {
        eigenvalues[i] = rq;
    }
    vectors.set_column(i, &x);
}

fn shifted_solve(
    m: &DMatrix<Complex64>,
    shift: f64,
    v: &DVector<Complex64>,
) -> Option<DVector<Complex64>> {
    let mut a = m.clone();
    for d in 0..m.nrows() {
        a[(d, d)] -= Complex64::new(shift, 0.0);
    }
    let x = LU::new(a).solve(v)?;
    let norm = x.norm();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    Some(x / Complex64::new(norm, 0.0))
}

/// Counting measure of eigenvalue multiplicities at scale lambda/n: one atom
/// per multiplicity group at the group mean over n, weighted by group size.
/// Total mass is exactly n.
pub fn lambda_measure(dec: &EigenDecomposition) -> AtomicMeasure {
    let n = dec.n() as f64;
    let atoms = dec.groups().iter().map(|g| {
        (
            dec.group_mean(g) / n,
            Complex64::new(g.len() as f64, 0.0),
        )
    });
    AtomicMeasure::from_atoms(WeightKind::Counting, atoms, 0.0)
}

/// Projection measure for the coordinate pair (a, b): each multiplicity
/// group contributes n times the (a, b) entry of its spectral projector.
/// Total mass is n on the diagonal pairs and 0 off them.
pub fn sigma_measure(
    dec: &EigenDecomposition,
    a: usize,
    b: usize,
) -> Result<AtomicMeasure, SpectralError> {
    let n = dec.n();
    for idx in [a, b] {
        if idx >= n {
            return Err(SpectralError::IndexOutOfRange { index: idx, n });
        }
    }
    let scale = n as f64;
    let atoms = dec.groups().iter().map(|g| {
        let weight: Complex64 = g
            .clone()
            .map(|i| dec.vectors()[(a, i)] * dec.vectors()[(b, i)].conj())
            .sum();
        (dec.group_mean(g) / scale, scale * weight)
    });
    Ok(AtomicMeasure::from_atoms(WeightKind::Projection, atoms, 0.0))
}

/// Eigenvector of the rank-th extreme simple eigenvalue (rank 0 is the
/// extreme itself), scaled to norm sqrt(n), with the first coordinate of
/// modulus above tau_phase times ||V||/sqrt(n) rotated to the positive reals.
pub fn normalized_eigvec(
    dec: &EigenDecomposition,
    rank: usize,
    side: Side,
    tau_phase: f64,
) -> Result<DVector<Complex64>, SpectralError> {
    let n = dec.n();
    if rank >= n {
        return Err(SpectralError::IndexOutOfRange { index: rank, n });
    }
    let idx = match side {
        Side::Largest => n - 1 - rank,
        Side::Smallest => rank,
    };
    let group = dec
        .groups()
        .iter()
        .find(|g| g.contains(&idx))
        .expect("groups partition the index range");
    if group.len() != 1 {
        return Err(SpectralError::DegenerateEigenvalue {
            rank,
            multiplicity: group.len(),
        });
    }
    let sqrt_n = (n as f64).sqrt();
    let mut v: DVector<Complex64> = dec.vectors().column(idx).into_owned() * Complex64::new(sqrt_n, 0.0);
    let threshold = tau_phase * v.norm() / sqrt_n;
    let anchor = v
        .iter()
        .find(|z| z.norm() > threshold)
        .copied()
        .ok_or(SpectralError::NoPhaseAnchor { tol: tau_phase })?;
    let phase = anchor / anchor.norm();
    for z in v.iter_mut() {
        *z = *z * phase.conj();
    }
    Ok(v)
}
