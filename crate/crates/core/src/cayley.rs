//! Cayley transform bridge between Hermitian minors and unitary matrices.
//!
//! x maps to (x - i)/(x + i), sending the real line onto the unit circle
//! minus the point 1. Matrices transform by the same rational function and
//! keep their eigenvectors.

use crate::sampler::HermitianMinor;
use crate::spectral::EigenDecomposition;
use crate::textio::{self, TextMatrixError};
use nalgebra::linalg::{SymmetricEigen, LU};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

/// Residual bound on the linear solves, relative to max(1, input norm).
pub const CAYLEY_RESIDUAL_TOL: f64 = 1e-8;
/// Unitarity bound ||U* U - I||_F <= tol * n.
pub const UNITARITY_TOL_PER_N: f64 = 1e-10;
/// Minimum distance of the point 1 from the spectrum for inversion.
pub const UNIT_EIGENVALUE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CayleyError {
    #[error("matrix is not unitary: defect {defect:e} exceeds {tol:e}")]
    NotUnitary { defect: f64, tol: f64 },
    #[error("spectrum touches 1: distance {distance:e} below {tol:e}, inverse transform undefined")]
    UnitEigenvalue { distance: f64, tol: f64 },
    #[error("linear solve failed: {detail}")]
    SolveFailure { detail: String },
    #[error(transparent)]
    BadText(#[from] TextMatrixError),
}

/// Unitary matrix with a verified orthonormality defect.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMinor {
    n: usize,
    entries: DMatrix<Complex64>,
}

impl UnitaryMinor {
    pub fn from_entries(entries: DMatrix<Complex64>) -> Result<Self, CayleyError> {
        assert_eq!(entries.nrows(), entries.ncols(), "unitary matrix must be square");
        let n = entries.nrows();
        let defect = unitarity_defect_of(&entries);
        let tol = UNITARITY_TOL_PER_N * n as f64;
        if defect > tol {
            return Err(CayleyError::NotUnitary { defect, tol });
        }
        Ok(UnitaryMinor { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// ||U* U - I||_F.
    pub fn unitarity_defect(&self) -> f64 {
        unitarity_defect_of(&self.entries)
    }

    pub fn write_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        textio::write_matrix(w, Some("unitary"), &self.entries)
    }

    pub fn parse_text(text: &str) -> Result<Self, CayleyError> {
        let entries = textio::parse_matrix(text, Some("unitary"))?;
        UnitaryMinor::from_entries(entries)
    }
}

fn unitarity_defect_of(entries: &DMatrix<Complex64>) -> f64 {
    let mut gram = entries.ad_mul(entries);
    for i in 0..gram.nrows() {
        gram[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    gram.norm()
}

/// Image of a real eigenvalue on the unit circle.
pub fn cayley_point(lambda: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    (Complex64::new(lambda, 0.0) - i) / (Complex64::new(lambda, 0.0) + i)
}

/// Angle of `cayley_point(lambda)` in (-pi, pi]. The image of 0 is -1,
/// whose angle is fixed to +pi; the naive formula carries the sign of the
/// -0.0 numerator there and flips to -pi.
pub fn eigen_correspondence(lambda: f64) -> f64 {
    if lambda == 0.0 {
        return PI;
    }
    (-2.0 * lambda).atan2(lambda * lambda - 1.0)
}

/// (M - iI)(M + iI)^{-1}, with solve residual and unitarity verified.
pub fn cayley(minor: &HermitianMinor) -> Result<UnitaryMinor, CayleyError> {
    let n = minor.n();
    let id = DMatrix::<Complex64>::identity(n, n);
    let i = Complex64::new(0.0, 1.0);
    let a = minor.entries() + &id * i;
    let b = minor.entries() - &id * i;
    let u = LU::new(a.clone())
        .solve(&b)
        .ok_or_else(|| CayleyError::SolveFailure {
            detail: "M + iI is numerically singular".to_string(),
        })?;
    let residual = (&a * &u - &b).norm();
    let tol = CAYLEY_RESIDUAL_TOL * minor.frobenius().max(1.0);
    if residual > tol {
        return Err(CayleyError::SolveFailure {
            detail: format!("solve residual {residual:e} exceeds {tol:e}"),
        });
    }
    UnitaryMinor::from_entries(u)
}

/// i(I + U)(I - U)^{-1}, defined when the spectrum stays away from 1.
/// The result is Hermitized entrywise before packaging.
pub fn inverse_cayley(u: &UnitaryMinor) -> Result<HermitianMinor, CayleyError> {
    let n = u.n();
    let id = DMatrix::<Complex64>::identity(n, n);
    let one_minus = &id - u.entries();
    let one_plus = &id + u.entries();
    let gram = one_minus.ad_mul(&one_minus);
    let se = SymmetricEigen::try_new(gram, f64::EPSILON, 100 * n).ok_or_else(|| {
        CayleyError::SolveFailure {
            detail: "distance-to-1 eigenproblem did not converge".to_string(),
        }
    })?;
    let min_eig = se.eigenvalues.iter().fold(f64::INFINITY, |acc, &x| acc.min(x));
    let distance = min_eig.max(0.0).sqrt();
    if distance < UNIT_EIGENVALUE_TOL {
        return Err(CayleyError::UnitEigenvalue {
            distance,
            tol: UNIT_EIGENVALUE_TOL,
        });
    }
    let y = LU::new(one_minus.clone())
        .solve(&one_plus)
        .ok_or_else(|| CayleyError::SolveFailure {
            detail: "I - U is numerically singular".to_string(),
        })?;
    let m_raw = y * Complex64::new(0.0, 1.0);
    let residual = (&one_minus * &m_raw - &one_plus * Complex64::new(0.0, 1.0)).norm();
    let tol = CAYLEY_RESIDUAL_TOL * m_raw.norm().max(1.0);
    if residual > tol {
        return Err(CayleyError::SolveFailure {
            detail: format!("solve residual {residual:e} exceeds {tol:e}"),
        });
    }
    let herm = (&m_raw + m_raw.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(HermitianMinor::from_entries(herm).expect("entrywise Hermitization is exact"))
}

/// Eigenangle of each eigenvalue in decomposition order, paired with its
/// eigenvector index.
pub fn eigen_angles(dec: &EigenDecomposition) -> Vec<(f64, usize)> {
    dec.eigenvalues()
        .iter()
        .enumerate()
        .map(|(idx, &lambda)| (eigen_correspondence(lambda), idx))
        .collect()
}

/// Worst-case eigenvector transport defect: max over the decomposition of
/// ||U v - f(lambda) v|| / (1 + |lambda|) with f the scalar transform.
/// Small values certify both the eigenvalue correspondence and eigenvector
/// preservation.
pub fn correspondence_defect(dec: &EigenDecomposition, u: &UnitaryMinor) -> f64 {
    assert_eq!(dec.n(), u.n(), "dimension mismatch");
    let mut worst = 0.0f64;
    for (idx, &lambda) in dec.eigenvalues().iter().enumerate() {
        let v = dec.vectors().column(idx);
        let image = u.entries() * v - v * cayley_point(lambda);
        worst = worst.max(image.norm() / (1.0 + lambda.abs()));
    }
    worst
}
