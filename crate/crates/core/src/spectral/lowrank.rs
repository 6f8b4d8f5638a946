//! Fast spectrum for samples with no Gaussian component.
//!
//! With gamma2 = 0 the minor is bulk_shift * I plus a rank-p update
//! sum_l x_l xi_l xi_l*, so its spectrum is bulk_shift plus the p
//! eigenvalues of the small matrix B[l, m] = x_l <xi_l, xi_m> padded
//! with n - p zeros. B is not Hermitian but has real spectrum.

use super::{eig_hermitian, SpectralError, LOWRANK_IMAG_TOL};
use crate::sampler::CoupledSample;
use nalgebra::linalg::Schur;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Unsorted eigenvalues of the reduced matrix B, one per point: the
/// spectrum of the uncentered point part restricted to its range. Requires
/// gamma2 = 0 and n >= p.
pub fn lowrank_point_eigenvalues(
    sample: &CoupledSample,
    n: usize,
) -> Result<Vec<f64>, SpectralError> {
    let params = sample.params();
    if params.gamma2() != 0.0 {
        return Err(SpectralError::GaussianPartPresent {
            gamma2: params.gamma2(),
        });
    }
    let points = params.points();
    let p = points.len();
    assert!(n >= p, "reduction needs n >= p, got n = {n}, p = {p}");
    if p == 0 {
        return Ok(Vec::new());
    }

    let fields = DMatrix::<Complex64>::from_fn(n, p, |j, l| sample.xi(l, j));
    let mut b = fields.ad_mul(&fields);
    for (l, &x) in points.iter().enumerate() {
        let scale = Complex64::new(x, 0.0);
        for m in 0..p {
            b[(l, m)] *= scale;
        }
    }
    let b_scale = b.norm().max(1.0);

    let fail = |detail: String| SpectralError::ConvergenceFailure { detail };
    let eigs = Schur::try_new(b, f64::EPSILON, 100 * p)
        .and_then(|s| s.eigenvalues())
        .ok_or_else(|| fail("reduced matrix Schur form did not converge".to_string()))?;

    let imag_tol = LOWRANK_IMAG_TOL * b_scale;
    let mut out = Vec::with_capacity(p);
    for z in eigs.iter() {
        if !z.re.is_finite() || z.im.abs() > imag_tol {
            return Err(fail(format!(
                "reduced matrix eigenvalue {z} is not real within {imag_tol:e}"
            )));
        }
        out.push(z.re);
    }
    Ok(out)
}

/// Sorted spectrum of the n-th minor computed through the reduced p x p
/// matrix instead of a dense decomposition. Requires gamma2 = 0.
pub fn lowrank_spectrum(sample: &CoupledSample, n: usize) -> Result<Vec<f64>, SpectralError> {
    let params = sample.params();
    let p = params.points().len();
    if n < p && params.gamma2() == 0.0 {
        // The reduction saves nothing here; the dense path is exact.
        let dec = eig_hermitian(&sample.minor(n))?;
        return Ok(dec.eigenvalues().to_vec());
    }
    let shift = params.bulk_shift();
    let mut spectrum = lowrank_point_eigenvalues(sample, n)?;
    for v in spectrum.iter_mut() {
        *v += shift;
    }
    spectrum.resize(n, shift);
    spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(spectrum)
}
