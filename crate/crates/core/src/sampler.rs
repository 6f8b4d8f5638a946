//! Deterministic sampling of dimension-coupled Hermitian minors.
//!
//! Every random field value is a pure function of (seed, field kind, indices).
//! Minors of different dimensions from one sample therefore nest exactly:
//! M_n is always the top-left block of M_{n+1}, and evaluation order never
//! changes a value.

use crate::params::ErgodicParams;
use crate::textio::{self, TextMatrixError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, TAU};
use std::io::{self, Write};
use thiserror::Error;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const KIND_GAUSS_DIAG: u64 = 1;
const KIND_GAUSS_OFF: u64 = 2;
const KIND_XI: u64 = 3;
const KIND_HAAR: u64 = 4;

/// Sampling failures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("point index {index} out of range, sample has {count} points")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("invalid draw request: need n >= 2 and count >= 1, got n = {n}, count = {count}")]
    InvalidDrawRequest { n: usize, count: usize },
    #[error(transparent)]
    BadTextMatrix(#[from] TextMatrixError),
    #[error("matrix is not Hermitian at ({j}, {k})")]
    NotHermitian { j: usize, k: usize },
}

/// splitmix64 finalizer, bijective on u64.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replica k. Fixed mixing shared by every experiment driver;
/// mix64(0) = 0, so replica 0 runs on the base seed itself.
pub fn replica_seed(seed: u64, k: u64) -> u64 {
    seed ^ mix64(k)
}

/// Key for one field site. Chained finalizers keep the map free of the
/// index-arithmetic collisions a plain xor would have.
fn site(seed: u64, kind: u64, i: u64, j: u64) -> u64 {
    let mut s = mix64(seed ^ GOLDEN);
    s = mix64(s ^ kind);
    s = mix64(s ^ i);
    mix64(s ^ j)
}

/// Uniform in (0, 1]; never 0, so it is safe under log.
fn unit_open(bits: u64) -> f64 {
    (((bits >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
}

/// Box-Muller pair of independent standard normals for one site key.
fn normal_pair(key: u64) -> (f64, f64) {
    let u1 = unit_open(mix64(key ^ 0x1));
    let u2 = unit_open(mix64(key ^ 0x2));
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}

/// Standard complex Gaussian: independent real and imaginary parts of
/// variance 1/2, so E xi = E xi^2 = 0 and E |xi|^2 = 1.
fn complex_normal(key: u64) -> Complex64 {
    let (a, b) = normal_pair(key);
    Complex64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
}

/// Coordinate j of the l-th coupling vector for a given seed.
pub(crate) fn xi_field(seed: u64, l: usize, j: usize) -> Complex64 {
    complex_normal(site(seed, KIND_XI, l as u64, j as u64))
}

/// Explicit field values replacing the keyed generator, for tests that need
/// closed-form samples.
#[derive(Debug, Clone)]
pub struct InjectedFields {
    /// Hermitian Gaussian block; `None` reads as all zeros.
    pub gauss: Option<DMatrix<Complex64>>,
    /// One row per point, row l holding the leading coordinates of xi^(l).
    pub xi: Vec<Vec<Complex64>>,
}

/// One draw from the ensemble: parameters plus the field source all minors
/// and coupling vectors are read from.
#[derive(Debug, Clone)]
pub struct CoupledSample {
    params: ErgodicParams,
    seed: u64,
    injected: Option<InjectedFields>,
}

impl CoupledSample {
    pub fn new(params: ErgodicParams, seed: u64) -> Self {
        CoupledSample {
            params,
            seed,
            injected: None,
        }
    }

    /// Sample reading every field from explicitly given values.
    pub fn with_fields(params: ErgodicParams, fields: InjectedFields) -> Self {
        assert_eq!(
            fields.xi.len(),
            params.points().len(),
            "one injected xi row per point"
        );
        CoupledSample {
            params,
            seed: 0,
            injected: Some(fields),
        }
    }

    pub fn params(&self) -> &ErgodicParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// GUE field entry: real N(0,1) on the diagonal, standard complex
    /// Gaussian off it, Hermitian by construction.
    pub fn gauss(&self, j: usize, k: usize) -> Complex64 {
        if let Some(fields) = &self.injected {
            let g = fields
                .gauss
                .as_ref();
            return match g {
                None => Complex64::new(0.0, 0.0),
                Some(m) => {
                    assert!(
                        j < m.nrows() && k < m.ncols(),
                        "injected Gaussian block too small for ({j}, {k})"
                    );
                    m[(j, k)]
                }
            };
        }
        if j == k {
            let (z, _) = normal_pair(site(self.seed, KIND_GAUSS_DIAG, j as u64, j as u64));
            Complex64::new(z, 0.0)
        } else if j < k {
            complex_normal(site(self.seed, KIND_GAUSS_OFF, j as u64, k as u64))
        } else {
            self.gauss(k, j).conj()
        }
    }

    /// Coordinate j of coupling vector l. Panics if l is out of range; use
    /// `xi_vector` for a checked prefix.
    pub fn xi(&self, l: usize, j: usize) -> Complex64 {
        let count = self.params.points().len();
        assert!(l < count, "point index {l} out of range ({count} points)");
        match &self.injected {
            Some(fields) => {
                let row = &fields.xi[l];
                assert!(
                    j < row.len(),
                    "injected xi row {l} too short for coordinate {j}"
                );
                row[j]
            }
            None => xi_field(self.seed, l, j),
        }
    }

    /// First n coordinates of coupling vector l. Longer requests extend
    /// shorter ones coordinate for coordinate.
    pub fn xi_vector(&self, l: usize, n: usize) -> Result<DVector<Complex64>, SamplerError> {
        let count = self.params.points().len();
        if l >= count {
            return Err(SamplerError::IndexOutOfRange { index: l, count });
        }
        Ok(DVector::from_fn(n, |j, _| self.xi(l, j)))
    }

    /// Single matrix entry m(j, k), independent of any minor dimension.
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        let mut v = if j == k {
            Complex64::new(self.params.bulk_shift(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let sg = self.params.gamma2().sqrt();
        if sg > 0.0 {
            v += sg * self.gauss(j, k);
        }
        for (l, &x) in self.params.points().iter().enumerate() {
            v += x * self.xi(l, j) * self.xi(l, k).conj();
        }
        v
    }

    /// Top-left n by n minor. The identity compensators of the point terms
    /// are summed analytically into the diagonal shift.
    pub fn minor(&self, n: usize) -> HermitianMinor {
        self.build_minor(n, self.params.points().len(), |_| true, true, true)
    }

    /// Minor of the Gaussian part plus the points of modulus at most eps,
    /// with gamma1 omitted. Field values are shared with `minor`: point l
    /// keeps its coupling vector whether or not it is included.
    pub fn small_part_minor(&self, n: usize, eps: f64) -> HermitianMinor {
        self.build_minor(n, self.params.points().len(), |x| x.abs() <= eps, true, false)
    }

    fn build_minor(
        &self,
        n: usize,
        p: usize,
        include_point: impl Fn(f64) -> bool,
        include_gauss: bool,
        include_gamma1: bool,
    ) -> HermitianMinor {
        let points = self.params.points();
        let selected: Vec<usize> = (0..p).filter(|&l| include_point(points[l])).collect();
        let rows: Vec<DVector<Complex64>> = selected
            .iter()
            .map(|&l| DVector::from_fn(n, |j, _| self.xi(l, j)))
            .collect();
        let base = if include_gamma1 { self.params.gamma1() } else { 0.0 };
        let shift = base - selected.iter().map(|&l| points[l]).sum::<f64>();
        let sg = if include_gauss {
            self.params.gamma2().sqrt()
        } else {
            0.0
        };
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for j in 0..n {
            for k in j..n {
                let mut v = if j == k {
                    Complex64::new(shift, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                if sg > 0.0 {
                    v += sg * self.gauss(j, k);
                }
                for (idx, &l) in selected.iter().enumerate() {
                    v += points[l] * rows[idx][j] * rows[idx][k].conj();
                }
                m[(j, k)] = v;
                if j != k {
                    m[(k, j)] = v.conj();
                }
            }
        }
        HermitianMinor { n, entries: m }
    }
}

/// |first entry|^2 of `count` independent columns of Haar-distributed n by n
/// unitaries, realized as normalized standard complex Gaussian vectors.
pub fn haar_column_entry_samples(
    n: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<f64>, SamplerError> {
    if n < 2 || count == 0 {
        return Err(SamplerError::InvalidDrawRequest { n, count });
    }
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let mut first = 0.0;
        let mut total = 0.0;
        for j in 0..n {
            let z = complex_normal(site(seed, KIND_HAAR, t as u64, j as u64));
            let m = z.norm_sqr();
            if j == 0 {
                first = m;
            }
            total += m;
        }
        out.push(first / total);
    }
    Ok(out)
}

/// Top-left n by n block of the coupled infinite matrix. Exactly Hermitian:
/// the diagonal is real and the triangles are bitwise conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMinor {
    n: usize,
    entries: DMatrix<Complex64>,
}

impl HermitianMinor {
    pub(crate) fn from_entries(entries: DMatrix<Complex64>) -> Result<Self, SamplerError> {
        let n = entries.nrows();
        assert_eq!(n, entries.ncols(), "minor must be square");
        for j in 0..n {
            for k in j..n {
                let a = entries[(j, k)];
                let b = entries[(k, j)];
                if a.re != b.re || a.im != -b.im {
                    return Err(SamplerError::NotHermitian { j, k });
                }
            }
        }
        Ok(HermitianMinor { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn frobenius(&self) -> f64 {
        self.entries.norm()
    }

    /// Largest absolute deviation from exact Hermitian symmetry; zero for
    /// every constructed minor, kept as an explicit check for tests.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.n {
            for k in 0..self.n {
                let d = (self.entries[(j, k)] - self.entries[(k, j)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Writes the text matrix format: header `n <dim>`, rows of `re:im`.
    pub fn write_text<W: Write>(&self, w: &mut W) -> io::Result<()> {
        textio::write_matrix(w, None, &self.entries)
    }

    pub fn parse_text(text: &str) -> Result<Self, SamplerError> {
        let entries = textio::parse_matrix(text, None)?;
        Self::from_entries(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{ErgodicParams, RawParams};

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

    #[test]
    fn same_seed_same_minor_different_seed_differs() {
        let p = params(0.5, 1.0, &[2.0, -1.0]);
        let a = CoupledSample::new(p.clone(), 7).minor(12);
        let b = CoupledSample::new(p.clone(), 7).minor(12);
        let c = CoupledSample::new(p, 8).minor(12);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn minors_nest_exactly() {
        let s = CoupledSample::new(params(0.3, 0.7, &[1.5, -0.5]), 41);
        let small = s.minor(6);
        let big = s.minor(9);
        for j in 0..6 {
            for k in 0..6 {
                assert_eq!(small.entries()[(j, k)], big.entries()[(j, k)]);
            }
        }
    }

    #[test]
    fn minor_agrees_with_entry_accessor() {
        let s = CoupledSample::new(params(-0.2, 2.0, &[1.0, -2.0, 0.25]), 11);
        let m = s.minor(7);
        for j in 0..7 {
            for k in 0..7 {
                assert_eq!(m.entries()[(j, k)], s.entry(j, k));
            }
        }
    }

    #[test]
    fn minor_is_exactly_hermitian() {
        let s = CoupledSample::new(params(0.0, 1.0, &[2.0]), 3);
        assert_eq!(s.minor(16).hermitian_defect(), 0.0);
    }

    #[test]
    fn xi_vectors_are_prefix_consistent() {
        let s = CoupledSample::new(params(0.0, 0.0, &[1.0]), 99);
        let short = s.xi_vector(0, 4).unwrap();
        let long = s.xi_vector(0, 9).unwrap();
        for j in 0..4 {
            assert_eq!(short[j], long[j]);
        }
        assert_eq!(
            s.xi_vector(1, 4).unwrap_err(),
            SamplerError::IndexOutOfRange { index: 1, count: 1 }
        );
    }

    #[test]
    fn injected_rank_one_closed_form() {
        // x = [2], xi = (i, 1): m = 2 (xi xi* - Id) gives [[0, 2i], [-2i, 0]].
        let p = params(0.0, 0.0, &[2.0]);
        let s = CoupledSample::with_fields(
            p,
            InjectedFields {
                gauss: None,
                xi: vec![vec![Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)]],
            },
        );
        let m = s.minor(2);
        assert_eq!(m.entries()[(0, 0)], Complex64::new(0.0, 0.0));
        assert_eq!(m.entries()[(0, 1)], Complex64::new(0.0, 2.0));
        assert_eq!(m.entries()[(1, 0)], Complex64::new(0.0, -2.0));
        assert_eq!(m.entries()[(1, 1)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn small_part_minor_keeps_field_indices_and_drops_gamma1() {
        let p = params(3.0, 0.0, &[2.0, -1.0, 0.05]);
        let s = CoupledSample::new(p, 5);
        let b = s.small_part_minor(6, 0.1);
        // Only the 0.05 point survives; its xi row is the same one the full
        // minor uses for canonical index 2.
        let xi = s.xi_vector(2, 6).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let mut expect = 0.05 * xi[j] * xi[k].conj();
                if j == k {
                    expect -= Complex64::new(0.05, 0.0);
                }
                let got = b.entries()[(j, k)];
                assert!((got - expect).norm() < 1e-15);
            }
        }
        // All points above eps: the small part vanishes identically.
        let none = s.small_part_minor(4, 0.01);
        assert_eq!(none.frobenius(), 0.0);
    }

    #[test]
    fn gaussian_field_moments() {
        let p = params(0.0, 1.0, &[]);
        let s = CoupledSample::new(p, 123);
        let n = 10_000;
        let mut mean = 0.0;
        let mut var = 0.0;
        for j in 0..n {
            let z = s.gauss(j, j).re;
            mean += z;
            var += z * z;
        }
        mean /= n as f64;
        var /= n as f64;
        // 4 standard errors: SE(mean) = 1/100, SE(var) ~ sqrt(2)/100.
        assert!(mean.abs() < 0.04, "diag mean {mean}");
        assert!((var - 1.0).abs() < 0.06, "diag var {var}");

        let mut re_var = 0.0;
        let mut im_var = 0.0;
        let mut cross = 0.0;
        for j in 0..n {
            let z = s.gauss(2 * j, 2 * j + 1);
            re_var += z.re * z.re;
            im_var += z.im * z.im;
            cross += z.re * z.im;
        }
        re_var /= n as f64;
        im_var /= n as f64;
        cross /= n as f64;
        assert!((re_var - 0.5).abs() < 0.03, "offdiag re var {re_var}");
        assert!((im_var - 0.5).abs() < 0.03, "offdiag im var {im_var}");
        assert!(cross.abs() < 0.02, "offdiag re/im correlation {cross}");
        assert_eq!(s.gauss(3, 9), s.gauss(9, 3).conj());
    }

    #[test]
    fn xi_field_moments() {
        let p = params(0.0, 0.0, &[1.0]);
        let s = CoupledSample::new(p, 77);
        let n = 10_000;
        let mut abs2 = 0.0;
        let mut sq = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let z = s.xi(0, j);
            abs2 += z.norm_sqr();
            sq += z * z;
        }
        abs2 /= n as f64;
        sq /= n as f64;
        assert!((abs2 - 1.0).abs() < 0.06, "E|xi|^2 = {abs2}");
        assert!(sq.norm() < 0.03, "E xi^2 = {sq}");
    }

    #[test]
    fn haar_entry_mean_is_one_over_n() {
        for n in [2usize, 3, 8] {
            let xs = haar_column_entry_samples(n, 10_000, 5).unwrap();
            let mean: f64 = xs.iter().sum::<f64>() / xs.len() as f64;
            // E|u_1|^2 = 1/n; the summand is bounded by 1 so 4 SE < 0.02.
            assert!(
                (mean - 1.0 / n as f64).abs() < 0.02,
                "n = {n}, mean = {mean}"
            );
            assert!(xs.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn haar_rejects_degenerate_requests() {
        assert_eq!(
            haar_column_entry_samples(1, 10, 0).unwrap_err(),
            SamplerError::InvalidDrawRequest { n: 1, count: 10 }
        );
        assert_eq!(
            haar_column_entry_samples(4, 0, 0).unwrap_err(),
            SamplerError::InvalidDrawRequest { n: 4, count: 0 }
        );
    }

    #[test]
    fn replica_seeds_are_distinct_and_replica_zero_is_base() {
        assert_eq!(replica_seed(42, 0), 42);
        let mut seen: Vec<u64> = (0..100).map(|k| replica_seed(42, k)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn text_round_trip_is_bitwise() {
        let s = CoupledSample::new(params(0.1, 0.4, &[2.0, -1.0]), 6);
        let m = s.minor(5);
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = HermitianMinor::parse_text(&String::from_utf8(buf).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parse_rejects_non_hermitian_text() {
        let text = "n 2\n0.0e0:0.0e0 1.0e0:0.0e0\n2.0e0:0.0e0 0.0e0:0.0e0\n";
        assert_eq!(
            HermitianMinor::parse_text(text).unwrap_err(),
            SamplerError::NotHermitian { j: 0, k: 1 }
        );
    }
}
