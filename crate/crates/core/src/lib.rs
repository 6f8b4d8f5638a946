//! Simulation and verification laboratory for unitarily invariant ensembles of
//! infinite Hermitian matrices.
//!
//! An ensemble is indexed by a triple (gamma1, gamma2, {x_l}): a scalar drift,
//! a Gaussian intensity, and a square-summable point configuration. The crate
//! samples dimension-coupled minors M_n from one seed, computes their spectral
//! counting and projection measures at scale lambda/n, and compares them
//! against the closed-form limit objects, together with supporting norm,
//! moment, and distributional checks and the Cayley bridge to unitary minors.

pub mod cayley;
pub mod diagnostics;
pub mod limits;
pub mod params;
pub mod sampler;
pub mod spectral;

mod textio;

pub use num_complex::Complex64;
