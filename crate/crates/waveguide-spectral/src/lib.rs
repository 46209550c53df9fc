//! Spectral laboratory for the periodic waveguide Schrodinger operator
//! `-Laplacian + V` on `Omega = omega x R` with a rectangular cross-section.
//!
//! The forward side discretises each Floquet fiber `A_theta` on the explicit
//! eigenbasis of the free quasi-periodic Laplacian and extracts boundary
//! spectral data `(lambda_k, d phi_k / dn)`. The inverse side consumes only that
//! data and recovers Fourier coefficients of potential differences through
//! complex exponential probes.

pub mod error;
pub mod exec;
pub mod forward;
pub mod geometry;
pub mod inverse;
pub mod steklov;
pub mod zeta;

pub use error::{Error, Result};
pub use exec::Execution;
pub use num_complex::Complex64;
