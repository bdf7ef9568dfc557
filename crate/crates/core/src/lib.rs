//! Continual counting under differential privacy with a binned
//! group-algebra matrix factorization.
//!
//! The lower-triangular all-ones matrix `M` (prefix sums) is factored as
//! `M = L * R` where both factors are built from a single length-`2n`
//! vector of group-algebra coefficients.  Noise shaped by `L` then yields
//! differentially private running counts.  Because every row of `L` is a
//! rotation of the same vector, rows can be compressed into a small number
//! of constant segments ("bins"); the streaming mechanism exploits this to
//! run in `O(segments)` space and `O(segments)` time per step instead of
//! `O(n)`.
//!
//! Module map:
//! - [`coeffs`]: scaled binomial coefficient sequences and the group-algebra
//!   coefficient vector (spectral/DFT route and closed-form series route).
//! - [`matrix`]: small dense row-major matrix plumbing and exact norms.
//! - [`linalg`]: bridges to nalgebra for SVD-based norms and LU solves.
//! - [`factorization`]: materialized factors, the square-root baseline,
//!   the closed-form norm formula, and error metrics.
//! - [`binning`]: greedy segment compression of decreasing sequences, the
//!   perturbation budget, binned factors, and the corrected right factor.
//! - [`noise`]: counter-based deterministic Gaussian noise.
//! - [`streaming`]: the constant-memory streaming mechanism.
//! - [`verify`]: numerical checks for every analytic statement the design
//!   relies on, with machine-readable reports.

pub mod binning;
pub mod coeffs;
pub mod error;
pub mod factorization;
pub mod linalg;
pub mod matrix;
pub mod noise;
pub mod streaming;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
