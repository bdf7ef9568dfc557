//! Central numerical tolerances.
//!
//! Every comparison tolerance used by the library and its verification
//! suite lives here so the provenance of each magic number is auditable.
//! Tolerances are absolute unless the name says otherwise.

/// Max imaginary residue allowed in the spectral (DFT) route, per unit of
/// transform length.  The two length-`2n` transforms are exact in exact
/// arithmetic; accumulated f64 rounding grows roughly linearly in the
/// transform length, so the acceptance threshold scales with `2n`.
pub const IMAG_RESIDUE_PER_LEN: f64 = 1e-9;

/// Agreement required between the spectral route and the closed-form
/// series route for the same coefficient.
pub const CROSS_ROUTE: f64 = 1e-9;

/// Elementwise tolerance for reconstructing the all-ones lower-triangular
/// target from a factor pair (`L * R = M`).
pub const FACTOR_RECONSTRUCTION: f64 = 1e-10;

/// Elementwise tolerance for reconstructing with the corrected right
/// factor after binning (`Lhat * Rhat = M`); solves lose a little more.
pub const BINNED_RECONSTRUCTION: f64 = 1e-8;

/// Agreement between the summation norm formula and the Frobenius norm of
/// a densely materialized factor (relative).
pub const NORM_FORMULA_REL: f64 = 1e-10;

/// Agreement between an algebraically constructed square root and the
/// product check `C * C = 2M - E` (elementwise).
pub const SQRT_IDENTITY: f64 = 1e-9;

/// Agreement for Toeplitz-inverse identities (`C * Cinv = I` elementwise).
pub const TOEPLITZ_INVERSE: f64 = 1e-9;

/// Slack added to one-sided analytic inequalities so that a bound holding
/// with equality in exact arithmetic is not failed by f64 rounding.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// Agreement between the streaming-window mechanism and the dense
/// reference mechanism on identical noise (per released estimate).
pub const STREAM_EQUIVALENCE: f64 = 1e-9;

/// Relative tolerance for empirical RMSE against its analytic target.
pub const EMPIRICAL_RMSE_REL: f64 = 5e-2;

/// Smallest singular value treated as nonsingular in block inversions.
/// Real blocks have `sigma_min >= 1/250`; only the degenerate all-zero
/// `n = 1` block (materialized with ~1e-16 noise) falls below this.
pub const SINGULAR_SIGMA: f64 = 1e-12;

/// Default number of accelerated terms for the alternating series over
/// scaled binomial coefficients.  The acceleration converges like
/// `(3 + sqrt(8))^-M` for moment sequences, so 28 terms leave the
/// truncation error far below f64 rounding noise.
pub const ALT_SERIES_TERMS: usize = 28;
