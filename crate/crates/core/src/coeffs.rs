//! Scaled binomial coefficient sequences and the group-algebra
//! coefficient vector that generates both factors.
//!
//! Everything here is built from `f_k = |binom(-1/2, k)| = binom(2k, k) / 4^k`,
//! computed by the recurrence `f_k = f_{k-1} * (2k - 1) / (2k)`.  The
//! coefficient vector `b` of length `2n` is obtained on two independent
//! routes:
//!
//! * **spectral** ([`bf_all_dft`]): evaluate the square root of the group
//!   algebra element on the character basis — two explicit
//!   positive-exponent transforms of length `2n` with a principal complex
//!   square root in between; and
//! * **closed form** ([`bf_closed`], [`GroupAlgebraFactors::closed_form`]):
//!   `b(omega^-t) = 1/(2 sqrt(n)) + (1/sqrt(2)) * sum_l (-1)^l f_{t+nl}`,
//!   with the alternating tail evaluated by convergence acceleration.
//!
//! The two routes share no code, which is what makes their agreement a
//! meaningful check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Which coefficient family a [`CoeffSeq`] holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoeffKind {
    /// `f_k = |binom(-1/2, k)|`: positive, strictly decreasing, `f_0 = 1`.
    F,
    /// `ftilde_0 = 1`, `ftilde_k = -f_k / (2k - 1)` for `k >= 1`:
    /// the coefficient sequence of `sqrt(1 - x)`.
    FTilde,
}

/// A prefix of one of the two coefficient families.
#[derive(Clone, Debug)]
pub struct CoeffSeq {
    kind: CoeffKind,
    values: Vec<f64>,
}

impl CoeffSeq {
    pub fn kind(&self) -> CoeffKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::ops::Index<usize> for CoeffSeq {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

/// `f_0..=f_m` via the ratio recurrence; exact to one rounding per step.
pub fn f_seq(m: usize) -> CoeffSeq {
    CoeffSeq { kind: CoeffKind::F, values: f_table(m + 1) }
}

/// `ftilde_0..=ftilde_m`; `ftilde_k = -f_k / (2k - 1)` for `k >= 1`.
pub fn f_tilde_seq(m: usize) -> CoeffSeq {
    let f = f_table(m + 1);
    let mut values = vec![0.0; m + 1];
    values[0] = 1.0;
    for k in 1..=m {
        values[k] = -f[k] / (2 * k - 1) as f64;
    }
    CoeffSeq { kind: CoeffKind::FTilde, values }
}

/// First `len` values of `f`.
fn f_table(len: usize) -> Vec<f64> {
    let mut f = Vec::with_capacity(len);
    if len == 0 {
        return f;
    }
    f.push(1.0);
    for k in 1..len {
        let prev = f[k - 1];
        f.push(prev * (2 * k - 1) as f64 / (2 * k) as f64);
    }
    f
}

/// Accelerated alternating sum `sum_{k>=0} (-1)^k a_k` for a sequence
/// `a_k = integral of x^k against a positive measure on [0, 1]` (a
/// Hausdorff moment sequence), truncated after `terms` evaluations.
///
/// This is the Chebyshev-polynomial acceleration of Cohen, Rodriguez
/// Villegas and Zagier; for moment sequences the error after `M` terms is
/// at most `2 a_0 / (3 + sqrt(8))^M`, so ~28 terms reach f64 noise.
fn accelerated_alternating_sum(mut a: impl FnMut(usize) -> f64, terms: usize) -> f64 {
    let m = terms;
    let mut d = (3.0 + f64::sqrt(8.0)).powi(m as i32);
    d = (d + 1.0 / d) / 2.0;
    let mut b = -1.0;
    let mut c = -d;
    let mut s = 0.0;
    for k in 0..m {
        c = b - c;
        s += c * a(k);
        b *= ((k + m) as f64 * (k as f64 - m as f64)) / ((k as f64 + 0.5) * (k + 1) as f64);
    }
    s / d
}

/// `sum_{l>=0} (-1)^l f_{tau + n*l}` for `0 <= tau`.
///
/// `f_k` is the `k`-th moment of the arcsine density on `[0, 1]`, so the
/// subsequence `l -> f_{tau + n*l}` is again a moment sequence (of the
/// pushforward under `x -> x^n`, reweighted by `x^tau`) and the
/// accelerated sum applies with its geometric error bound.
pub fn folded_f_sum(n: usize, tau: usize) -> f64 {
    assert!(n >= 1, "n must be positive");
    let f = f_table(tau + n * tol::ALT_SERIES_TERMS);
    accelerated_alternating_sum(|l| f[tau + n * l], tol::ALT_SERIES_TERMS)
}

/// `folded_f_sum(n, tau)` for all `tau in 0..n`, sharing one `f` table.
pub fn folded_f_sums(n: usize) -> Vec<f64> {
    assert!(n >= 1, "n must be positive");
    let f = f_table(n * (tol::ALT_SERIES_TERMS + 1));
    (0..n)
        .map(|tau| accelerated_alternating_sum(|l| f[tau + n * l], tol::ALT_SERIES_TERMS))
        .collect()
}

/// Closed-form group-algebra coefficient `b(omega^-t)` for
/// `t in [-n, n-1]`, where `omega = exp(i*pi/n)`.
///
/// For `t >= 0` this is `1/(2 sqrt(n)) + folded_f_sum(n, t)/sqrt(2)`; for
/// `t < 0` the leading terms of the alternating series vanish (`f` is zero
/// at negative indices) and the sum starts at `l = 1` with flipped sign.
pub fn bf_closed(n: usize, t: i64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("bf_closed: n must be positive"));
    }
    let ni = n as i64;
    if t < -ni || t >= ni {
        return Err(Error::invalid(format!(
            "bf_closed: t = {t} outside [-{n}, {}]",
            ni - 1
        )));
    }
    let base = 0.5 / (n as f64).sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    if t >= 0 {
        Ok(base + half * folded_f_sum(n, t as usize))
    } else {
        Ok(base - half * folded_f_sum(n, (t + ni) as usize))
    }
}

/// Character magnitudes below this are treated as exact zeros in the
/// spectral route.  True nonzero characters of the indicator have
/// magnitude `>= 1`; transform noise stays below `~1e-12` for any `n`
/// within the dense limit.
pub const CHARACTER_CLAMP: f64 = 1e-6;

/// The length-`2n` coefficient vector `b` plus provenance diagnostics.
///
/// `b[j] = b(omega^j)` for `j in 0..2n`; row `i` of the left factor reads
/// `b` at `(j + n - 1 - i) mod 2n` and column `j` of the right factor at
/// `(i - j) mod 2n` (see the factorization module).
#[derive(Clone, Debug)]
pub struct GroupAlgebraFactors {
    n: usize,
    b: Vec<f64>,
    max_imag_residue: f64,
}

impl GroupAlgebraFactors {
    /// Spectral route: two explicit positive-exponent transforms of
    /// length `2n` with a principal square root on the character values.
    ///
    /// The inner transform of the indicator of `{0..n-1}` gives the
    /// character values of the group-algebra element; these lie in the
    /// closed right half-plane, so the principal square root is smooth on
    /// them.  Characters at even nonzero frequencies are exactly zero
    /// (the indicator telescopes); the transform leaves `O(n eps)` noise
    /// there whose square root would pollute every coefficient at the
    /// `sqrt(eps)` level, so anything below [`CHARACTER_CLAMP`] is
    /// flushed to zero before the root — genuine nonzero characters have
    /// magnitude at least 1, a six-order separation.  The outer transform
    /// (scaled by `1/(2n)`) recovers the coefficients, which are real in
    /// exact arithmetic; the largest imaginary part left over is kept as
    /// a diagnostic and checked against `IMAG_RESIDUE_PER_LEN * 2n`.
    pub fn spectral(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("spectral: n must be positive"));
        }
        let len = 2 * n;
        let table = twiddle_table(len);
        // Character values of the indicator of {0..n-1}.
        let mut indicator = vec![Complex64::new(0.0, 0.0); len];
        for x in indicator.iter_mut().take(n) {
            *x = Complex64::new(1.0, 0.0);
        }
        let chars = dft_positive(&indicator, &table);
        let roots: Vec<Complex64> = chars
            .iter()
            .map(|c| if c.norm_sqr() < CHARACTER_CLAMP * CHARACTER_CLAMP { Complex64::new(0.0, 0.0) } else { c.sqrt() })
            .collect();
        let back = dft_positive(&roots, &table);
        let scale = 1.0 / len as f64;
        let mut b = Vec::with_capacity(len);
        let mut max_imag_residue: f64 = 0.0;
        for c in &back {
            b.push(c.re * scale);
            max_imag_residue = max_imag_residue.max((c.im * scale).abs());
        }
        let residue_tol = tol::IMAG_RESIDUE_PER_LEN * len as f64;
        if max_imag_residue > residue_tol {
            return Err(Error::ImaginaryResidue { n, residue: max_imag_residue, tol: residue_tol });
        }
        Ok(GroupAlgebraFactors { n, b, max_imag_residue })
    }

    /// Closed-form route: every entry from the accelerated alternating
    /// series.  No transforms, no complex arithmetic.
    pub fn closed_form(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("closed_form: n must be positive"));
        }
        let folded = folded_f_sums(n);
        let base = 0.5 / (n as f64).sqrt();
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let mut b = vec![0.0; 2 * n];
        // b[j] = b(omega^j): reduce the exponent to t in [-n, n-1] with
        // b(omega^j) = b(omega^-t).
        b[0] = base + half * folded[0];
        for j in 1..=n {
            b[j] = base - half * folded[n - j];
        }
        for j in (n + 1)..(2 * n) {
            b[j] = base + half * folded[2 * n - j];
        }
        Ok(GroupAlgebraFactors { n, b, max_imag_residue: 0.0 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The coefficient vector, length `2n`; entry `j` is `b(omega^j)`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Largest imaginary part discarded by the spectral route (0 for the
    /// closed form).
    pub fn max_imag_residue(&self) -> f64 {
        self.max_imag_residue
    }
}

/// Spectral route as a free function, mirroring [`bf_closed`].
pub fn bf_all_dft(n: usize) -> Result<GroupAlgebraFactors> {
    GroupAlgebraFactors::spectral(n)
}

/// `exp(2*pi*i*k/len)` for `k in 0..len`.
fn twiddle_table(len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / len as f64;
            Complex64::new(angle.cos(), angle.sin())
        })
        .collect()
}

/// Unnormalized positive-exponent transform:
/// `out[t] = sum_k input[k] * exp(+2*pi*i*t*k/len)`.
///
/// Quadratic on purpose — it is the independent reference the closed form
/// is checked against, so it stays self-contained and obviously correct.
fn dft_positive(input: &[Complex64], table: &[Complex64]) -> Vec<Complex64> {
    let len = input.len();
    debug_assert_eq!(table.len(), len);
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, x) in input.iter().enumerate() {
            acc += x * table[(t * k) % len];
        }
        out.push(acc);
    }
    out
}
