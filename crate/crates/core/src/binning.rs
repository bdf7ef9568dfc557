//! Greedy segment compression ("binning") of the left factor.
//!
//! A decreasing positive sequence is covered by constant segments such
//! that replacing every value by its segment representative is an
//! `(eta, mu)`-perturbation: `|replacement - value| <= eta*value + mu`.
//! Applied to the last row of `L` (three monotone pieces), this yields a
//! piecewise-constant row `Lhat` whose shifts reproduce every row, so the
//! whole factor is stored as one short segment list.  The right factor is
//! then corrected per block (`Rhat_i = Lhat_i^{-1} L_i R_i`), which keeps
//! the factorization exact: `Lhat * Rhat = M`.

use serde::{Deserialize, Serialize};

use crate::coeffs::GroupAlgebraFactors;
use crate::error::{Error, Result};
use crate::factorization::{norm_formula, DEFAULT_DENSE_LIMIT};
use crate::linalg;
use crate::matrix::DenseMatrix;

/// Proved bound on `max_i ||L_i^{-1}||_2`, valid for every `n`.
pub const CHI_PROVED: f64 = 250.0;

/// Observed bound on `max_i ||L_i^{-1}||_2` (never exceeded numerically);
/// opt-in via [`ParamOptions::empirical_chi`].
pub const CHI_EMPIRICAL: f64 = 19.0;

/// One constant segment: indices `start..=end` all evaluate to `value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub value: f64,
}

/// A piecewise-constant row: segments partition `[0, domain_len)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedRow {
    segments: Vec<Segment>,
    domain_len: usize,
}

impl BinnedRow {
    fn new(segments: Vec<Segment>, domain_len: usize) -> Result<Self> {
        let row = BinnedRow { segments, domain_len };
        row.validate()?;
        Ok(row)
    }

    /// Check the partition invariant: contiguous, gapless, in order.
    fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::BadSequence("no segments".into()));
        }
        let mut expect = 0usize;
        for s in &self.segments {
            if s.start != expect || s.end < s.start {
                return Err(Error::BadSequence(format!(
                    "segments do not partition the domain at index {expect}"
                )));
            }
            if !s.value.is_finite() {
                return Err(Error::BadSequence("non-finite segment value".into()));
            }
            expect = s.end + 1;
        }
        if expect != self.domain_len {
            return Err(Error::BadSequence(format!(
                "segments cover [0, {expect}), domain is [0, {})",
                self.domain_len
            )));
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    pub fn domain_len(&self) -> usize {
        self.domain_len
    }

    /// Value at index `j` (binary search over segment starts).
    pub fn eval(&self, j: usize) -> f64 {
        debug_assert!(j < self.domain_len);
        let idx = match self.segments.binary_search_by(|s| s.start.cmp(&j)) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        self.segments[idx].value
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.domain_len];
        for s in &self.segments {
            for x in &mut out[s.start..=s.end] {
                *x = s.value;
            }
        }
        out
    }
}

/// Greedy binning of a nonincreasing sequence with `1 >= seq[0]` and
/// `seq[last] > 0` (or `>= 0` when `allow_zero`).
///
/// Head `a_k` opens a segment that extends to the largest `t` with
/// `a_t >= a_k / (1 + 2 eta)`; the representative is `(a_k + a_t) / 2`.
/// Once the head drops below `mu`, the whole tail becomes one segment
/// with representative `(first + last) / 2`.  Segment count is at most
/// `ceil(log(1/mu) / log(1 + 2 eta)) + 1`: consecutive heads shrink by
/// more than `(1 + 2 eta)` and stay `>= mu`, plus one tail bin.
fn bin_nonincreasing(seq: &[f64], eta: f64, mu: f64, allow_zero: bool) -> Result<BinnedRow> {
    if seq.is_empty() {
        return Err(Error::BadSequence("empty sequence".into()));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("eta = {eta} must be positive and finite")));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::invalid(format!("mu = {mu} must be in (0, 1]")));
    }
    if seq[0] > 1.0 {
        return Err(Error::BadSequence(format!("leading value {} exceeds 1", seq[0])));
    }
    let floor = if allow_zero { 0.0 } else { f64::MIN_POSITIVE };
    for w in seq.windows(2) {
        if w[1] > w[0] {
            return Err(Error::BadSequence(format!(
                "sequence increases: {} -> {}",
                w[0], w[1]
            )));
        }
    }
    if seq[seq.len() - 1] < floor {
        return Err(Error::BadSequence(format!(
            "value {} below allowed minimum",
            seq[seq.len() - 1]
        )));
    }

    let m = seq.len();
    let mut segments = Vec::new();
    let mut k = 0usize;
    while k < m {
        let head = seq[k];
        if head < mu {
            // Everything from here on is below mu: one tail bin.
            segments.push(Segment { start: k, end: m - 1, value: (head + seq[m - 1]) / 2.0 });
            break;
        }
        let cutoff = head / (1.0 + 2.0 * eta);
        let mut t = k;
        while t + 1 < m && seq[t + 1] >= cutoff {
            t += 1;
        }
        segments.push(Segment { start: k, end: t, value: (head + seq[t]) / 2.0 });
        k = t + 1;
    }
    BinnedRow::new(segments, m)
}

/// Bin a strictly decreasing-or-equal positive sequence (`<= 1`); see
/// [`bin_nonincreasing`] for the rule and the count bound.
pub fn bin_decreasing(seq: &[f64], eta: f64, mu: f64) -> Result<BinnedRow> {
    bin_nonincreasing(seq, eta, mu, false)
}

/// Where the perturbation budget's norm inputs come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationMode {
    /// Dense per-block norms (`||L_i||_F` exactly, `||L_i^{-1}||_2` from
    /// the smallest singular value).  Gated by the dense limit.
    Exact,
    /// Closed-form bounds: `||L_i||_F <= sqrt(n * norm_formula(n))` and
    /// `chi_L = 250` (or the observed 19 on request).  No dense matrices.
    Bound,
}

/// The `(eta, mu)` budget derived from a target error inflation `zeta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub zeta: f64,
    /// `zeta / (17 * psi_l)`.
    pub eta: f64,
    /// `zeta / (17 * n * chi_l)`.
    pub mu: f64,
    /// `max_i ||L_i||_F * ||L_i^{-1}||_2` (or its bound).
    pub psi_l: f64,
    /// `max_i ||L_i^{-1}||_2` (or its bound).
    pub chi_l: f64,
    pub mode: PerturbationMode,
}

/// Knobs for [`perturbation_params_with`].
#[derive(Clone, Copy, Debug)]
pub struct ParamOptions {
    pub dense_limit: usize,
    /// Use the observed `chi_L = 19` instead of the proved 250 in bound
    /// mode.
    pub empirical_chi: bool,
}

impl Default for ParamOptions {
    fn default() -> Self {
        ParamOptions { dense_limit: DEFAULT_DENSE_LIMIT, empirical_chi: false }
    }
}

/// [`perturbation_params_with`] under default options.
pub fn perturbation_params(
    factors: &GroupAlgebraFactors,
    zeta: f64,
    mode: PerturbationMode,
) -> Result<PerturbationParams> {
    perturbation_params_with(factors, zeta, mode, &ParamOptions::default())
}

/// Compute the `(eta, mu)` budget for a target inflation `zeta in (0, 1]`.
pub fn perturbation_params_with(
    factors: &GroupAlgebraFactors,
    zeta: f64,
    mode: PerturbationMode,
    opts: &ParamOptions,
) -> Result<PerturbationParams> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::invalid(format!("zeta = {zeta} must be in (0, 1]")));
    }
    let n = factors.n();
    let (psi_l, chi_l) = match mode {
        PerturbationMode::Exact => {
            let l = crate::factorization::materialize_l_with_limit(factors, opts.dense_limit)?;
            let mut psi = 0.0f64;
            let mut chi = 0.0f64;
            for (c0, c1) in [(0, n), (n, 2 * n)] {
                let block = l.block(0, n, c0, c1);
                let sigma_min = linalg::smallest_singular_value(&block);
                if sigma_min <= crate::tol::SINGULAR_SIGMA || !sigma_min.is_finite() {
                    return Err(Error::Singular(format!(
                        "block L_{} is singular at n = {n}",
                        if c0 == 0 { 1 } else { 2 }
                    )));
                }
                let inv_norm = 1.0 / sigma_min;
                psi = psi.max(block.frobenius_norm() * inv_norm);
                chi = chi.max(inv_norm);
            }
            (psi, chi)
        }
        PerturbationMode::Bound => {
            let chi = if opts.empirical_chi { CHI_EMPIRICAL } else { CHI_PROVED };
            let frob = (n as f64 * norm_formula(n)).sqrt();
            (frob * chi, chi)
        }
    };
    Ok(PerturbationParams {
        zeta,
        eta: zeta / (17.0 * psi_l),
        mu: zeta / (17.0 * n as f64 * chi_l),
        psi_l,
        chi_l,
        mode,
    })
}

/// The compressed left factor: one binned last row plus the shift rule
/// `row i reads index (j + (n-1-i)) mod 2n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinnedFactor {
    n: usize,
    zeta: f64,
    eta: f64,
    mu: f64,
    last_row: BinnedRow,
}

/// Serialization format version accepted by [`BinnedFactor::from_json`].
pub const BINNED_FACTOR_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BinnedFactorFile {
    version: u32,
    n: usize,
    zeta: f64,
    eta: f64,
    mu: f64,
    /// `(start, end inclusive, value)` triples over `[0, 2n)`.
    segments: Vec<(usize, usize, f64)>,
}

impl BinnedFactor {
    /// Bin the last row of `L` in three monotone pieces; see [`bin_factor`].
    pub fn build(factors: &GroupAlgebraFactors, params: &PerturbationParams) -> Result<Self> {
        bin_factor(factors, params)
    }

    /// Identity binning: every index its own segment, `Lhat = L` exactly
    /// (the `zeta -> 0` limit; also the documented degenerate `n = 1`
    /// path, where block inversion is unavailable).
    pub fn exact(factors: &GroupAlgebraFactors) -> Self {
        let n = factors.n();
        let last_row = last_row_values(factors);
        let segments = last_row
            .iter()
            .enumerate()
            .map(|(j, &v)| Segment { start: j, end: j, value: v })
            .collect();
        BinnedFactor {
            n,
            zeta: 0.0,
            eta: 0.0,
            mu: 0.0,
            last_row: BinnedRow { segments, domain_len: 2 * n },
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn last_row(&self) -> &BinnedRow {
        &self.last_row
    }

    pub fn segment_count(&self) -> usize {
        self.last_row.segment_count()
    }

    /// Entry `(i, j)` of the dense `n x 2n` view.
    pub fn eval(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.n && j < 2 * self.n);
        let wrap = 2 * self.n;
        self.last_row.eval((j + (self.n - 1 - i)) % wrap)
    }

    /// Dense row `i` of `Lhat`.
    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        (0..2 * self.n).map(|j| self.eval(i, j)).collect()
    }

    /// Dense `Lhat` (`n x 2n`), gated by the default dense limit.
    pub fn dense(&self) -> Result<DenseMatrix> {
        self.dense_with_limit(DEFAULT_DENSE_LIMIT)
    }

    pub fn dense_with_limit(&self, limit: usize) -> Result<DenseMatrix> {
        if self.n > limit {
            return Err(Error::DenseLimit { n: self.n, limit });
        }
        Ok(DenseMatrix::from_fn(self.n, 2 * self.n, |i, j| self.eval(i, j)))
    }

    /// Versioned JSON; floating values round-trip bit-exactly.
    pub fn to_json(&self) -> String {
        let file = BinnedFactorFile {
            version: BINNED_FACTOR_VERSION,
            n: self.n,
            zeta: self.zeta,
            eta: self.eta,
            mu: self.mu,
            segments: self.last_row.segments.iter().map(|s| (s.start, s.end, s.value)).collect(),
        };
        serde_json::to_string(&file).expect("BinnedFactor serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: BinnedFactorFile =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.version != BINNED_FACTOR_VERSION {
            return Err(Error::Serialization(format!(
                "unsupported version {} (expected {BINNED_FACTOR_VERSION})",
                file.version
            )));
        }
        if file.n == 0 {
            return Err(Error::Serialization("n must be positive".into()));
        }
        let segments = file
            .segments
            .into_iter()
            .map(|(start, end, value)| Segment { start, end, value })
            .collect();
        let last_row = BinnedRow::new(segments, 2 * file.n)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        Ok(BinnedFactor { n: file.n, zeta: file.zeta, eta: file.eta, mu: file.mu, last_row })
    }
}

/// Last row of `L` in index order `j = 0..2n`:
/// `[b(w^{-n+1}), .., b(w^0) | b(w^1), .., b(w^n)]`.
fn last_row_values(factors: &GroupAlgebraFactors) -> Vec<f64> {
    let n = factors.n();
    let b = factors.b();
    let wrap = 2 * n;
    (0..wrap).map(|j| b[(j + n + 1) % wrap]).collect()
}

/// Bin the last row of `L` under `params`, in three monotone pieces:
///
/// * first half (increasing, positive): binned on the reversed slice;
/// * positive prefix of the second half (decreasing): binned directly,
///   with any exact zeros appended so they land in the sub-`mu` tail bin;
/// * negative suffix of the second half: negated (giving an increasing
///   positive sequence), binned reversed, values re-negated.
///
/// Any of the second-half pieces may be empty (all-positive or
/// all-negative second halves occur); which ones ran is logged.
pub fn bin_factor(
    factors: &GroupAlgebraFactors,
    params: &PerturbationParams,
) -> Result<BinnedFactor> {
    let n = factors.n();
    if n < 2 {
        return Err(Error::invalid(
            "bin_factor: n must be at least 2 (block inversion is degenerate at n = 1; \
             use BinnedFactor::exact)",
        ));
    }
    let (eta, mu) = (params.eta, params.mu);
    let row = last_row_values(factors);
    let mut segments: Vec<Segment> = Vec::new();

    // First half, reversed to decreasing order; positivity is structural
    // (every entry is at least 1/(2 sqrt n)).
    let mut first: Vec<f64> = row[..n].to_vec();
    first.reverse();
    let binned = bin_nonincreasing(&first, eta, mu, true)?;
    let mut first_segs: Vec<Segment> = binned
        .segments()
        .iter()
        .map(|s| Segment { start: n - 1 - s.end, end: n - 1 - s.start, value: s.value })
        .collect();
    first_segs.reverse();
    segments.extend(first_segs);

    // Second half: positive prefix, exact zeros, negative suffix.
    let second = &row[n..];
    let pos = second.iter().take_while(|&&v| v > 0.0).count();
    let zero = second[pos..].iter().take_while(|&&v| v == 0.0).count();
    let neg = second.len() - pos - zero;
    log::debug!(
        "bin_factor n={n}: second half has {pos} positive, {zero} zero, {neg} negative entries"
    );
    if second[pos + zero..].iter().any(|&v| v >= 0.0) {
        return Err(Error::BadSequence(
            "second half is not positive-then-negative".into(),
        ));
    }

    if pos + zero > 0 {
        let binned = bin_nonincreasing(&second[..pos + zero], eta, mu, true)?;
        segments.extend(
            binned
                .segments()
                .iter()
                .map(|s| Segment { start: n + s.start, end: n + s.end, value: s.value }),
        );
    }
    if neg > 0 {
        let mut flipped: Vec<f64> = second[pos + zero..].iter().map(|v| -v).collect();
        flipped.reverse();
        let binned = bin_nonincreasing(&flipped, eta, mu, true)?;
        let offset = n + pos + zero;
        let mut neg_segs: Vec<Segment> = binned
            .segments()
            .iter()
            .map(|s| Segment {
                start: offset + (neg - 1 - s.end),
                end: offset + (neg - 1 - s.start),
                value: -s.value,
            })
            .collect();
        neg_segs.reverse();
        segments.extend(neg_segs);
    }

    let last_row = BinnedRow::new(segments, 2 * n)?;
    Ok(BinnedFactor { n, zeta: params.zeta, eta, mu, last_row })
}

/// Corrected right factor: `Rhat = (Lhat_1^{-1} L_1 R_1; Lhat_2^{-1} L_2 R_2)`.
///
/// Exactness is algebraic: `Lhat * Rhat = L_1 R_1 + L_2 R_2 = M`
/// regardless of the perturbation, as long as the blocks are invertible.
pub fn build_rhat(l: &DenseMatrix, lhat: &DenseMatrix, r: &DenseMatrix) -> Result<DenseMatrix> {
    let n = l.rows();
    if l.cols() != 2 * n || lhat.rows() != n || lhat.cols() != 2 * n || r.rows() != 2 * n || r.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "build_rhat: L {}x{}, Lhat {}x{}, R {}x{}",
            l.rows(),
            l.cols(),
            lhat.rows(),
            lhat.cols(),
            r.rows(),
            r.cols()
        )));
    }
    const MAX_CONDITION: f64 = 1e12;
    let mut blocks = Vec::with_capacity(2);
    for (idx, (c0, c1)) in [(0, n), (n, 2 * n)].into_iter().enumerate() {
        let lhat_i = lhat.block(0, n, c0, c1);
        let cond = linalg::condition_number(&lhat_i);
        if !cond.is_finite() || cond > MAX_CONDITION {
            return Err(Error::Singular(format!(
                "Lhat_{} is ill-conditioned (condition estimate {cond:.3e})",
                idx + 1
            )));
        }
        let l_i = l.block(0, n, c0, c1);
        let r_i = r.block(c0, c1, 0, n);
        let rhs = l_i.matmul(&r_i)?;
        blocks.push(linalg::solve(&lhat_i, &rhs)?);
    }
    DenseMatrix::vstack(&blocks[0], &blocks[1])
}

/// Worst slack in the perturbation condition over all entries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationReport {
    /// `max_ij (|Lhat_ij - L_ij| - eta*|L_ij| - mu)`; nonpositive means
    /// the condition holds everywhere.
    pub max_violation: f64,
    /// Entry attaining the maximum.
    pub location: (usize, usize),
}

/// Scan `|Lhat - L| <= eta*|L| + mu` entrywise.
pub fn validate_perturbation(
    l: &DenseMatrix,
    lhat: &DenseMatrix,
    eta: f64,
    mu: f64,
) -> Result<PerturbationReport> {
    if l.rows() != lhat.rows() || l.cols() != lhat.cols() {
        return Err(Error::DimensionMismatch(format!(
            "validate_perturbation: {}x{} vs {}x{}",
            l.rows(),
            l.cols(),
            lhat.rows(),
            lhat.cols()
        )));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut location = (0, 0);
    for i in 0..l.rows() {
        for j in 0..l.cols() {
            let v = (lhat.get(i, j) - l.get(i, j)).abs() - eta * l.get(i, j).abs() - mu;
            if v > max_violation {
                max_violation = v;
                location = (i, j);
            }
        }
    }
    Ok(PerturbationReport { max_violation, location })
}
