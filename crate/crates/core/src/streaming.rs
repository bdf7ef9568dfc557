//! The differentially private continual counting mechanism.
//!
//! Released estimates are `Mx + Lhat z` with `z` i.i.d. Gaussian of
//! standard deviation `noise_multiplier * sens`, where `sens` is the
//! effective `||Rhat||_{1->2}` sensitivity.  Because every row of `Lhat`
//! is a cyclic shift of one piecewise-constant row, the per-row product
//! `(Lhat z)_i` is a short sum of `segment value * window sum` terms, and
//! stepping from row `i` to `i + 1` slides every window one position:
//! two noise-entry touches per segment per step.  With counter-based
//! noise ([`crate::noise::NoiseGen`]) the resident state is
//! `O(#segments)` reals; no noise vector is ever stored.
//!
//! A reference mode stores the length-`2n+1` noise prefix-sum table
//! instead and reads entries as differences — same estimates up to float
//! rounding, used to validate the streaming path.

use serde::{Deserialize, Serialize};

use crate::binning::{bin_factor, perturbation_params, BinnedFactor, PerturbationMode};
use crate::coeffs::GroupAlgebraFactors;
use crate::error::{Error, Result};
use crate::factorization::{
    materialize_l, materialize_r, norm_formula, DEFAULT_DENSE_LIMIT,
};
use crate::matrix::exact_norms;
use crate::noise::NoiseGen;

/// How the sensitivity `sens = ||Rhat||_{1->2}` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SensitivityMode {
    /// Build `Rhat` densely and measure the exact max column norm.
    /// Gated by the dense limit; binning uses exact per-block norms.
    ExactRhat,
    /// Closed-form bound, no dense matrices:
    /// `sqrt(F) * (1 + 2*(eta*sqrt(n F) + mu*n) * chi_L)` with
    /// `F = norm_formula(n)`; binning uses the proved norm bounds.
    NormBound,
}

/// Where noise entries come from during streaming.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseMode {
    /// O(n) reference: noise prefix sums stored at init.
    Reference,
    /// O(#segments): entries recomputed from `(seed, index)` on demand.
    Streaming,
}

/// Full mechanism configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    /// Stream length; one released estimate per input.
    pub n: usize,
    /// Target error inflation of the binned factor, in `(0, 1]`.
    pub zeta: f64,
    /// Gaussian std per unit sensitivity (`sigma`); 0 disables noise.
    pub noise_multiplier: f64,
    pub sensitivity_mode: SensitivityMode,
    pub noise_mode: NoiseMode,
    pub seed: u64,
}

impl MechanismConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            return Err(Error::invalid(format!("zeta = {} must be in (0, 1]", self.zeta)));
        }
        if !(self.noise_multiplier >= 0.0) || !self.noise_multiplier.is_finite() {
            return Err(Error::invalid(format!(
                "noise_multiplier = {} must be finite and nonnegative",
                self.noise_multiplier
            )));
        }
        Ok(())
    }
}

/// Seed-independent part of the mechanism: the binned factor collapsed to
/// plain segment arrays, plus the calibrated sensitivity.  Built once and
/// shared across Monte-Carlo trials.
#[derive(Clone, Debug)]
pub struct MechanismPlan {
    n: usize,
    sigma: f64,
    sens: f64,
    /// Segment representatives of the binned last row, in index order.
    values: Vec<f64>,
    /// Segment bounds `(start, end inclusive)` over `[0, 2n)`.
    bounds: Vec<(usize, usize)>,
}

impl MechanismPlan {
    pub fn new(config: &MechanismConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n;
        let factors = GroupAlgebraFactors::closed_form(n)?;

        // Degenerate n = 1: the second block of L is the zero 1x1 matrix,
        // so the perturbation machinery does not apply; binning is
        // skipped and Lhat = L exactly.
        let (binned, eta, mu, chi) = if n == 1 {
            (BinnedFactor::exact(&factors), 0.0, 0.0, 0.0)
        } else {
            let pmode = match config.sensitivity_mode {
                SensitivityMode::ExactRhat => PerturbationMode::Exact,
                SensitivityMode::NormBound => PerturbationMode::Bound,
            };
            let params = perturbation_params(&factors, config.zeta, pmode)?;
            let bf = bin_factor(&factors, &params)?;
            (bf, params.eta, params.mu, params.chi_l)
        };

        let sens = match config.sensitivity_mode {
            SensitivityMode::ExactRhat => {
                if n == 1 {
                    // Lhat = L, so Rhat = R; measure R directly.
                    let r = materialize_r(&factors)?;
                    exact_norms(&r).max_col_sq.sqrt()
                } else {
                    let l = materialize_l(&factors)?;
                    let r = materialize_r(&factors)?;
                    let lhat = binned.dense_with_limit(DEFAULT_DENSE_LIMIT)?;
                    let rhat = crate::binning::build_rhat(&l, &lhat, &r)?;
                    exact_norms(&rhat).max_col_sq.sqrt()
                }
            }
            SensitivityMode::NormBound => {
                let f = norm_formula(n);
                f.sqrt() * (1.0 + 2.0 * (eta * (n as f64 * f).sqrt() + mu * n as f64) * chi)
            }
        };

        let values = binned.last_row().segments().iter().map(|s| s.value).collect();
        let bounds = binned.last_row().segments().iter().map(|s| (s.start, s.end)).collect();
        Ok(MechanismPlan {
            n,
            sigma: config.noise_multiplier,
            sens,
            values,
            bounds,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sensitivity(&self) -> f64 {
        self.sens
    }

    pub fn segment_count(&self) -> usize {
        self.values.len()
    }

    /// Start a live stream off this plan, sharing the factor and
    /// sensitivity work across independent runs (trials, noise-mode
    /// comparisons).
    pub fn stream(&self, noise_mode: NoiseMode, seed: u64) -> StreamState {
        StreamState::new(self, noise_mode, seed)
    }
}

enum NoiseSource {
    Streaming { gen: NoiseGen, scale: f64 },
    Reference { prefix: Vec<f64> },
}

impl NoiseSource {
    /// Noise entry `z_j`, `j in [0, 2n)`.
    #[inline]
    fn z(&self, j: usize) -> f64 {
        match self {
            NoiseSource::Streaming { gen, scale } => scale * gen.gaussian(j as u64),
            NoiseSource::Reference { prefix } => prefix[j + 1] - prefix[j],
        }
    }

    fn resident_reals(&self) -> usize {
        match self {
            NoiseSource::Streaming { .. } => 1, // the scale
            NoiseSource::Reference { prefix } => prefix.len(),
        }
    }
}

/// Live mechanism state; advance with [`StreamState::step`].
pub struct StreamState {
    n: usize,
    step: usize,
    true_sum: f64,
    sigma: f64,
    sens: f64,
    /// Segment representatives (same order as `windows` / `bin_sums`).
    values: Vec<f64>,
    /// Current noise-index window `(lo, hi)` of each segment, inclusive,
    /// cyclic over `[0, 2n)`.
    windows: Vec<(usize, usize)>,
    /// Sum of `z` over each window.
    bin_sums: Vec<f64>,
    noise: NoiseSource,
    /// `z` evaluations made by the most recent `step` call.
    regens_last_step: usize,
}

impl StreamState {
    fn new(plan: &MechanismPlan, noise_mode: NoiseMode, seed: u64) -> Self {
        let n = plan.n;
        let wrap = 2 * n;
        let gen = NoiseGen::new(seed);
        let scale = plan.sigma * plan.sens;

        let noise = match noise_mode {
            NoiseMode::Streaming => NoiseSource::Streaming { gen, scale },
            NoiseMode::Reference => {
                let mut prefix = Vec::with_capacity(wrap + 1);
                prefix.push(0.0);
                let mut acc = 0.0;
                for j in 0..wrap {
                    acc += scale * gen.gaussian(j as u64);
                    prefix.push(acc);
                }
                NoiseSource::Reference { prefix }
            }
        };

        // Row 0 reads last-row index (j + n - 1) mod 2n at noise position
        // j, so segment [a, b] covers the window [a - (n-1), b - (n-1)].
        let shift = n + 1; // == -(n-1) mod 2n
        let windows: Vec<(usize, usize)> = plan
            .bounds
            .iter()
            .map(|&(a, b)| ((a + shift) % wrap, (b + shift) % wrap))
            .collect();

        // Initial window sums, in ascending cyclic order from lo.  Both
        // noise modes sum freshly generated entries here (not prefix
        // differences) so the initial bin_sums agree bit-for-bit.
        let bin_sums: Vec<f64> = windows
            .iter()
            .map(|&(lo, hi)| {
                let mut acc = 0.0;
                let mut j = lo;
                loop {
                    acc += scale * gen.gaussian(j as u64);
                    if j == hi {
                        break;
                    }
                    j = (j + 1) % wrap;
                }
                acc
            })
            .collect();

        StreamState {
            n,
            step: 0,
            true_sum: 0.0,
            sigma: plan.sigma,
            sens: plan.sens,
            values: plan.values.clone(),
            windows,
            bin_sums,
            noise,
            regens_last_step: 0,
        }
    }

    /// Consume `x_t`, release the private prefix-sum estimate for step
    /// `t`, and slide the noise windows to the next row.
    pub fn step(&mut self, x: f64) -> Result<f64> {
        if self.step >= self.n {
            return Err(Error::StreamExhausted { n: self.n });
        }
        self.true_sum += x;
        let mut noisy = 0.0;
        for (v, s) in self.values.iter().zip(&self.bin_sums) {
            noisy += v * s;
        }
        let estimate = self.true_sum + noisy;

        self.step += 1;
        self.regens_last_step = 0;
        if self.step < self.n {
            let wrap = 2 * self.n;
            for ((lo, hi), sum) in self.windows.iter_mut().zip(&mut self.bin_sums) {
                let enter = (*hi + 1) % wrap;
                *sum += self.noise.z(enter);
                *sum -= self.noise.z(*lo);
                self.regens_last_step += 2;
                *hi = enter;
                *lo = (*lo + 1) % wrap;
            }
        }
        Ok(estimate)
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Effective sensitivity `sens` the noise was calibrated with.
    pub fn sensitivity(&self) -> f64 {
        self.sens
    }

    pub fn noise_multiplier(&self) -> f64 {
        self.sigma
    }

    pub fn true_sum(&self) -> f64 {
        self.true_sum
    }

    pub fn segment_count(&self) -> usize {
        self.values.len()
    }

    /// Number of f64 values held by the state (the memory contract is
    /// asserted on this count, not on OS-level measurement).
    pub fn resident_reals(&self) -> usize {
        // values + bin_sums + true_sum + sigma + sens + noise source.
        self.values.len() + self.bin_sums.len() + 3 + self.noise.resident_reals()
    }

    /// Noise evaluations made by the most recent `step` call.
    pub fn regens_last_step(&self) -> usize {
        self.regens_last_step
    }
}

/// Build a ready-to-run [`StreamState`] from a configuration.
pub fn mechanism_init(config: &MechanismConfig) -> Result<StreamState> {
    let plan = MechanismPlan::new(config)?;
    Ok(StreamState::new(&plan, config.noise_mode, config.seed))
}

/// Fold [`StreamState::step`] over `inputs` (at most `n` of them).
pub fn run_stream(inputs: &[f64], config: &MechanismConfig) -> Result<Vec<f64>> {
    if inputs.len() > config.n {
        return Err(Error::invalid(format!(
            "{} inputs exceed stream length n = {}",
            inputs.len(),
            config.n
        )));
    }
    let mut state = mechanism_init(config)?;
    inputs.iter().map(|&x| state.step(x)).collect()
}

/// Monte-Carlo error summary from [`empirical_error`].
#[derive(Clone, Debug)]
pub struct EmpiricalError {
    /// Mean squared error of the estimate at each step.
    pub per_step_mse: Vec<f64>,
    /// `sqrt(mean_i MSE_i)` — comparable to MeanSE * sigma.
    pub mean_rmse: f64,
    /// `sqrt(max_i MSE_i)` — comparable to MaxSE * sigma.
    pub max_rmse: f64,
}

/// Run `trials` independent streams (derived seeds) over `inputs` and
/// measure the squared estimate error per step.
pub fn empirical_error(
    config: &MechanismConfig,
    trials: usize,
    inputs: &[f64],
) -> Result<EmpiricalError> {
    use rayon::prelude::*;

    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if inputs.len() > config.n {
        return Err(Error::invalid(format!(
            "{} inputs exceed stream length n = {}",
            inputs.len(),
            config.n
        )));
    }
    let plan = MechanismPlan::new(config)?;
    let mut truth = Vec::with_capacity(inputs.len());
    let mut acc = 0.0;
    for &x in inputs {
        acc += x;
        truth.push(acc);
    }

    let steps = inputs.len();
    let total_sq = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seed = NoiseGen::derive(config.seed, trial as u64);
            let mut state = StreamState::new(&plan, config.noise_mode, seed);
            let mut sq = vec![0.0f64; steps];
            for (t, &x) in inputs.iter().enumerate() {
                let est = state.step(x).expect("stream length checked above");
                let err = est - truth[t];
                sq[t] = err * err;
            }
            sq
        })
        .reduce(
            || vec![0.0f64; steps],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
                a
            },
        );

    let per_step_mse: Vec<f64> = total_sq.iter().map(|s| s / trials as f64).collect();
    let mean_mse = per_step_mse.iter().sum::<f64>() / per_step_mse.len().max(1) as f64;
    let max_mse = per_step_mse.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok(EmpiricalError {
        per_step_mse,
        mean_rmse: mean_mse.sqrt(),
        max_rmse: max_mse.sqrt(),
    })
}
