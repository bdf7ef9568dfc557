//! Counter-based deterministic Gaussian noise.
//!
//! The streaming mechanism re-reads old noise entries when a segment
//! boundary slides past them, so `z_j` must be recomputable in O(1) from
//! `(seed, j)` alone — a counter-based generator rather than a sequential
//! one.  The construction is fixed and documented so that the z sequence
//! is bit-for-bit reproducible across modes, runs, and platforms:
//!
//! * word `w(c) = splitmix64(seed + c * GOLDEN)` — the SplitMix64
//!   finalizer applied to the c-th point of a Weyl sequence;
//! * `uniform(c) = (w(c) >> 11 + 1) * 2^-53`, uniform on `(0, 1]`
//!   (never 0, so the logarithm below is safe);
//! * `gaussian(j) = sqrt(-2 ln uniform(2j)) * cos(2 pi uniform(2j+1))`
//!   — the cosine Box-Muller branch on counters `2j`, `2j+1`.

/// Weyl-sequence increment (the 64-bit golden ratio constant).
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stateless generator identified by its seed; all outputs are pure
/// functions of `(seed, counter)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseGen {
    seed: u64,
}

/// SplitMix64 finalizer (Steele, Lea, Flood; also xorshift literature).
fn splitmix64(mut x: u64) -> u64 {
    x ^= x >> 30;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

impl NoiseGen {
    pub fn new(seed: u64) -> Self {
        NoiseGen { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an unrelated seed for an independent stream (per-trial
    /// seeding in Monte-Carlo runs).
    pub fn derive(seed: u64, stream: u64) -> u64 {
        splitmix64(seed ^ splitmix64(stream.wrapping_mul(GOLDEN) ^ GOLDEN))
    }

    /// Raw 64-bit word at counter `c`.
    #[inline]
    pub fn word(&self, c: u64) -> u64 {
        splitmix64(self.seed.wrapping_add(c.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `(0, 1]` at counter `c` (53-bit resolution, never 0).
    #[inline]
    pub fn uniform(&self, c: u64) -> f64 {
        (((self.word(c) >> 11) + 1) as f64) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal at index `j`, recomputable in O(1).
    #[inline]
    pub fn gaussian(&self, j: u64) -> f64 {
        let u1 = self.uniform(2 * j);
        let u2 = self.uniform(2 * j + 1);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
