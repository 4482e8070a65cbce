//! Privacy primitives: budgets, seeded random streams, Laplace noise and the
//! exponential mechanism.
//!
//! The exponential mechanism takes one sensitivity per candidate response.
//! Whether those are response-dependent or a single global bound repeated is
//! the caller's choice (see [`crate::sensitivity`]).

use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{invalid, Error, Result};
use crate::histogram::{Histogram, NoisyHistogram};

/// Total budget `epsilon`, split as `eps1 = fraction * epsilon` for grid
/// tuning and `eps2 = epsilon - eps1` for the histogram release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    eps1_fraction: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, eps1_fraction: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(invalid("epsilon", "must be finite and positive"));
        }
        if !(eps1_fraction > 0.0 && eps1_fraction < 1.0) {
            return Err(invalid("eps1_fraction", "must lie in (0, 1)"));
        }
        Ok(Self {
            epsilon,
            eps1_fraction,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eps1_fraction(&self) -> f64 {
        self.eps1_fraction
    }

    pub fn eps1(&self) -> f64 {
        self.eps1_fraction * self.epsilon
    }

    pub fn eps2(&self) -> f64 {
        self.epsilon - self.eps1()
    }

    /// Laplace scale for the release phase (histogram sensitivity is 1).
    pub fn release_noise(&self) -> NoiseSpec {
        NoiseSpec {
            lambda: 1.0 / self.eps2(),
        }
    }
}

/// Sequential-composition accountant: charges add up and may not exceed the
/// capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyAccountant {
    capacity: f64,
    spent: f64,
}

impl PrivacyAccountant {
    pub fn new(capacity: f64) -> Self {
        Self {
            capacity,
            spent: 0.0,
        }
    }

    pub fn charge(&mut self, epsilon: f64) -> Result<()> {
        let remaining = self.capacity - self.spent;
        // allow rounding slack from splitting the budget in floating point
        if epsilon > remaining + 1e-12 * self.capacity {
            return Err(Error::BudgetExhausted {
                requested: epsilon,
                remaining,
            });
        }
        self.spent += epsilon;
        Ok(())
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    pub fn remaining(&self) -> f64 {
        self.capacity - self.spent
    }
}

/// Laplace noise scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub lambda: f64,
}

impl NoiseSpec {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", "must be finite and positive"));
        }
        Ok(Self { lambda })
    }

    /// `lambda = 1 / eps2` for a sensitivity-1 release.
    pub fn from_eps2(eps2: f64) -> Result<Self> {
        if !(eps2.is_finite() && eps2 > 0.0) {
            return Err(invalid("eps2", "must be finite and positive"));
        }
        Ok(Self { lambda: 1.0 / eps2 })
    }
}

/// A reproducible random stream: ChaCha20 keyed by `seed`, on stream `stream`.
///
/// Identical `(seed, stream)` pairs yield identical sequences. Use
/// [`RngStream::fork`] to derive named substreams for independent consumers.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha20Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Fresh substream named `label`, independent of this stream's position.
    pub fn fork(&self, label: u64) -> Self {
        Self::new(self.seed, splitmix64(self.stream ^ splitmix64(label)))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    fn next_open01(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// One draw from `Lap(0, lambda)` by inverse CDF.
pub fn laplace_sample(rng: &mut RngStream, lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", "must be finite and positive"));
    }
    Ok(laplace_unchecked(rng, lambda))
}

fn laplace_unchecked(rng: &mut RngStream, lambda: f64) -> f64 {
    // u in (-1/2, 1/2); the open endpoint keeps ln() finite.
    let u = 0.5 - rng.next_open01();
    let sign = if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    };
    -lambda * sign * libm::log(1.0 - 2.0 * u.abs())
}

/// Add i.i.d. `Lap(0, 1/eps2)` noise to every cell. No clamping or rounding.
pub fn perturb_histogram(h: &Histogram, eps2: f64, rng: &mut RngStream) -> Result<NoisyHistogram> {
    let noise = NoiseSpec::from_eps2(eps2)?;
    perturb_with(h, noise, rng)
}

pub fn perturb_with(h: &Histogram, noise: NoiseSpec, rng: &mut RngStream) -> Result<NoisyHistogram> {
    let counts = h
        .counts()
        .iter()
        .map(|&c| c as f64 + laplace_unchecked(rng, noise.lambda))
        .collect();
    NoisyHistogram::from_counts(*crate::histogram::CellCounts::grid(h), counts)
}

/// Selection probabilities `p_r ∝ exp(eps1 * s_r / (2 * Δ_r))`.
///
/// The largest exponent is subtracted before exponentiation.
pub fn exp_mechanism_probabilities(scores: &[f64], sensitivities: &[f64], eps1: f64) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::Empty("scores"));
    }
    if scores.len() != sensitivities.len() {
        return Err(invalid("sensitivities", "length must match scores"));
    }
    if !(eps1.is_finite() && eps1 > 0.0) {
        return Err(invalid("eps1", "must be finite and positive"));
    }
    if sensitivities.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(invalid("sensitivities", "must be finite and positive"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite);
    }
    let exponents: Vec<f64> = scores
        .iter()
        .zip(sensitivities)
        .map(|(s, d)| eps1 * s / (2.0 * d))
        .collect();
    let top = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = exponents.iter().map(|e| libm::exp(e - top)).collect();
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }
    Ok(weights)
}

/// Draw an index from a categorical distribution.
pub fn exp_mechanism_sample(rng: &mut RngStream, probs: &[f64]) -> Result<usize> {
    if probs.is_empty() {
        return Err(Error::Empty("probabilities"));
    }
    let sum: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution { sum });
    }
    let u = rng.next_f64() * sum;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // u landed in the rounding gap above the last partial sum
    Ok(probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1))
}
