//! Shot-noise and decoherence-skew model for sampled expectation values.
//!
//! An observable with outcomes in `[-r, r]` and true mean `m` is estimated from
//! `N` shots as `Normal(eps m, (r^2 - (eps m)^2) / N)`, where the skew
//! `eps = (1 - p)^D` shrinks values toward zero after `D` gates with error rate `p`.
//! Draws are clamped back into `[-r, r]`.
//!
//! Random streams are counter-based: each entry draws from a ChaCha stream keyed
//! by `(seed, iteration, i, j)`, so sampling order and thread count never change results.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Error probability per gate.
    pub gate_error_rate: f64,
    /// Gates per circuit; `None` uses the ansatz gate count.
    pub gate_count: Option<usize>,
    pub shots_a: u64,
    pub shots_c: u64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.gate_error_rate) {
            return Err(Error::InvalidConfig(format!(
                "gate error rate {} outside [0, 1)",
                self.gate_error_rate
            )));
        }
        if self.shots_a == 0 || self.shots_c == 0 {
            return Err(Error::InvalidConfig("shot counts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn skew(&self, default_gate_count: usize) -> f64 {
        skew_factor(self.gate_error_rate, self.gate_count.unwrap_or(default_gate_count))
    }
}

/// `(1 - p)^D`.
pub fn skew_factor(p: f64, gate_count: usize) -> f64 {
    (1.0 - p).powf(gate_count as f64)
}

/// Draws one noisy estimate of an observable with mean `mean` and outcome range `[-half_range, half_range]`.
pub fn sample_expectation<R: Rng + ?Sized>(
    mean: f64,
    half_range: f64,
    shots: u64,
    skew: f64,
    rng: &mut R,
) -> Result<f64> {
    if mean.abs() > half_range * (1.0 + 1e-12) || !mean.is_finite() {
        return Err(Error::OutsideRange { mean, range: half_range });
    }
    if shots == 0 {
        return Err(Error::InvalidConfig("shot count must be at least 1".into()));
    }
    let centre = skew * mean.clamp(-half_range, half_range);
    let variance = ((half_range * half_range - centre * centre) / shots as f64).max(0.0);
    let z: f64 = StandardNormal.sample(rng);
    Ok((centre + variance.sqrt() * z).clamp(-half_range, half_range))
}

/// Which family of estimates a stream feeds; keeps A and C draws independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamKind {
    AMatrix = 0,
    CVector = 1,
}

/// Independent random stream for one sampled entry.
pub fn entry_stream(seed: u64, iteration: u64, kind: StreamKind, i: u64, j: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, iteration, i, j]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(kind as u64);
    rng
}

/// Noise sampler bound to one configuration and circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSampler {
    pub config: NoiseConfig,
    pub skew: f64,
}

impl NoiseSampler {
    pub fn new(config: NoiseConfig, default_gate_count: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, skew: config.skew(default_gate_count) })
    }

    /// Noisy A entry `(i, j)` with outcome range `[-half_range, half_range]`.
    pub fn sample_a(&self, iteration: u64, i: usize, j: usize, mean: f64, half_range: f64) -> Result<f64> {
        let mut rng = entry_stream(self.config.seed, iteration, StreamKind::AMatrix, i as u64, j as u64);
        sample_expectation(mean, half_range, self.config.shots_a, self.skew, &mut rng)
    }

    /// Noisy raw C-term observable for parameter `i`, insertion `k` and Hamiltonian term `alpha`.
    pub fn sample_c(&self, iteration: u64, i: usize, k: usize, alpha: usize, mean: f64) -> Result<f64> {
        let j = ((k as u64) << 32) | alpha as u64;
        let mut rng = entry_stream(self.config.seed, iteration, StreamKind::CVector, i as u64, j);
        sample_expectation(mean, 1.0, self.config.shots_c, self.skew, &mut rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn skew_examples() {
        assert!((skew_factor(1e-4, 100) - 0.990_049_338_5).abs() < 1e-9);
        assert_eq!(skew_factor(0.0, 57), 1.0);
        assert_eq!(skew_factor(1e-4, 0), 1.0);
    }

    #[test]
    fn boundary_mean_has_no_spread() {
        let mut rng = entry_stream(1, 0, StreamKind::AMatrix, 0, 0);
        for _ in 0..100 {
            assert_eq!(sample_expectation(0.25, 0.25, 1, 1.0, &mut rng).unwrap(), 0.25);
            assert_eq!(sample_expectation(-1.0, 1.0, 7, 1.0, &mut rng).unwrap(), -1.0);
        }
    }

    #[test]
    fn rejects_out_of_range_mean() {
        let mut rng = entry_stream(1, 0, StreamKind::AMatrix, 0, 0);
        assert!(matches!(
            sample_expectation(0.3, 0.25, 10, 1.0, &mut rng),
            Err(Error::OutsideRange { .. })
        ));
    }

    #[test]
    fn draws_stay_in_range() {
        let mut rng = entry_stream(9, 3, StreamKind::CVector, 1, 2);
        for _ in 0..10_000 {
            let x = sample_expectation(0.0, 0.25, 1, 1.0, &mut rng).unwrap();
            assert!(x.abs() <= 0.25);
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let cfg = NoiseConfig { gate_error_rate: 1e-4, gate_count: None, shots_a: 100, shots_c: 100, seed: 5 };
        let s = NoiseSampler::new(cfg, 10).unwrap();
        let a = s.sample_a(4, 1, 2, 0.1, 0.25).unwrap();
        assert_eq!(a.to_bits(), s.sample_a(4, 1, 2, 0.1, 0.25).unwrap().to_bits());
        assert_ne!(a, s.sample_a(5, 1, 2, 0.1, 0.25).unwrap());
        assert_ne!(a, s.sample_a(4, 2, 1, 0.1, 0.25).unwrap());
        let c = s.sample_c(4, 1, 0, 2, 0.1).unwrap();
        assert_eq!(c.to_bits(), s.sample_c(4, 1, 0, 2, 0.1).unwrap().to_bits());
    }

    #[test]
    fn config_validation() {
        let mut cfg = NoiseConfig { gate_error_rate: 1.0, gate_count: None, shots_a: 1, shots_c: 1, seed: 0 };
        assert!(cfg.validate().is_err());
        cfg.gate_error_rate = 0.0;
        cfg.shots_c = 0;
        assert!(cfg.validate().is_err());
        cfg.shots_c = 1;
        assert!(cfg.validate().is_ok());
        cfg.gate_count = Some(100);
        cfg.gate_error_rate = 1e-4;
        assert!((cfg.skew(3) - skew_factor(1e-4, 100)).abs() < 1e-15);
    }
}
