//! Reproducible random streams and exact Poisson sampling.
//!
//! Every draw comes from a ChaCha8 stream keyed by `(seed, domain)` and
//! positioned by `(index, replicate)`, so a replicate's counts do not depend
//! on which other replicates were generated or in what order.

use rand_chacha::ChaCha8Rng;
#[allow(unused_imports)] // inherent when std is linked
use num_traits::Float;
use rand_core::{RngCore, SeedableRng};

/// Stream domains; keeps unrelated consumers of one seed independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Counts = 1,
    Resample = 2,
    Starts = 3,
}

pub struct KeyedRng(ChaCha8Rng);

impl KeyedRng {
    pub fn new(seed: u64, domain: Domain, index: u32, replicate: u32) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(((replicate as u64) << 32) | index as u64);
        Self(rng)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (core::f64::consts::TAU * u2).cos()
    }

    pub fn poisson(&mut self, mean: f64) -> u64 {
        poisson(self, mean)
    }
}

/// Means below this use inverse-transform sampling.
pub const INVERSION_LIMIT: f64 = 30.0;

/// Exact Poisson draw: sequential inversion for small means, Hörmann's
/// transformed rejection (PTRS) above [`INVERSION_LIMIT`].
pub fn poisson(rng: &mut KeyedRng, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        poisson_inversion(rng, mean)
    } else {
        poisson_ptrs(rng, mean)
    }
}

fn poisson_inversion(rng: &mut KeyedRng, mean: f64) -> u64 {
    let u = rng.uniform();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        if p == 0.0 && (k as f64) > mean {
            // Round-off left the cdf just short of u in the far tail.
            break;
        }
    }
    k
}

fn poisson_ptrs(rng: &mut KeyedRng, mean: f64) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn moments(mean: f64, n: u32) -> (f64, f64) {
        let draws: Vec<f64> = (0..n)
            .map(|i| KeyedRng::new(42, Domain::Counts, 0, i).poisson(mean) as f64)
            .collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        (m, var)
    }

    #[test]
    fn zero_mean_gives_zero() {
        let mut rng = KeyedRng::new(1, Domain::Counts, 0, 0);
        for _ in 0..100 {
            assert_eq!(rng.poisson(0.0), 0);
        }
    }

    #[test]
    fn mean_and_variance_at_100() {
        // 3σ of the sample mean over 10⁴ draws is 3·√(100/10⁴) = 0.3 ≤ 1.
        let (m, var) = moments(100.0, 10_000);
        assert!((m - 100.0).abs() < 1.0, "mean {m}");
        assert!((var - 100.0).abs() < 10.0, "variance {var}");
    }

    #[test]
    fn small_mean_branch() {
        let (m, var) = moments(3.5, 20_000);
        assert!((m - 3.5).abs() < 3.0 * (3.5f64 / 20_000.0).sqrt() * 1.5);
        assert!((var - 3.5).abs() < 0.25);
    }

    #[test]
    fn small_mean_pmf_matches() {
        // Empirical P(k) against the exact pmf at mean 2.
        let n = 40_000u32;
        let mut hist = [0u32; 12];
        for i in 0..n {
            let k = KeyedRng::new(7, Domain::Counts, 3, i).poisson(2.0) as usize;
            if k < hist.len() {
                hist[k] += 1;
            }
        }
        let mut p = (-2.0f64).exp();
        for (k, &h) in hist.iter().enumerate().take(7) {
            if k > 0 {
                p *= 2.0 / k as f64;
            }
            let sd = (p * (1.0 - p) / n as f64).sqrt();
            assert!((h as f64 / n as f64 - p).abs() < 5.0 * sd, "k={k}");
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = KeyedRng::new(9, Domain::Counts, 5, 2).poisson(1000.0);
        let b = KeyedRng::new(9, Domain::Counts, 5, 2).poisson(1000.0);
        assert_eq!(a, b);
        let xs: Vec<f64> = (0..4)
            .map(|i| KeyedRng::new(9, Domain::Counts, i, 0).uniform())
            .collect();
        assert!(xs.windows(2).all(|w| w[0] != w[1]));
        let other = KeyedRng::new(9, Domain::Resample, 0, 0).uniform();
        assert_ne!(other, xs[0]);
    }
}
