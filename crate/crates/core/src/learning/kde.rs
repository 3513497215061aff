//! Product-Gaussian kernel density over object sizes `(length, width, height)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Bandwidths are never fitted below this (meters).
pub const BANDWIDTH_FLOOR: f64 = 1e-4;
const MAX_RESAMPLE: usize = 100;
const CLAMP_SIZE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SizeKde {
    pub samples: Vec<Vec3>,
    pub bandwidth: Vec3,
}

impl SizeKde {
    pub fn new(samples: Vec<Vec3>, bandwidth: Vec3) -> Result<Self> {
        let kde = SizeKde { samples, bandwidth };
        kde.validate()?;
        Ok(kde)
    }

    /// A single-sample, zero-bandwidth model: always yields `size`.
    pub fn point(size: Vec3) -> Self {
        SizeKde {
            samples: vec![size],
            bandwidth: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Invalid("size model has no samples".into()));
        }
        if self.bandwidth.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::Invalid("size model bandwidth must be finite and >= 0".into()));
        }
        if self.samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("size model sample is not finite".into()));
        }
        Ok(())
    }

    /// Fits bandwidths per dimension with Silverman's rule `1.06 σ̂ n^{-1/5}`,
    /// floored at [`BANDWIDTH_FLOOR`].
    pub fn fit(samples: &[Vec3]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Invalid("cannot fit a size model to zero samples".into()));
        }
        let n = samples.len() as f64;
        let mut bandwidth = [0.0; 3];
        for (d, h) in bandwidth.iter_mut().enumerate() {
            let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n;
            let var = if samples.len() > 1 {
                samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            *h = (1.06 * var.sqrt() * n.powf(-0.2)).max(BANDWIDTH_FLOOR);
        }
        SizeKde::new(samples.to_vec(), bandwidth)
    }

    /// Density at `x`. A zero-bandwidth dimension uses an indicator kernel
    /// (mass 1 at exactly the sample value).
    pub fn density(&self, x: Vec3) -> f64 {
        let mut total = 0.0;
        for s in &self.samples {
            let mut k = 1.0;
            for d in 0..3 {
                let h = self.bandwidth[d];
                if h == 0.0 {
                    if x[d] != s[d] {
                        k = 0.0;
                        break;
                    }
                } else {
                    let z = (x[d] - s[d]) / h;
                    k *= (-0.5 * z * z).exp() / (h * (2.0 * PI).sqrt());
                }
            }
            total += k;
        }
        total / self.samples.len() as f64
    }

    pub fn mean(&self) -> Vec3 {
        let n = self.samples.len() as f64;
        let mut m = [0.0; 3];
        for s in &self.samples {
            for d in 0..3 {
                m[d] += s[d] / n;
            }
        }
        m
    }

    /// Draws a size: uniform sample pick plus per-dimension Gaussian noise.
    /// Noise giving a non-positive dimension is redrawn around the same pick;
    /// after 100 failures the offending dimensions are clamped to 1 mm.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let mut last = [0.0; 3];
        let base = self.samples[rng.random_range(0..self.samples.len())];
        for _ in 0..MAX_RESAMPLE {
            for d in 0..3 {
                let z: f64 = StandardNormal.sample(rng);
                last[d] = base[d] + self.bandwidth[d] * z;
            }
            if last.iter().all(|v| *v > 0.0) {
                return last;
            }
        }
        last.map(|v| if v > 0.0 { v } else { CLAMP_SIZE })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_sample_fit_uses_floor() {
        let kde = SizeKde::fit(&[[1.9, 1.6, 0.5]]).unwrap();
        assert_eq!(kde.bandwidth, [BANDWIDTH_FLOOR; 3]);
        assert!(kde.density([1.9, 1.6, 0.5]) > kde.density([1.9, 1.6, 0.5001]));
    }

    #[test]
    fn zero_bandwidth_returns_sample_verbatim() {
        let kde = SizeKde::point([1.9, 1.6, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(kde.sample(&mut rng), [1.9, 1.6, 0.5]);
        }
        assert_eq!(kde.density([1.9, 1.6, 0.5]), 1.0);
        assert_eq!(kde.density([1.9, 1.6, 0.6]), 0.0);
    }

    #[test]
    fn seeded_draws_repeat() {
        let kde = SizeKde::fit(&[[1.0, 1.0, 1.0], [2.0, 1.5, 0.5]]).unwrap();
        let a = kde.sample(&mut ChaCha8Rng::seed_from_u64(9));
        let b = kde.sample(&mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn equal_samples_draw_mean() {
        let kde = SizeKde::fit(&[[0.7, 0.4, 0.9]; 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let mut m = [0.0; 3];
        for _ in 0..n {
            let s = kde.sample(&mut rng);
            for d in 0..3 {
                m[d] += s[d] / n as f64;
            }
        }
        for (d, v) in [0.7, 0.4, 0.9].iter().enumerate() {
            assert!((m[d] - v).abs() <= 3e-4);
        }
    }

    #[test]
    fn two_cluster_draw_mean() {
        let mut samples = vec![[1.0, 1.0, 1.0]; 10];
        samples.extend(vec![[3.0, 3.0, 3.0]; 10]);
        let kde = SizeKde::fit(&samples).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000;
        let mut m = [0.0; 3];
        for _ in 0..n {
            let s = kde.sample(&mut rng);
            for d in 0..3 {
                m[d] += s[d] / n as f64;
            }
        }
        for v in m {
            assert!((v - 2.0).abs() < 0.05, "{v}");
        }
    }

    #[test]
    fn single_sample_spread_matches_bandwidth() {
        let kde = SizeKde::new(vec![[2.0, 2.0, 2.0]], [0.1, 0.2, 0.05]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws: Vec<Vec3> = (0..10_000).map(|_| kde.sample(&mut rng)).collect();
        for d in 0..3 {
            let mean = draws.iter().map(|s| s[d]).sum::<f64>() / draws.len() as f64;
            let var = draws.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>()
                / (draws.len() - 1) as f64;
            let rel = (var.sqrt() - kde.bandwidth[d]).abs() / kde.bandwidth[d];
            assert!(rel < 0.2, "dim {d}: rel {rel}");
        }
    }

    #[test]
    fn draws_are_positive_and_clamped() {
        let kde = SizeKde::new(vec![[0.001, 1.0, 1.0]], [5.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            assert!(kde.sample(&mut rng).iter().all(|v| *v > 0.0));
        }
        let always_negative = SizeKde::new(vec![[-1.0, 1.0, 1.0]], [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(always_negative.sample(&mut rng), [1e-3, 1.0, 1.0]);
    }

    #[test]
    fn density_integrates_to_one_along_a_line() {
        // with two dims at indicator kernels, the third integrates to 1
        let kde = SizeKde::new(vec![[1.0, 1.0, 1.0], [1.3, 1.0, 1.0]], [0.2, 0.0, 0.0]).unwrap();
        let step = 1e-3;
        let integral: f64 = (0..4000)
            .map(|i| kde.density([-1.0 + i as f64 * step, 1.0, 1.0]) * step)
            .sum();
        assert!((integral - 1.0).abs() < 1e-6);
    }
}
