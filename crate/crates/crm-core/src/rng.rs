//! Counter-based splittable random number generator.
//!
//! Replicate `i` of a Monte Carlo run draws from stream `(seed, i)`, so
//! results are a deterministic function of the spec regardless of thread
//! scheduling. Each output is a stateless mix of `(key, counter)`, which makes
//! the generator trivially splittable.

/// Weyl increment (golden-ratio constant) used by the SplitMix64 sequence.
const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const STREAM_SALT: u64 = 0x1656_67b1_9e37_79f9;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self::stream(seed, 0)
    }

    /// Independent stream `stream` derived from `seed`.
    pub fn stream(seed: u64, stream: u64) -> Self {
        let key = mix64(mix64(seed ^ GOLDEN) ^ mix64(stream.wrapping_mul(GOLDEN) ^ STREAM_SALT));
        CounterRng { key, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        mix64(c.wrapping_mul(GOLDEN).wrapping_add(self.key)) ^ self.key.rotate_left(23)
    }

    /// Uniform double in the open interval (0, 1).
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Poisson draw: CDF inversion for small means, transformed rejection
    /// (PTRS) for large means where inversion loses accuracy.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        assert!(mean >= 0.0 && mean.is_finite(), "poisson mean must be finite and >= 0");
        if mean == 0.0 {
            0
        } else if mean < 30.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.next_f64();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cum = p;
        while u > cum {
            k += 1;
            p *= mean / k as f64;
            cum += p;
            if k > 10_000 {
                break;
            }
        }
        k
    }

    // Hoermann's PTRS transformed-rejection sampler.
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        use crate::numerics::special::ln_gamma;
        let log_mean = mean.ln();
        let b = 0.931 + 2.53 * mean.sqrt();
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.next_f64() - 0.5;
            let v = self.next_f64();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return k as u64;
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            if (v * inv_alpha / (a / (us * us) + b)).ln() <= k * log_mean - mean - ln_gamma(k + 1.0)
            {
                return k as u64;
            }
        }
    }
}
