//! Counter-based Brownian increments.
//!
//! Every increment is addressed by `(seed, path, step)`: the ChaCha stream id
//! is derived from the path index and the word position from the absolute
//! step index, so any slice of any path can be regenerated without touching
//! the others. Results therefore do not depend on how paths are scheduled
//! across threads. The initial point is deliberately not part of the key:
//! all initial points at the same path index see the same noise.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{domain, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Source of Brownian increments on a uniform time grid anchored at `origin`.
///
/// Step `k` covers `[origin + k*dt, origin + (k+1)*dt]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianSource {
    seed: u64,
    dim: usize,
    dt: f64,
    origin: f64,
    antithetic: bool,
}

impl BrownianSource {
    pub fn new(seed: u64, dim: usize, dt: f64, origin: f64) -> Self {
        Self {
            seed,
            dim,
            dt,
            origin,
            antithetic: false,
        }
    }

    /// Pair paths `(2i, 2i+1)` on one stream with opposite signs.
    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn antithetic(&self) -> bool {
        self.antithetic
    }

    fn words_per_step(&self) -> u128 {
        // each Box-Muller pair consumes two u64 = four u32 words
        (4 * self.dim.div_ceil(2)) as u128
    }

    /// Index of the grid step starting at `time`; errors when `time` is off-grid.
    pub fn step_index(&self, time: f64) -> Result<u64> {
        let k = (time - self.origin) / self.dt;
        let kr = k.round();
        if kr < 0.0 || (k - kr).abs() > 1e-6 {
            return domain(format!(
                "time {time} is not aligned with the noise grid (origin {}, dt {})",
                self.origin, self.dt
            ));
        }
        Ok(kr as u64)
    }

    /// Fill `out` (length `count * dim`) with the increments of `path` for
    /// steps `first_step .. first_step + count`.
    pub fn fill(&self, path: u64, first_step: u64, out: &mut [f64]) {
        let d = self.dim;
        debug_assert_eq!(out.len() % d, 0);
        let (stream, sign) = if self.antithetic {
            (path / 2, if path % 2 == 0 { 1.0 } else { -1.0 })
        } else {
            (path, 1.0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng.set_word_pos(first_step as u128 * self.words_per_step());
        let scale = sign * self.dt.sqrt();
        for step in out.chunks_exact_mut(d) {
            let mut i = 0;
            while i < d {
                let (z0, z1) = box_muller(rng.next_u64(), rng.next_u64());
                step[i] = scale * z0;
                if i + 1 < d {
                    step[i + 1] = scale * z1;
                }
                i += 2;
            }
        }
    }

    /// Convenience: increments of one path as a fresh vector.
    pub fn increments(&self, path: u64, first_step: u64, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count * self.dim];
        self.fill(path, first_step, &mut out);
        out
    }
}

fn box_muller(a: u64, b: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((a >> 11) + 1) as f64 * SCALE;
    let u2 = (b >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TWO_PI * u2).sin_cos();
    (r * c, r * s)
}

/// Sanity gate on normalised increments: the overall sample mean of each
/// component must lie within `4 / sqrt(n)` of zero.
pub fn increment_mean_gate(sums: &[f64], count: u64, dt: f64) -> bool {
    if count == 0 {
        return true;
    }
    let bound = 4.0 / (count as f64).sqrt();
    sums.iter()
        .all(|s| (s / dt.sqrt() / count as f64).abs() <= bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_regenerate_identically() {
        let src = BrownianSource::new(7, 3, 1e-2, 0.0);
        let full = src.increments(5, 0, 40);
        let tail = src.increments(5, 17, 23);
        assert_eq!(&full[17 * 3..], &tail[..]);
    }

    #[test]
    fn antithetic_pairs_are_negated() {
        let src = BrownianSource::new(1, 2, 0.1, 0.0).with_antithetic(true);
        let a = src.increments(4, 3, 10);
        let b = src.increments(5, 3, 10);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn moments_are_gaussian() {
        let dt = 0.25;
        let src = BrownianSource::new(99, 3, dt, 0.0);
        let n = 20_000;
        let mut sum = [0.0; 3];
        let mut sq = 0.0;
        for p in 0..n {
            let w = src.increments(p, 0, 1);
            for i in 0..3 {
                sum[i] += w[i];
                sq += w[i] * w[i];
            }
        }
        assert!(increment_mean_gate(&sum, n, dt));
        let var = sq / (3.0 * n as f64);
        assert!((var - dt).abs() < 4.0 * dt * (2.0 / (3.0 * n as f64)).sqrt());
    }

    #[test]
    fn off_grid_time_is_rejected() {
        let src = BrownianSource::new(0, 2, 0.1, -1.0);
        assert_eq!(src.step_index(-0.5).unwrap(), 5);
        assert!(src.step_index(-0.55).is_err());
        assert!(src.step_index(-1.1).is_err());
    }
}
