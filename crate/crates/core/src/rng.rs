//! Reproducible random streams.
//!
//! A stream is addressed by `(seed, stream_id)`. Two streams with the same
//! address replay the same draws; distinct `stream_id`s select disjoint
//! ChaCha keystreams, so replications can run on any worker in any order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Position in the keystream, in 32-bit words.
    pub fn counter(&self) -> u128 {
        self.inner.get_word_pos()
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform sign in `{-1, +1}`.
    #[inline]
    pub fn sign(&mut self) -> i8 {
        if self.inner.random::<bool>() {
            1
        } else {
            -1
        }
    }

    /// Fills `out` with a point uniform in the unit ball of dimension
    /// `out.len()`: Gaussian direction scaled by `U^{1/d}`. Uses `d + 1` draws.
    pub fn fill_unit_ball(&mut self, out: &mut [f64]) {
        let d = out.len();
        if d == 1 {
            // direction is a sign; keeps the d + 1 draw count
            let s = if self.normal() < 0.0 { -1.0 } else { 1.0 };
            out[0] = s * self.uniform();
            return;
        }
        let mut norm2 = 0.0;
        loop {
            for v in out.iter_mut() {
                *v = self.normal();
                norm2 += *v * *v;
            }
            if norm2 > 0.0 {
                break;
            }
        }
        let radius = self.uniform().powf(1.0 / d as f64);
        let scale = radius / norm2.sqrt();
        for v in out.iter_mut() {
            *v *= scale;
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_address_replays() {
        let mut a = RngStream::new(7, 3);
        let mut b = RngStream::new(7, 3);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
        assert_eq!(a.counter(), b.counter());
    }

    #[test]
    fn distinct_streams_differ() {
        let mut a = RngStream::new(7, 0);
        let mut b = RngStream::new(7, 1);
        let xs: Vec<u64> = (0..8).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.next_u64()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let n = 200_000;
        let mut a = RngStream::new(11, 0);
        let mut b = RngStream::new(11, 1);
        let mut sxy = 0.0;
        for _ in 0..n {
            sxy += (a.uniform() - 0.5) * (b.uniform() - 0.5);
        }
        // cov of independent U(0,1) is 0 with sd 1/12/sqrt(n)
        let sd = 1.0 / 12.0 / (n as f64).sqrt();
        assert!((sxy / n as f64).abs() < 4.0 * sd);
    }

    #[test]
    fn unit_ball_points_inside() {
        let mut rng = RngStream::new(1, 0);
        for d in 1..8 {
            let mut p = vec![0.0; d];
            for _ in 0..1000 {
                rng.fill_unit_ball(&mut p);
                assert!(p.iter().map(|v| v * v).sum::<f64>() <= 1.0);
            }
        }
    }
}
