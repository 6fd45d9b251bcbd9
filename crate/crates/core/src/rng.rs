//! Seedable counter-based random streams.
//!
//! Every consumer of randomness gets its own ChaCha20 stream derived from the
//! experiment seed and a stream id, so data subsampling, gradient noise and
//! finite-difference noise never share state. Two methods run with the same
//! seed therefore see the same mini-batches even when one of them draws more
//! noise than the other.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Named stream ids used by the training loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    Sampling,
    GradientNoise,
    FdNoise,
    Init,
    Analysis,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Sampling => 0,
            Stream::GradientNoise => 1,
            Stream::FdNoise => 2,
            Stream::Init => 3,
            Stream::Analysis => 4,
        }
    }
}

/// Base id for per-example keyed streams, above every named stream.
const KEYED_BASE: u64 = 1 << 32;

/// A random stream with a Box–Muller Gaussian sampler.
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha20Rng,
    spare: Option<f64>,
}

impl StreamRng {
    pub fn new(seed: u64, stream: Stream) -> Self {
        Self::with_stream_id(seed, stream.id())
    }

    /// Stream keyed by an arbitrary index, e.g. one per dataset example.
    pub fn keyed(seed: u64, key: u64) -> Self {
        Self::with_stream_id(seed, KEYED_BASE.wrapping_add(key))
    }

    fn with_stream_id(seed: u64, id: u64) -> Self {
        let mut inner = ChaCha20Rng::seed_from_u64(seed);
        inner.set_stream(id);
        Self { inner, spare: None }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Standard normal draw.
    pub fn gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 - U lies in (0, 1], keeping ln finite.
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Adds `N(0, sigma²)` noise to every entry in place. `sigma = 0` draws nothing.
    pub fn add_gaussian(&mut self, out: &mut [f64], sigma: f64) {
        if sigma == 0.0 {
            return;
        }
        for v in out.iter_mut() {
            *v += sigma * self.gaussian();
        }
    }

    pub fn gaussian_vec(&mut self, d: usize, sigma: f64) -> Vec<f64> {
        (0..d).map(|_| sigma * self.gaussian()).collect()
    }

    /// Uniform integer in `0..n`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.gen_range(0..n)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
}
