//! Seeded, counter-based random streams.
//!
//! Every run owns one master seed. Independent substreams are obtained with
//! [`RngStream::substream`], which keys a ChaCha8 generator by
//! `(seed, stream id)`. Draws on one substream never shift another, so
//! changing a batch size does not perturb the sample stream of a different
//! role.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{DataPoint, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fixed substream ids. Part of the reproducibility contract: changing any of
/// these changes every output.
pub mod streams {
    /// `D1` samples (gate and `G`).
    pub const GATE: u64 = 1;
    /// `D2` samples (inner-gradient estimate).
    pub const INNER_GRAD: u64 = 2;
    /// `D3` samples (tracking Jacobian estimate).
    pub const JACOBIAN: u64 = 3;
    /// Mini-batches for restart/refresh of the SPIDER tracker.
    pub const BATCH: u64 = 4;
    /// Output index `R`.
    pub const OUTPUT: u64 = 5;
    /// Pilot batches (tracker initialization, constant estimation).
    pub const PILOT: u64 = 6;
    /// Synthetic data generation.
    pub const DATA: u64 = 7;
    /// Synthetic test split.
    pub const TEST_DATA: u64 = 8;
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::keyed(seed, 0)
    }

    fn keyed(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    /// Fresh stream for role `id` under the same master seed. Independent of
    /// how much `self` has been consumed.
    pub fn substream(&self, id: u64) -> Self {
        Self::keyed(self.seed, id)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform<T: Scalar>(&mut self, lo: T, hi: T) -> T {
        let u: f64 = self.inner.random();
        lo + (hi - lo) * T::lit(u)
    }

    pub fn standard_normal<T: Scalar>(&mut self) -> T {
        let z: f64 = StandardNormal.sample(&mut self.inner);
        T::lit(z)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        let u: f64 = self.inner.random();
        u < p
    }

    /// One draw from the empirical distribution.
    pub fn sample<'a, T: Scalar>(&mut self, ds: &'a Dataset<T>) -> &'a DataPoint<T> {
        ds.get(self.index(ds.len()))
    }
}

/// `count` draws with replacement, uniform over `ds`.
pub fn sample_iid<T: Scalar>(
    ds: &Dataset<T>,
    rng: &mut RngStream,
    count: usize,
) -> Result<Vec<DataPoint<T>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot sample an empty dataset".into()));
    }
    Ok((0..count).map(|_| rng.sample(ds).clone()).collect())
}

/// Index draws, for callers that do not need owned copies.
pub fn sample_indices(n: usize, rng: &mut RngStream, count: usize) -> Vec<usize> {
    (0..count).map(|_| rng.index(n)).collect()
}
