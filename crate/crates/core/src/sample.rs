//! Shared domain types: observation matrices, pooled samples, seeded RNG
//! streams and the significance level.
//!
//! Observations are stored row-major, one observation per row. All numeric
//! work is done in `f64`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// An `n × d` matrix of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleSet {
    /// Wraps a row-major buffer. Fails on a shape mismatch or a non-finite
    /// entry.
    pub fn new(data: Vec<f64>, n: usize, d: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::TooFewSamples { min: 1, got: 0 });
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if data.len() != n * d {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                row: pos / d,
                col: pos % d,
            });
        }
        Ok(Self { data, n, d })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(n * d);
        for row in rows {
            let row = row.as_ref();
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(data, n, d)
    }

    /// Column vector of scalar observations (`d = 1`).
    pub fn from_column(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, n, 1)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// New sample made of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> SampleSet {
        let mut data = Vec::with_capacity(indices.len() * self.d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        SampleSet {
            data,
            n: indices.len(),
            d: self.d,
        }
    }
}

/// Pooled sample `Z = (X, Y)`; the first `n1` rows come from `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    z: SampleSet,
    n1: usize,
    n2: usize,
}

impl PooledSample {
    pub fn z(&self) -> &SampleSet {
        &self.z
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn total(&self) -> usize {
        self.n1 + self.n2
    }

    pub fn d(&self) -> usize {
        self.z.d()
    }

    /// Splits back into `(X, Y)` after relabeling rows by `order`; the first
    /// `n1` entries of `order` become `X`.
    pub fn split_by(&self, order: &[usize]) -> (SampleSet, SampleSet) {
        debug_assert_eq!(order.len(), self.total());
        (
            self.z.select(&order[..self.n1]),
            self.z.select(&order[self.n1..]),
        )
    }

    pub fn split(&self) -> (SampleSet, SampleSet) {
        let order: Vec<usize> = (0..self.total()).collect();
        self.split_by(&order)
    }
}

/// Checks that two samples can be compared and pools them, `X` rows first.
pub fn validate_pair(x: &SampleSet, y: &SampleSet) -> Result<PooledSample> {
    if x.d() != y.d() {
        return Err(Error::DimensionMismatch {
            expected: x.d(),
            got: y.d(),
        });
    }
    for s in [x, y] {
        if s.n() < 2 {
            return Err(Error::TooFewSamples { min: 2, got: s.n() });
        }
    }
    let mut data = Vec::with_capacity((x.n() + y.n()) * x.d());
    data.extend_from_slice(x.as_slice());
    data.extend_from_slice(y.as_slice());
    Ok(PooledSample {
        z: SampleSet::new(data, x.n() + y.n(), x.d())?,
        n1: x.n(),
        n2: y.n(),
    })
}

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// The generator is ChaCha8 keyed by the seed, with the ChaCha stream word set
/// to `stream_id`, so distinct ids give non-overlapping keystreams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn derive(seed: u64, label: impl AsRef<[u8]>) -> Self {
        Self {
            seed,
            stream_id: label_hash(label.as_ref()),
        }
    }

    /// Stream for a sub-task, keyed on this stream's id and `label`.
    pub fn child(&self, label: impl AsRef<[u8]>) -> Self {
        let mut bytes = self.stream_id.to_le_bytes().to_vec();
        bytes.push(b'/');
        bytes.extend_from_slice(label.as_ref());
        Self::derive(self.seed, bytes)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

pub fn derive_stream(seed: u64, label: impl AsRef<[u8]>) -> RngStream {
    RngStream::derive(seed, label)
}

fn label_hash(label: &[u8]) -> u64 {
    let digest = Sha256::digest(label);
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(word)
}

/// Test level `alpha`, strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SignificanceLevel(f64);

impl SignificanceLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for SignificanceLevel {
    fn default() -> Self {
        Self(0.05)
    }
}

impl TryFrom<f64> for SignificanceLevel {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SignificanceLevel> for f64 {
    fn from(value: SignificanceLevel) -> f64 {
        value.0
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.carry += (self.sum - t) + value;
        } else {
            self.carry += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}
