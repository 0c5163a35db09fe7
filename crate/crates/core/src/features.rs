//! Random Fourier feature maps.
//!
//! Each frequency `w_r` contributes the block `[cos(w_r . x), sin(w_r . x)]`;
//! blocks are interleaved in frequency order and the whole vector is scaled by
//! `sqrt(kappa0 / R)`, so every feature row has squared norm `kappa0` and the
//! inner product of two rows is the Monte-Carlo kernel estimate.

use crate::error::{Error, Result};
use crate::sample::{RngStream, SampleSet};

/// `R × d` matrix of spectral frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyDraw {
    omegas: Vec<f64>,
    r: usize,
    d: usize,
    source: Option<RngStream>,
}

impl FrequencyDraw {
    pub fn new(omegas: Vec<f64>, r: usize, d: usize, source: Option<RngStream>) -> Result<Self> {
        if r == 0 {
            return Err(Error::invalid("number of random features must be at least 1"));
        }
        if omegas.len() != r * d {
            return Err(Error::DimensionMismatch {
                expected: r * d,
                got: omegas.len(),
            });
        }
        if omegas.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("frequencies must be finite"));
        }
        Ok(Self { omegas, r, d, source })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.omegas.chunks_exact(self.d)
    }

    /// Stream the frequencies were drawn from, if any.
    pub fn source(&self) -> Option<RngStream> {
        self.source
    }
}

/// `n × 2R` matrix of scaled features, one row per observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    phi: Vec<f64>,
    n: usize,
    width: usize,
    scale: f64,
}

impl FeatureMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of columns, `2R`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.phi[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.phi.chunks_exact(self.width)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.phi
    }

    /// Column means.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.width];
        for row in self.rows() {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let inv = 1.0 / self.n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        acc
    }
}

#[inline]
fn write_features(x: &[f64], freqs: &FrequencyDraw, scale: f64, out: &mut [f64]) {
    for (w, block) in freqs.rows().zip(out.chunks_exact_mut(2)) {
        let t: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
        let (s, c) = t.sin_cos();
        block[0] = scale * c;
        block[1] = scale * s;
    }
}

pub fn feature_map(x: &[f64], freqs: &FrequencyDraw, kappa0: f64) -> Result<Vec<f64>> {
    if x.len() != freqs.d() {
        return Err(Error::DimensionMismatch {
            expected: freqs.d(),
            got: x.len(),
        });
    }
    let scale = (kappa0 / freqs.r() as f64).sqrt();
    let mut out = vec![0.0; 2 * freqs.r()];
    write_features(x, freqs, scale, &mut out);
    Ok(out)
}

pub fn feature_matrix(s: &SampleSet, freqs: &FrequencyDraw, kappa0: f64) -> Result<FeatureMatrix> {
    if s.d() != freqs.d() {
        return Err(Error::DimensionMismatch {
            expected: freqs.d(),
            got: s.d(),
        });
    }
    let width = 2 * freqs.r();
    let scale = (kappa0 / freqs.r() as f64).sqrt();
    let mut phi = vec![0.0; s.n() * width];
    for (x, out) in s.rows().zip(phi.chunks_exact_mut(width)) {
        write_features(x, freqs, scale, out);
    }
    Ok(FeatureMatrix {
        phi,
        n: s.n(),
        width,
        scale,
    })
}

/// Column means of [`feature_matrix`] without storing the `n × 2R` matrix.
pub fn mean_feature_row(s: &SampleSet, freqs: &FrequencyDraw, kappa0: f64) -> Result<Vec<f64>> {
    if s.d() != freqs.d() {
        return Err(Error::DimensionMismatch {
            expected: freqs.d(),
            got: s.d(),
        });
    }
    let mut acc = vec![0.0; 2 * freqs.r()];
    for x in s.rows() {
        for (w, block) in freqs.rows().zip(acc.chunks_exact_mut(2)) {
            let t: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
            let (sn, c) = t.sin_cos();
            block[0] += c;
            block[1] += sn;
        }
    }
    let f = (kappa0 / freqs.r() as f64).sqrt() / s.n() as f64;
    acc.iter_mut().for_each(|a| *a *= f);
    Ok(acc)
}
