//! Distributions whose characteristic function is the tent
//! `f(w) = max(0, 1 - delta |w|)`.
//!
//! The density is the Fejer-type kernel `q(x) = delta (1 - cos(x/delta)) / (pi x^2)`.
//! Sampling is by rejection from the envelope
//! `e(x) = min(1 / (2 pi delta), 2 delta / (pi x^2))`, whose total mass is
//! `4 / pi`; half of it sits on `[-2 delta, 2 delta]` and half in the tails.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sample::{RngStream, SampleSet};

const RETRY_CAP_PER_DRAW: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polya {
    delta: f64,
}

impl Polya {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidScenarioParams(format!("delta must be positive, got {delta}")));
        }
        let p = Self { delta };
        // The envelope bound holds analytically; the scan guards the
        // floating-point forms used below.
        let worst = (0..=4000)
            .map(|k| {
                let x = delta * (k as f64 * 0.01);
                p.density(x) / p.envelope(x)
            })
            .fold(0.0, f64::max);
        if worst > 1.0 + 1e-12 {
            return Err(Error::InvalidScenarioParams(format!(
                "envelope fails to dominate the density (ratio {worst})"
            )));
        }
        Ok(p)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn density(&self, x: f64) -> f64 {
        let y = x / (2.0 * self.delta);
        if y.abs() < 1e-8 {
            return 1.0 / (2.0 * PI * self.delta);
        }
        // 1 - cos(2y) = 2 sin^2(y), stable near zero.
        let s = y.sin();
        2.0 * self.delta * s * s / (PI * x * x)
    }

    pub fn envelope(&self, x: f64) -> f64 {
        let flat = 1.0 / (2.0 * PI * self.delta);
        if x.abs() <= 2.0 * self.delta {
            flat
        } else {
            (2.0 * self.delta / (PI * x * x)).min(flat)
        }
    }

    /// Characteristic function `max(0, 1 - delta |w|)`.
    pub fn cf(&self, w: f64) -> f64 {
        (1.0 - self.delta * w.abs()).max(0.0)
    }

    pub fn draw<R: Rng + ?Sized>(&self, g: &mut R) -> Result<f64> {
        let c = 2.0 * self.delta;
        for _ in 0..RETRY_CAP_PER_DRAW {
            let x = if g.random::<bool>() {
                c * (2.0 * g.random::<f64>() - 1.0)
            } else {
                // 1 - U lies in (0, 1], so the proposal is finite.
                let tail = c / (1.0 - g.random::<f64>());
                if g.random::<bool>() {
                    tail
                } else {
                    -tail
                }
            };
            if g.random::<f64>() * self.envelope(x) < self.density(x) {
                return Ok(x);
            }
        }
        Err(Error::RetryCapExceeded { cap: RETRY_CAP_PER_DRAW })
    }

    pub fn sample(&self, n: usize, rng: &RngStream) -> Result<SampleSet> {
        let mut g = rng.rng();
        let data = (0..n).map(|_| self.draw(&mut g)).collect::<Result<Vec<_>>>()?;
        SampleSet::from_column(data)
    }
}

pub fn sample_polya(delta: f64, n: usize, rng: &RngStream) -> Result<SampleSet> {
    Polya::new(delta)?.sample(n, rng)
}
