//! Uniform densities on `[0,1]^d` with smooth bump perturbations.

use rand::Rng;

use crate::error::{Error, Result};
use crate::sample::{RngStream, SampleSet};

/// Target number of grid points for the construction-time density scan.
pub const DENSITY_GRID_POINTS: usize = 10_000;

const RETRY_CAP_PER_DRAW: usize = 1_000_000;

/// Shape function with a positive bump on `(-1, -1/2)` and a negative bump on
/// `(-1/2, 0)`.
pub fn bump_shape(t: f64) -> f64 {
    let bump = |s: f64| (-1.0 / (1.0 - s * s)).exp();
    if t > -1.0 && t < -0.5 {
        bump(4.0 * t + 3.0)
    } else if t > -0.5 && t < 0.0 {
        -bump(4.0 * t + 1.0)
    } else {
        0.0
    }
}

/// Perturbation of size `p` on `[0,1]^d` with one sign per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    d: usize,
    p: usize,
    theta: Vec<f64>,
}

impl Perturbation {
    /// `theta` lists one sign per cell `u in {1..p}^d`, first coordinate
    /// varying fastest; `None` means all `+1`.
    pub fn new(d: usize, p: usize, theta: Option<Vec<f64>>) -> Result<Self> {
        if d == 0 || p == 0 {
            return Err(Error::InvalidScenarioParams("perturbation needs d >= 1 and p >= 1".into()));
        }
        let cells = p
            .checked_pow(d as u32)
            .filter(|&c| c <= 1 << 20)
            .ok_or_else(|| Error::InvalidScenarioParams(format!("p^d too large for p = {p}, d = {d}")))?;
        let theta = theta.unwrap_or_else(|| vec![1.0; cells]);
        if theta.len() != cells {
            return Err(Error::InvalidScenarioParams(format!(
                "expected {cells} signs, got {}",
                theta.len()
            )));
        }
        if theta.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidScenarioParams("signs must be +1 or -1".into()));
        }
        Ok(Self { d, p, theta })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `E(t) = p^-1 e^d sum_u theta_u prod_i G(p t_i - u_i)`.
    pub fn eval(&self, t: &[f64]) -> f64 {
        debug_assert_eq!(t.len(), self.d);
        let pf = self.p as f64;
        let mut cell = 0;
        let mut stride = 1;
        let mut prod = 1.0;
        for &ti in t {
            // G(p t - u) is nonzero only for u = floor(p t) + 1.
            let u = (pf * ti).floor() + 1.0;
            if u < 1.0 || u > pf {
                return 0.0;
            }
            prod *= bump_shape(pf * ti - u);
            cell += (u as usize - 1) * stride;
            stride *= self.p;
        }
        self.theta[cell] * prod * (self.d as f64).exp() / pf
    }
}

/// Density `1 + a E(t)` on `[0,1]^d`, checked for nonnegativity on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedUniform {
    pert: Perturbation,
    amplitude: f64,
    envelope: f64,
}

impl PerturbedUniform {
    pub fn new(d: usize, p: usize, amplitude: f64, theta: Option<Vec<f64>>) -> Result<Self> {
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::InvalidScenarioParams(format!("bad amplitude {amplitude}")));
        }
        let pert = Perturbation::new(d, p, theta)?;
        let per_axis = ((DENSITY_GRID_POINTS as f64).powf(1.0 / d as f64).round() as usize).max(2);
        let mut idx = vec![0usize; d];
        let mut t = vec![0.0; d];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        loop {
            for (ti, &k) in t.iter_mut().zip(&idx) {
                *ti = (k as f64 + 0.5) / per_axis as f64;
            }
            let f = 1.0 + amplitude * pert.eval(&t);
            lo = lo.min(f);
            hi = hi.max(f);
            let mut axis = 0;
            while axis < d {
                idx[axis] += 1;
                if idx[axis] < per_axis {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
            if axis == d {
                break;
            }
        }
        if lo < 0.0 {
            return Err(Error::NegativeDensity { min_value: lo });
        }
        Ok(Self {
            pert,
            amplitude,
            envelope: hi * 1.01,
        })
    }

    pub fn d(&self) -> usize {
        self.pert.d()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Rejection-sampling envelope height (grid maximum times 1.01).
    pub fn envelope(&self) -> f64 {
        self.envelope
    }

    pub fn density(&self, t: &[f64]) -> f64 {
        if t.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return 0.0;
        }
        1.0 + self.amplitude * self.pert.eval(t)
    }

    pub fn sample(&self, n: usize, rng: &RngStream) -> Result<SampleSet> {
        let d = self.d();
        let mut g = rng.rng();
        let mut data = Vec::with_capacity(n * d);
        let mut t = vec![0.0; d];
        for _ in 0..n {
            let mut tries = 0;
            loop {
                if tries == RETRY_CAP_PER_DRAW {
                    return Err(Error::RetryCapExceeded { cap: RETRY_CAP_PER_DRAW });
                }
                tries += 1;
                for v in t.iter_mut() {
                    *v = g.random::<f64>();
                }
                if self.amplitude == 0.0 || g.random::<f64>() * self.envelope < self.density(&t) {
                    break;
                }
            }
            data.extend_from_slice(&t);
        }
        SampleSet::new(data, n, d)
    }
}

pub fn perturbation_density(t: &[f64], d: usize, p: usize, a: f64, theta: Option<Vec<f64>>) -> Result<f64> {
    if t.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: t.len() });
    }
    Ok(PerturbedUniform::new(d, p, a, theta)?.density(t))
}

pub fn sample_perturbed_uniform(
    d: usize,
    p: usize,
    a: f64,
    theta: Option<Vec<f64>>,
    n: usize,
    rng: &RngStream,
) -> Result<SampleSet> {
    PerturbedUniform::new(d, p, a, theta)?.sample(n, rng)
}
