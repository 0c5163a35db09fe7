//! Product Gaussian kernel, its spectral sampler and the median heuristic.
//!
//! The kernel is normalised per coordinate,
//!
//! ```text
//! k(x, y) = prod_i  1 / (sqrt(pi) * l_i) * exp(-(x_i - y_i)^2 / l_i^2)
//! ```
//!
//! so `k(x, x) = kappa0 = prod_i 1 / (sqrt(pi) * l_i)`. Divided by `kappa0` it
//! is the characteristic function of `omega ~ N(0, diag(2 / l_i^2))`, which is
//! what [`sample_frequencies`] draws from.

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::features::FrequencyDraw;
use crate::sample::{PooledSample, RngStream, SampleSet};

/// Default row cap for the median heuristic.
pub const MEDIAN_HEURISTIC_CAP: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    lambda: Vec<f64>,
    inv_lambda_sq: Vec<f64>,
    kappa0: f64,
}

impl KernelSpec {
    pub fn gaussian(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::invalid("bandwidth vector is empty"));
        }
        if let Some(bad) = lambda.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::invalid(format!("bandwidth must be positive, got {bad}")));
        }
        let kappa0 = lambda
            .iter()
            .map(|l| 1.0 / (std::f64::consts::PI.sqrt() * l))
            .product();
        let inv_lambda_sq = lambda.iter().map(|l| 1.0 / (l * l)).collect();
        Ok(Self {
            lambda,
            inv_lambda_sq,
            kappa0,
        })
    }

    /// Same bandwidth in every coordinate.
    pub fn isotropic(d: usize, lambda: f64) -> Result<Self> {
        Self::gaussian(vec![lambda; d])
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn d(&self) -> usize {
        self.lambda.len()
    }

    /// Kernel value at zero separation.
    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        for v in [x, y] {
            if v.len() != self.d() {
                return Err(Error::DimensionMismatch {
                    expected: self.d(),
                    got: v.len(),
                });
            }
        }
        Ok(self.eval_unchecked(x, y))
    }

    /// Kernel value without length checks; callers guarantee `len == d`.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((a, b), w) in x.iter().zip(y).zip(&self.inv_lambda_sq) {
            let u = a - b;
            q += u * u * w;
        }
        self.kappa0 * (-q).exp()
    }

    /// Kernel value as a function of the separation `u = x - y`.
    pub fn eval_separation(&self, u: &[f64]) -> f64 {
        let q: f64 = u
            .iter()
            .zip(&self.inv_lambda_sq)
            .map(|(v, w)| v * v * w)
            .sum();
        self.kappa0 * (-q).exp()
    }

    /// Standard deviation of each spectral coordinate, `sqrt(2) / l_i`.
    pub fn spectral_sd(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| std::f64::consts::SQRT_2 / l).collect()
    }
}

pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Median of pairwise Euclidean distances over the rows of `s` (lower median
/// for an even count; zero distances included). When `s` has more than `cap`
/// rows, a uniform subsample of `cap` rows is used.
pub fn median_pairwise_distance(s: &SampleSet, cap: usize, rng: &RngStream) -> Result<f64> {
    if cap < 2 {
        return Err(Error::invalid("median heuristic cap must be at least 2"));
    }
    if s.n() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: s.n() });
    }
    let rows: Vec<usize> = if s.n() > cap {
        let mut picked = index::sample(&mut rng.rng(), s.n(), cap).into_vec();
        picked.sort_unstable();
        picked
    } else {
        (0..s.n()).collect()
    };
    let m = rows.len();
    let mut dist = Vec::with_capacity(m * (m - 1) / 2);
    for (a, &i) in rows.iter().enumerate() {
        let xi = s.row(i);
        for &j in &rows[a + 1..] {
            let sq: f64 = xi.iter().zip(s.row(j)).map(|(p, q)| (p - q) * (p - q)).sum();
            dist.push(sq.sqrt());
        }
    }
    let k = (dist.len() - 1) / 2;
    let (_, median, _) = dist.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*median)
}

/// Isotropic bandwidth set to the median pairwise distance of the pooled
/// sample.
pub fn median_heuristic(z: &PooledSample, cap: usize, rng: &RngStream) -> Result<KernelSpec> {
    let m = median_pairwise_distance(z.z(), cap, rng)?;
    if m <= 0.0 {
        return Err(Error::DegeneratePooledSample);
    }
    KernelSpec::isotropic(z.d(), m)
}

/// Draws `r` i.i.d. frequencies from the normalised spectral measure of
/// `spec`.
pub fn sample_frequencies(spec: &KernelSpec, r: usize, rng: &RngStream) -> Result<FrequencyDraw> {
    if r == 0 {
        return Err(Error::invalid("number of random features must be at least 1"));
    }
    let sd = spec.spectral_sd();
    let mut g = rng.rng();
    let mut omegas = Vec::with_capacity(r * sd.len());
    for _ in 0..r {
        for s in &sd {
            let z: f64 = StandardNormal.sample(&mut g);
            omegas.push(s * z);
        }
    }
    FrequencyDraw::new(omegas, r, spec.d(), Some(*rng))
}
