//! Two-sample problems used by the experiments.

pub mod mnist;
pub mod perturbed;
pub mod polya;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{RngStream, SampleSet};

pub use mnist::{load_mnist, sample_mnist_mix, MnistStore};
pub use perturbed::{perturbation_density, sample_perturbed_uniform, PerturbedUniform};
pub use polya::{sample_polya, Polya};

/// Number of leading coordinates shifted in the high-dimensional mean
/// scenario, and the size of the shift.
pub const HIGH_DIM_SHIFTED: usize = 20;
pub const HIGH_DIM_SHIFT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// `N(0, 1)` vs `N(mu, 1)`.
    Gauss1dMean { mu: f64 },
    /// `N(0, 1)` vs `N(0, sigma^2)`.
    Gauss1dVar { sigma: f64 },
    /// `N(0, I_d)` vs a mean whose first 20 coordinates are 0.1.
    GaussHighDimMean { d: usize },
    /// `N(0, I_d)` vs `N(0, sigma^2 I_d)`.
    GaussHighDimVar { d: usize, sigma: f64 },
    /// Uniform on `[0,1]^d` vs the perturbed density `1 + amplitude * E`.
    PerturbedUniform {
        d: usize,
        p: usize,
        amplitude: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<Vec<f64>>,
    },
    /// Even-digit images vs the `gamma`-mixture with odd digits.
    MnistMix {
        gamma: f64,
        #[serde(default)]
        downsampled: bool,
    },
    /// Two tent-characteristic-function distributions.
    PolyaCf { delta_x: f64, delta_y: f64 },
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioSpec::Gauss1dMean { .. } => "gauss1d_mean",
            ScenarioSpec::Gauss1dVar { .. } => "gauss1d_var",
            ScenarioSpec::GaussHighDimMean { .. } => "gauss_high_dim_mean",
            ScenarioSpec::GaussHighDimVar { .. } => "gauss_high_dim_var",
            ScenarioSpec::PerturbedUniform { .. } => "perturbed_uniform",
            ScenarioSpec::MnistMix { .. } => "mnist_mix",
            ScenarioSpec::PolyaCf { .. } => "polya_cf",
        }
    }

    /// Returns a copy with the named numeric parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidScenarioParams(format!("{name} must be a positive integer, got {v}")))
            }
        };
        let mut s = self.clone();
        match (&mut s, name) {
            (ScenarioSpec::Gauss1dMean { mu }, "mu") => *mu = value,
            (ScenarioSpec::Gauss1dVar { sigma }, "sigma") => *sigma = value,
            (ScenarioSpec::GaussHighDimMean { d }, "d") => *d = count(value)?,
            (ScenarioSpec::GaussHighDimVar { d, .. }, "d") => *d = count(value)?,
            (ScenarioSpec::GaussHighDimVar { sigma, .. }, "sigma") => *sigma = value,
            (ScenarioSpec::PerturbedUniform { amplitude, .. }, "amplitude") => *amplitude = value,
            (ScenarioSpec::MnistMix { gamma, .. }, "gamma") => *gamma = value,
            (ScenarioSpec::PolyaCf { delta_x, .. }, "delta_x") => *delta_x = value,
            (ScenarioSpec::PolyaCf { delta_y, .. }, "delta_y") => *delta_y = value,
            _ => {
                return Err(Error::InvalidScenarioParams(format!(
                    "scenario {} has no parameter `{name}`",
                    self.name()
                )))
            }
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenarioParams(msg));
        match self {
            ScenarioSpec::Gauss1dMean { mu } if !mu.is_finite() => bad(format!("mu must be finite, got {mu}")),
            ScenarioSpec::Gauss1dVar { sigma } | ScenarioSpec::GaussHighDimVar { sigma, .. }
                if !(sigma.is_finite() && *sigma > 0.0) =>
            {
                bad(format!("sigma must be positive, got {sigma}"))
            }
            ScenarioSpec::GaussHighDimMean { d: 0 } | ScenarioSpec::GaussHighDimVar { d: 0, .. } => {
                bad("d must be at least 1".into())
            }
            ScenarioSpec::PerturbedUniform { d, p, amplitude, theta } => {
                PerturbedUniform::new(*d, *p, *amplitude, theta.clone()).map(|_| ())
            }
            ScenarioSpec::MnistMix { gamma, .. } if !(0.0..=1.0).contains(gamma) => {
                bad(format!("gamma must lie in [0, 1], got {gamma}"))
            }
            ScenarioSpec::PolyaCf { delta_x, delta_y } => {
                Polya::new(*delta_x)?;
                Polya::new(*delta_y)?;
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

enum Prepared {
    Gauss1dMean(f64),
    Gauss1dVar(f64),
    HighDimMean(usize),
    HighDimVar(usize, f64),
    Perturbed(PerturbedUniform),
    Mnist(Arc<MnistStore>, f64, bool),
    Polya(Polya, Polya),
}

/// A validated scenario ready to draw sample pairs.
pub struct Scenario {
    spec: ScenarioSpec,
    prepared: Prepared,
}

impl Scenario {
    /// `mnist` is required for the MNIST scenario and ignored otherwise.
    pub fn new(spec: ScenarioSpec, mnist: Option<Arc<MnistStore>>) -> Result<Self> {
        spec.validate()?;
        let prepared = match &spec {
            ScenarioSpec::Gauss1dMean { mu } => Prepared::Gauss1dMean(*mu),
            ScenarioSpec::Gauss1dVar { sigma } => Prepared::Gauss1dVar(*sigma),
            ScenarioSpec::GaussHighDimMean { d } => Prepared::HighDimMean(*d),
            ScenarioSpec::GaussHighDimVar { d, sigma } => Prepared::HighDimVar(*d, *sigma),
            ScenarioSpec::PerturbedUniform { d, p, amplitude, theta } => {
                Prepared::Perturbed(PerturbedUniform::new(*d, *p, *amplitude, theta.clone())?)
            }
            ScenarioSpec::MnistMix { gamma, downsampled } => {
                let store = mnist.ok_or_else(|| {
                    Error::InvalidScenarioParams("the MNIST scenario needs image and label files".into())
                })?;
                store.dim(*downsampled)?;
                Prepared::Mnist(store, *gamma, *downsampled)
            }
            ScenarioSpec::PolyaCf { delta_x, delta_y } => Prepared::Polya(Polya::new(*delta_x)?, Polya::new(*delta_y)?),
        };
        Ok(Self { spec, prepared })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    /// Dimension of each observation.
    pub fn dim(&self) -> usize {
        match &self.prepared {
            Prepared::Gauss1dMean(_) | Prepared::Gauss1dVar(_) | Prepared::Polya(..) => 1,
            Prepared::HighDimMean(d) | Prepared::HighDimVar(d, _) => *d,
            Prepared::Perturbed(f) => f.d(),
            Prepared::Mnist(store, _, ds) => store.dim(*ds).expect("checked at construction"),
        }
    }

    /// Independent samples of sizes `n1` (from `P_X`) and `n2` (from `P_Y`).
    pub fn sample(&self, n1: usize, n2: usize, rng: &RngStream) -> Result<(SampleSet, SampleSet)> {
        let (rx, ry) = (rng.child("x"), rng.child("y"));
        match &self.prepared {
            Prepared::Gauss1dMean(mu) => Ok((normal(n1, 1, |_| 0.0, 1.0, &rx)?, normal(n2, 1, |_| *mu, 1.0, &ry)?)),
            Prepared::Gauss1dVar(sigma) => Ok((normal(n1, 1, |_| 0.0, 1.0, &rx)?, normal(n2, 1, |_| 0.0, *sigma, &ry)?)),
            Prepared::HighDimMean(d) => {
                let shift = |j: usize| if j < HIGH_DIM_SHIFTED { HIGH_DIM_SHIFT } else { 0.0 };
                Ok((normal(n1, *d, |_| 0.0, 1.0, &rx)?, normal(n2, *d, shift, 1.0, &ry)?))
            }
            Prepared::HighDimVar(d, sigma) => Ok((
                normal(n1, *d, |_| 0.0, 1.0, &rx)?,
                normal(n2, *d, |_| 0.0, *sigma, &ry)?,
            )),
            Prepared::Perturbed(f) => {
                let null = PerturbedUniform::new(f.d(), 1, 0.0, None)?;
                Ok((null.sample(n1, &rx)?, f.sample(n2, &ry)?))
            }
            Prepared::Mnist(store, gamma, ds) => sample_mnist_mix(store, *gamma, n1, n2, rng, *ds),
            Prepared::Polya(px, py) => Ok((px.sample(n1, &rx)?, py.sample(n2, &ry)?)),
        }
    }
}

fn normal(n: usize, d: usize, mean: impl Fn(usize) -> f64, sd: f64, rng: &RngStream) -> Result<SampleSet> {
    let mut g = rng.rng();
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        for j in 0..d {
            data.push(mean(j) + sd * g.sample::<f64, _>(StandardNormal));
        }
    }
    SampleSet::new(data, n, d)
}

/// Draws one sample pair from a scenario that needs no external data.
pub fn sample_scenario(spec: &ScenarioSpec, n1: usize, n2: usize, rng: &RngStream) -> Result<(SampleSet, SampleSet)> {
    Scenario::new(spec.clone(), None)?.sample(n1, n2, rng)
}
