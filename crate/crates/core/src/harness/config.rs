use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorId;
use crate::kernels::MEDIAN_HEURISTIC_CAP;
use crate::scenarios::ScenarioSpec;

/// The single grid axis of an experiment.
///
/// `param` is `n` (sets both sample sizes), `n1`, `n2`, `R` (feature count of
/// every random-feature estimator) or a numeric scenario parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandwidthPolicy {
    MedianHeuristic {
        #[serde(default = "default_cap")]
        cap: usize,
    },
    Fixed { lambda: f64 },
    /// `lambda = n^(-2/(4s+d))` on every coordinate.
    TheoryL2 { s: f64 },
    /// A user bandwidth, or the median heuristic when absent.
    TheoryMmd {
        #[serde(default)]
        lambda: Option<f64>,
    },
}

impl Default for BandwidthPolicy {
    fn default() -> Self {
        BandwidthPolicy::MedianHeuristic { cap: MEDIAN_HEURISTIC_CAP }
    }
}

fn default_cap() -> usize {
    MEDIAN_HEURISTIC_CAP
}

/// How many random features each random-feature estimator uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RPolicy {
    /// The count written in the estimator id.
    #[default]
    Fixed,
    /// `R = min(n1, n2)`.
    LinearInN,
    /// `R = ceil(n^(4d/(4s+d)))`.
    L2Rate { s: f64 },
}

fn default_b() -> usize {
    199
}

fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub estimators: Vec<EstimatorId>,
    pub sweep: Sweep,
    pub n1: usize,
    pub n2: usize,
    #[serde(rename = "B", alias = "b", default = "default_b")]
    pub b: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bandwidth: BandwidthPolicy,
    #[serde(default)]
    pub r_policy: RPolicy,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.b == 0 {
            return bad("B must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.estimators.is_empty() {
            return bad("at least one estimator is required".into());
        }
        if self.sweep.values.iter().any(|v| !v.is_finite()) {
            return bad("sweep values must be finite".into());
        }
        match self.bandwidth {
            BandwidthPolicy::Fixed { lambda } | BandwidthPolicy::TheoryMmd { lambda: Some(lambda) }
                if !(lambda.is_finite() && lambda > 0.0) =>
            {
                return bad(format!("bandwidth must be positive, got {lambda}"))
            }
            BandwidthPolicy::TheoryL2 { s } if !(s.is_finite() && s > 0.0) => {
                return bad(format!("smoothness must be positive, got {s}"))
            }
            BandwidthPolicy::MedianHeuristic { cap: 0..=1 } => return bad("median heuristic cap must be at least 2".into()),
            _ => {}
        }
        if let RPolicy::L2Rate { s } = self.r_policy {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("smoothness must be positive, got {s}"));
            }
        }
        // Every grid point must produce a valid scenario and sample sizes.
        for &v in &self.sweep.values {
            self.point(v)?;
        }
        Ok(())
    }

    /// Scenario, sample sizes and estimators at one grid value.
    pub fn point(&self, value: f64) -> Result<GridPoint> {
        let mut p = GridPoint {
            scenario: self.scenario.clone(),
            n1: self.n1,
            n2: self.n2,
            r_override: None,
        };
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!("`{}` must be a positive integer, got {v}", self.sweep.param)))
            }
        };
        match self.sweep.param.as_str() {
            "n" => {
                p.n1 = count(value)?;
                p.n2 = p.n1;
            }
            "n1" => p.n1 = count(value)?,
            "n2" => p.n2 = count(value)?,
            "R" | "r" => p.r_override = Some(count(value)?),
            name => p.scenario = self.scenario.with_param(name, value)?,
        }
        p.scenario.validate()?;
        if p.n1 < 2 || p.n2 < 2 {
            return Err(Error::InvalidConfig(format!(
                "sample sizes must be at least 2, got {} and {}",
                p.n1, p.n2
            )));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub scenario: ScenarioSpec,
    pub n1: usize,
    pub n2: usize,
    pub r_override: Option<usize>,
}
