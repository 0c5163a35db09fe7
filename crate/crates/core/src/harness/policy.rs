use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rules tying the feature count and bandwidth to the sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TheoryPolicy {
    /// Sobolev-type `L2` rate for smoothness `s`.
    L2Rate { s: f64 },
    /// `R = n` with a bandwidth supplied by the user (if any).
    Mmd {
        #[serde(default)]
        lambda: Option<f64>,
    },
    /// A fixed feature count, independent of `n`.
    GaussianClass { r: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyChoice {
    #[serde(rename = "R")]
    pub r: usize,
    /// Feature count before rounding up.
    pub r_raw: f64,
    /// Per-coordinate bandwidth, when the policy prescribes one.
    pub lambda: Option<f64>,
}

/// Smallest integer not below `x`, forgiving float noise just above an integer.
pub(crate) fn ceil_count(x: f64) -> usize {
    ((x - 1e-12 * x.abs().max(1.0)).ceil() as usize).max(1)
}

/// `n^(4d/(4s+d))` and `n^(-2/(4s+d))`.
pub fn l2_rate(n: usize, d: usize, s: f64) -> (f64, f64) {
    let nf = n as f64;
    let denom = 4.0 * s + d as f64;
    (nf.powf(4.0 * d as f64 / denom), nf.powf(-2.0 / denom))
}

pub fn theory_parameter_policy(policy: TheoryPolicy, n: usize, d: usize) -> Result<PolicyChoice> {
    if n < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n });
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    match policy {
        TheoryPolicy::L2Rate { s } => {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::invalid(format!("smoothness must be positive, got {s}")));
            }
            let (r_raw, lambda) = l2_rate(n, d, s);
            Ok(PolicyChoice {
                r: ceil_count(r_raw),
                r_raw,
                lambda: Some(lambda),
            })
        }
        TheoryPolicy::Mmd { lambda } => {
            if let Some(l) = lambda {
                if !(l.is_finite() && l > 0.0) {
                    return Err(Error::invalid(format!("bandwidth must be positive, got {l}")));
                }
            }
            Ok(PolicyChoice {
                r: n,
                r_raw: n as f64,
                lambda,
            })
        }
        TheoryPolicy::GaussianClass { r } => {
            if r == 0 {
                return Err(Error::invalid("feature count must be positive"));
            }
            Ok(PolicyChoice {
                r,
                r_raw: r as f64,
                lambda: None,
            })
        }
    }
}
