use statrs::function::erf::erf;

use super::config::{BandwidthPolicy, ExperimentConfig, RPolicy, Sweep};
use super::emit::ExperimentRecord;
use super::power::run_power_sweep;
use crate::error::{Error, Result};
use crate::scenarios::ScenarioSpec;

/// Largest spectral mass allowed inside the support of the characteristic
/// functions.
pub const SPECTRAL_MASS_LIMIT: f64 = 0.01;

/// Mass that `N(0, 2/lambda^2)` puts on `[-interval, interval]`.
pub fn spectral_mass(lambda: f64, interval: f64) -> f64 {
    erf(interval * lambda / 2.0)
}

/// Bandwidth whose spectral measure puts exactly `mass` on `[-interval, interval]`.
pub fn bandwidth_for_mass(mass: f64, interval: f64) -> f64 {
    2.0 * statrs::function::erf::erf_inv(mass) / interval
}

/// Checks that a Gaussian kernel of width `lambda` rarely draws a frequency
/// where the two tent characteristic functions differ, and returns the mass.
pub fn check_spectral_mass(lambda: f64, delta1: f64, delta2: f64) -> Result<f64> {
    let interval = 1.0 / delta1.min(delta2);
    let mass = spectral_mass(lambda, interval);
    if mass < SPECTRAL_MASS_LIMIT {
        Ok(mass)
    } else {
        Err(Error::SpectralMassTooCentral {
            mass,
            interval,
            limit: SPECTRAL_MASS_LIMIT,
        })
    }
}

/// Power of fixed-feature tests on a pair of tent-characteristic-function
/// distributions, over growing sample sizes.
///
/// The scenario, sweep (`n` over `n_grid`) and bandwidth of `cfg` are
/// replaced. Random-feature estimators use `r` features under the fixed
/// policy; other feature policies in `cfg` are kept so the same pair can be
/// run with growing `R`.
pub fn run_inconsistency_demo(
    delta1: f64,
    delta2: f64,
    r: usize,
    n_grid: &[usize],
    bandwidth: f64,
    cfg: &ExperimentConfig,
) -> Result<ExperimentRecord> {
    if delta1 == delta2 {
        return Err(Error::invalid("the two deltas must differ"));
    }
    if r == 0 {
        return Err(Error::invalid("feature count must be positive"));
    }
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    let mass = check_spectral_mass(bandwidth, delta1, delta2)?;
    let mut run = cfg.clone();
    run.scenario = ScenarioSpec::PolyaCf {
        delta_x: delta1,
        delta_y: delta2,
    };
    run.sweep = Sweep {
        param: "n".into(),
        values: n_grid.iter().map(|&n| n as f64).collect(),
    };
    run.bandwidth = BandwidthPolicy::Fixed { lambda: bandwidth };
    if run.r_policy == RPolicy::Fixed {
        run.estimators = run.estimators.iter().map(|e| e.with_features(r)).collect();
    }
    let mut rec = run_power_sweep(&run, None)?;
    rec.config = serde_json::json!({
        "kind": "inconsistency_demo",
        "delta1": delta1,
        "delta2": delta2,
        "R": r,
        "bandwidth": bandwidth,
        "spectral_mass": mass,
        "experiment": rec.config,
    });
    Ok(rec)
}
