use std::time::Instant;

use super::emit::{ExperimentRecord, ResultRow};
use crate::error::{Error, Result};
use crate::estimators::{evaluate, EstimatorId};
use crate::kernels::{median_heuristic, MEDIAN_HEURISTIC_CAP};
use crate::sample::{validate_pair, RngStream};
use crate::scenarios::{sample_scenario, ScenarioSpec};

/// Mean shift of the benchmark data.
pub const BENCH_SHIFT: f64 = 0.15;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Wall-clock time of a single statistic evaluation at each pooled size.
///
/// Each size uses one pooled sample of `N` one-dimensional points split
/// evenly, with the bandwidth fixed beforehand. After one discarded warm-up
/// run, `reps` evaluations are timed and their median goes in
/// `mean_time_s`. Random-feature timings include the frequency draw and
/// the featurization.
pub fn run_timing_bench(sizes: &[usize], estimators: &[EstimatorId], reps: usize, seed: u64) -> Result<ExperimentRecord> {
    if reps == 0 {
        return Err(Error::invalid("reps must be at least 1"));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("sizes must be strictly ascending"));
    }
    let scenario = ScenarioSpec::Gauss1dMean { mu: BENCH_SHIFT };
    let mut rows = Vec::new();
    for &size in sizes {
        let n1 = size / 2;
        let n2 = size - n1;
        let rng = RngStream::derive(seed, format!("bench/{size}"));
        let (x, y) = sample_scenario(&scenario, n1, n2, &rng.child("data"))?;
        let spec = median_heuristic(&validate_pair(&x, &y)?, MEDIAN_HEURISTIC_CAP, &rng.child("bandwidth"))?;
        for &est in estimators {
            let est_rng = rng.child(format!("est/{est}"));
            evaluate(est, &x, &y, &spec, &est_rng.child("warmup"))?;
            let mut times = Vec::with_capacity(reps);
            let mut stat_sum = 0.0;
            for i in 0..reps {
                let r = est_rng.child(format!("rep/{i}"));
                let t0 = Instant::now();
                let stat = evaluate(est, &x, &y, &spec, &r)?;
                times.push(t0.elapsed().as_secs_f64());
                stat_sum += stat;
            }
            rows.push(ResultRow {
                scenario: scenario.name().to_string(),
                estimator: est.to_string(),
                param_name: "N".into(),
                param_value: size as f64,
                n1,
                n2,
                r: est.num_features(),
                b: None,
                alpha: None,
                reps,
                reject_rate: None,
                se: None,
                mean_stat: stat_sum / reps as f64,
                mean_time_s: median(&mut times),
                seed,
            });
        }
    }
    Ok(ExperimentRecord {
        config: serde_json::json!({
            "kind": "timing_bench",
            "sizes": sizes,
            "estimators": estimators,
            "reps": reps,
            "seed": seed,
        }),
        rows,
    })
}

/// Least-squares slope of `ln t` against `ln N`.
pub fn log_log_slope(sizes: &[f64], times: &[f64]) -> f64 {
    let lx: Vec<f64> = sizes.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = times.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
