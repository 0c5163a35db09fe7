use std::sync::Arc;

use rayon::prelude::*;

use super::config::{BandwidthPolicy, ExperimentConfig, GridPoint, RPolicy};
use super::emit::{ExperimentRecord, ResultRow};
use super::policy::{ceil_count, l2_rate};
use crate::error::Result;
use crate::estimators::EstimatorId;
use crate::kernels::{median_heuristic, sample_frequencies, KernelSpec, MEDIAN_HEURISTIC_CAP};
use crate::permutation::{PermutationPlan, TestContext};
use crate::sample::{validate_pair, PooledSample, RngStream, SignificanceLevel};
use crate::scenarios::{MnistStore, Scenario};

/// Per-estimator outcome of one repetition.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    reject: bool,
    stat: f64,
    time_s: f64,
}

/// Feature count used by `est` at sample sizes `(n1, n2)`.
pub fn resolve_features(est: EstimatorId, policy: RPolicy, n1: usize, n2: usize, d: usize) -> EstimatorId {
    if !est.is_rff() {
        return est;
    }
    let n = n1.min(n2);
    match policy {
        RPolicy::Fixed => est,
        RPolicy::LinearInN => est.with_features(n),
        RPolicy::L2Rate { s } => est.with_features(ceil_count(l2_rate(n, d, s).0)),
    }
}

pub(crate) fn resolve_kernel(policy: BandwidthPolicy, pooled: &PooledSample, rng: &RngStream) -> Result<KernelSpec> {
    let d = pooled.d();
    match policy {
        BandwidthPolicy::MedianHeuristic { cap } => median_heuristic(pooled, cap, rng),
        BandwidthPolicy::TheoryMmd { lambda: None } => median_heuristic(pooled, MEDIAN_HEURISTIC_CAP, rng),
        BandwidthPolicy::Fixed { lambda } | BandwidthPolicy::TheoryMmd { lambda: Some(lambda) } => {
            KernelSpec::isotropic(d, lambda)
        }
        BandwidthPolicy::TheoryL2 { s } => KernelSpec::isotropic(d, l2_rate(pooled.n1().min(pooled.n2()), d, s).1),
    }
}

/// Stream for repetition `rep` at grid index `gi`. Depends only on its
/// coordinates, never on scheduling.
pub fn repetition_stream(seed: u64, scenario: &str, gi: usize, rep: usize) -> RngStream {
    RngStream::derive(seed, format!("power/{scenario}/{gi}/{rep}"))
}

fn one_repetition(
    cfg: &ExperimentConfig,
    point: &GridPoint,
    scenario: &Scenario,
    estimators: &[EstimatorId],
    rng: &RngStream,
) -> Result<Vec<Outcome>> {
    let (x, y) = scenario.sample(point.n1, point.n2, &rng.child("data"))?;
    let pooled = validate_pair(&x, &y)?;
    let spec = resolve_kernel(cfg.bandwidth, &pooled, &rng.child("bandwidth"))?;
    let mut plan = PermutationPlan::new(cfg.b, rng.child("perm"), SignificanceLevel::new(cfg.alpha)?)?;
    plan.retain = false;
    let ctx = TestContext::new(&pooled, &spec, plan)?;
    estimators
        .iter()
        .map(|&est| {
            let freqs = match est.num_features() {
                Some(r) => Some(sample_frequencies(&spec, r, &rng.child(format!("freq/{est}")))?),
                None => None,
            };
            let res = ctx.run(est, freqs.as_ref())?;
            Ok(Outcome {
                reject: res.reject,
                stat: res.statistic,
                time_s: res.elapsed.featurize_s + res.elapsed.statistic_s,
            })
        })
        .collect()
}

/// Rejection rate and mean statistic of every estimator at every grid value.
///
/// Each repetition draws fresh data, bandwidth, frequencies and
/// relabelings; all estimators at a repetition share the data and the
/// relabelings. Repetitions run on the rayon pool.
pub fn run_power_sweep(cfg: &ExperimentConfig, mnist: Option<Arc<MnistStore>>) -> Result<ExperimentRecord> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (gi, &value) in cfg.sweep.values.iter().enumerate() {
        let point = cfg.point(value)?;
        let scenario = Scenario::new(point.scenario.clone(), mnist.clone())?;
        let d = scenario.dim();
        let estimators: Vec<EstimatorId> = cfg
            .estimators
            .iter()
            .map(|&e| match point.r_override {
                Some(r) => e.with_features(r),
                None => resolve_features(e, cfg.r_policy, point.n1, point.n2, d),
            })
            .collect();
        let name = point.scenario.name();
        let outcomes: Vec<Vec<Outcome>> = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| one_repetition(cfg, &point, &scenario, &estimators, &repetition_stream(cfg.seed, name, gi, rep)))
            .collect::<Result<_>>()?;
        let reps = cfg.repetitions as f64;
        for (k, est) in estimators.iter().enumerate() {
            let rejections = outcomes.iter().filter(|o| o[k].reject).count();
            let rate = rejections as f64 / reps;
            rows.push(ResultRow {
                scenario: name.to_string(),
                estimator: est.to_string(),
                param_name: cfg.sweep.param.clone(),
                param_value: value,
                n1: point.n1,
                n2: point.n2,
                r: est.num_features(),
                b: Some(cfg.b),
                alpha: Some(cfg.alpha),
                reps: cfg.repetitions,
                reject_rate: Some(rate),
                se: Some((rate * (1.0 - rate) / reps).sqrt()),
                mean_stat: outcomes.iter().map(|o| o[k].stat).sum::<f64>() / reps,
                mean_time_s: outcomes.iter().map(|o| o[k].time_s).sum::<f64>() / reps,
                seed: cfg.seed,
            });
        }
    }
    Ok(ExperimentRecord {
        config: serde_json::to_value(cfg)?,
        rows,
    })
}
