//! Monte-Carlo permutation calibration.
//!
//! A [`TestContext`] holds one pooled sample, one kernel and one set of `B`
//! relabelings. Every estimator run through the same context sees the same
//! relabelings, and statistics that only depend on which rows land in `X`
//! (quadratic and random-feature statistics) are evaluated for all
//! relabelings at once with matrix products:
//!
//! * quadratic: with `a` the 0/1 indicator of `X` positions and `K` the Gram
//!   matrix, `a'Ka`, `a'K1` and `1'K1` give all three double sums;
//! * random features: `A Phi` gives the per-relabeling `X` and `Y` feature
//!   sums, with one indicator row per sample and relabeling.
//!
//! The observed statistic goes through the same code path as the permuted
//! ones, so a relabeling that reproduces the observed split reproduces the
//! observed value bit for bit.

use std::sync::OnceLock;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    block_stat, incomplete_stat, linear_stat, rff_unbiased_from_means, EstimatorId, IncompleteDesign,
    PairKernel, QuadSums,
};
use crate::features::{feature_matrix, FeatureMatrix, FrequencyDraw};
use crate::kernels::{median_heuristic, sample_frequencies, KernelSpec, MEDIAN_HEURISTIC_CAP};
use crate::sample::{validate_pair, CompensatedSum, PooledSample, RngStream, SampleSet, SignificanceLevel};

/// Largest pooled size for which a dense Gram matrix is cached.
pub const GRAM_LIMIT: usize = 4096;

/// Largest pooled size accepted by [`exact_permutation_stats`].
pub const EXACT_LIMIT: usize = 8;

const BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationPlan {
    pub b: usize,
    pub rng: RngStream,
    pub alpha: SignificanceLevel,
    /// Keep the permuted statistics in the result.
    pub retain: bool,
}

impl PermutationPlan {
    pub fn new(b: usize, rng: RngStream, alpha: SignificanceLevel) -> Result<Self> {
        if b == 0 {
            return Err(Error::invalid("number of permutations must be at least 1"));
        }
        Ok(Self {
            b,
            rng,
            alpha,
            retain: true,
        })
    }

    /// 199 permutations at level 0.05.
    pub fn with_defaults(rng: RngStream) -> Self {
        Self {
            b: 199,
            rng,
            alpha: SignificanceLevel::default(),
            retain: true,
        }
    }

    /// `B` uniform relabelings of `0..n`, drawn with replacement.
    pub fn orders(&self, n: usize) -> Vec<Vec<u32>> {
        let mut g = self.rng.rng();
        let base: Vec<u32> = (0..n as u32).collect();
        (0..self.b)
            .map(|_| {
                let mut o = base.clone();
                o.shuffle(&mut g);
                o
            })
            .collect()
    }
}

/// Wall-clock seconds spent in each phase of a test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub featurize_s: f64,
    pub statistic_s: f64,
    pub permutations_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub estimator: EstimatorId,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub b: usize,
    pub alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub permuted_stats: Option<Vec<f64>>,
    pub elapsed: Timing,
}

/// Critical value, p-value and decision from an observed statistic and its
/// permuted replicates.
///
/// The critical value is the `ceil((1 - alpha)(B + 1))`-th smallest of the
/// `B + 1` values `{T, T_1, ..., T_B}`; the test rejects iff `T` strictly
/// exceeds it.
pub fn calibrate(t: f64, permuted: &[f64], alpha: SignificanceLevel) -> (f64, f64, bool) {
    let b = permuted.len();
    let mut all = Vec::with_capacity(b + 1);
    all.push(t);
    all.extend_from_slice(permuted);
    all.sort_unstable_by(f64::total_cmp);
    let rank = ((1.0 - alpha.get()) * (b + 1) as f64 - 1e-9).ceil() as usize;
    let crit = all[rank.clamp(1, b + 1) - 1];
    let exceed = permuted.iter().filter(|&&v| v >= t).count();
    let p = (1 + exceed) as f64 / (b + 1) as f64;
    (crit, p, t > crit)
}

/// Kernel values for one relabeling of the pooled sample: within-sample index
/// `i` of `X` is pooled row `order[i]`, index `j` of `Y` is `order[n1 + j]`.
struct OrderedPairs<'a> {
    z: &'a SampleSet,
    spec: &'a KernelSpec,
    gram: Option<&'a [f64]>,
    order: &'a [u32],
    n1: usize,
    n2: usize,
}

impl OrderedPairs<'_> {
    #[inline]
    fn k(&self, a: u32, b: u32) -> f64 {
        let (a, b) = (a as usize, b as usize);
        match self.gram {
            Some(g) => g[a * self.z.n() + b],
            None => self.spec.eval_unchecked(self.z.row(a), self.z.row(b)),
        }
    }
}

impl PairKernel for OrderedPairs<'_> {
    fn n1(&self) -> usize {
        self.n1
    }
    fn n2(&self) -> usize {
        self.n2
    }
    fn kappa0(&self) -> f64 {
        self.spec.kappa0()
    }
    #[inline]
    fn xx(&self, i: usize, j: usize) -> f64 {
        self.k(self.order[i], self.order[j])
    }
    #[inline]
    fn yy(&self, i: usize, j: usize) -> f64 {
        self.k(self.order[self.n1 + i], self.order[self.n1 + j])
    }
    #[inline]
    fn xy(&self, i: usize, j: usize) -> f64 {
        self.k(self.order[i], self.order[self.n1 + j])
    }
}

struct Gram {
    k: Vec<f64>,
    row_sums: Vec<f64>,
    total: f64,
}

fn build_gram(z: &SampleSet, spec: &KernelSpec) -> Gram {
    let n = z.n();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = spec.kappa0();
        for j in i + 1..n {
            let v = spec.eval_unchecked(z.row(i), z.row(j));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let row_sums: Vec<f64> = k
        .chunks_exact(n)
        .map(|r| r.iter().copied().collect::<CompensatedSum>().value())
        .collect();
    let total = row_sums.iter().copied().collect::<CompensatedSum>().value();
    Gram { k, row_sums, total }
}

/// Writes the `N × cols` (row-major) indicator of `X` positions.
fn indicator_columns(orders: &[&[u32]], n: usize, n1: usize) -> Vec<f64> {
    let cols = orders.len();
    let mut w = vec![0.0; n * cols];
    for (c, o) in orders.iter().enumerate() {
        for &i in &o[..n1] {
            w[i as usize * cols + c] = 1.0;
        }
    }
    w
}

/// Row-major `C = A B` with `A: m × k`, `B: k × n`.
fn gemm(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; m * n];
    // SAFETY: the slices hold m*k, k*n and m*n elements with the row-major
    // strides passed here.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
    c
}

fn quad_sums_batch(g: &Gram, n: usize, n1: usize, kappa0: f64, orders: &[&[u32]]) -> Vec<QuadSums> {
    let n2 = n - n1;
    let mut out = Vec::with_capacity(orders.len());
    for chunk in orders.chunks(BATCH) {
        let cols = chunk.len();
        let w = indicator_columns(chunk, n, n1);
        let m = gemm(n, n, cols, &g.k, &w);
        for c in 0..cols {
            let mut s_xx = CompensatedSum::default();
            let mut a_k1 = CompensatedSum::default();
            for i in 0..n {
                if w[i * cols + c] != 0.0 {
                    s_xx.add(m[i * cols + c]);
                    a_k1.add(g.row_sums[i]);
                }
            }
            let (s_xx, a_k1) = (s_xx.value(), a_k1.value());
            let s_xy = a_k1 - s_xx;
            let s_yy = g.total - 2.0 * a_k1 + s_xx;
            out.push(QuadSums {
                xx_off: s_xx - n1 as f64 * kappa0,
                yy_off: s_yy - n2 as f64 * kappa0,
                xy: s_xy,
            });
        }
    }
    out
}

/// Same sums as [`quad_sums_batch`] without storing the Gram matrix: kernel
/// rows are generated in blocks and multiplied into the indicator matrix.
fn quad_sums_streaming(z: &SampleSet, spec: &KernelSpec, n1: usize, orders: &[&[u32]]) -> Vec<QuadSums> {
    const ROWS: usize = 128;
    let n = z.n();
    let n2 = n - n1;
    let kappa0 = spec.kappa0();
    let mut out = Vec::with_capacity(orders.len());
    for chunk in orders.chunks(BATCH) {
        let cols = chunk.len();
        let w = indicator_columns(chunk, n, n1);
        let mut s_xx = vec![CompensatedSum::default(); cols];
        let mut a_k1 = vec![CompensatedSum::default(); cols];
        let mut total = CompensatedSum::default();
        let mut block = vec![0.0; ROWS * n];
        for lo in (0..n).step_by(ROWS) {
            let hi = (lo + ROWS).min(n);
            let rows = hi - lo;
            for (r, i) in (lo..hi).enumerate() {
                let zi = z.row(i);
                for (j, v) in block[r * n..(r + 1) * n].iter_mut().enumerate() {
                    *v = spec.eval_unchecked(zi, z.row(j));
                }
            }
            let m = gemm(rows, n, cols, &block[..rows * n], &w);
            for (r, i) in (lo..hi).enumerate() {
                let row_sum = block[r * n..(r + 1) * n].iter().copied().collect::<CompensatedSum>().value();
                total.add(row_sum);
                for c in 0..cols {
                    if w[i * cols + c] != 0.0 {
                        s_xx[c].add(m[r * cols + c]);
                        a_k1[c].add(row_sum);
                    }
                }
            }
        }
        let total = total.value();
        for c in 0..cols {
            let (s_xx, a_k1) = (s_xx[c].value(), a_k1[c].value());
            out.push(QuadSums {
                xx_off: s_xx - n1 as f64 * kappa0,
                yy_off: total - 2.0 * a_k1 + s_xx - n2 as f64 * kappa0,
                xy: a_k1 - s_xx,
            });
        }
    }
    out
}

fn rff_batch(
    phi: &FeatureMatrix,
    n1: usize,
    kappa0: f64,
    unbiased: bool,
    orders: &[&[u32]],
) -> Vec<f64> {
    let n = phi.n();
    let n2 = n - n1;
    let width = phi.width();
    let (inv1, inv2) = (1.0 / n1 as f64, 1.0 / n2 as f64);
    let mut out = Vec::with_capacity(orders.len());
    let mut mx = vec![0.0; width];
    let mut my = vec![0.0; width];
    for chunk in orders.chunks(BATCH) {
        let rows = chunk.len();
        // Rows 0..rows select X, rows rows..2*rows select Y.
        let mut a = vec![0.0; 2 * rows * n];
        for (r, o) in chunk.iter().enumerate() {
            for &i in &o[..n1] {
                a[r * n + i as usize] = 1.0;
            }
            for &i in &o[n1..] {
                a[(rows + r) * n + i as usize] = 1.0;
            }
        }
        let sums = gemm(2 * rows, n, width, &a, phi.as_slice());
        for r in 0..rows {
            let sx = &sums[r * width..(r + 1) * width];
            let sy = &sums[(rows + r) * width..(rows + r + 1) * width];
            for c in 0..width {
                mx[c] = sx[c] * inv1;
                my[c] = sy[c] * inv2;
            }
            out.push(if unbiased {
                rff_unbiased_from_means(&mx, &my, n1, n2, kappa0)
            } else {
                mx.iter().zip(&my).map(|(a, b)| (a - b) * (a - b)).sum()
            });
        }
    }
    out
}

fn check_freqs(est: EstimatorId, spec: &KernelSpec, freqs: Option<&FrequencyDraw>) -> Result<()> {
    match (est.num_features(), freqs) {
        (Some(r), Some(f)) => {
            if f.r() != r {
                return Err(Error::invalid(format!(
                    "estimator {est} expects {r} frequencies, got {}",
                    f.r()
                )));
            }
            if f.d() != spec.d() {
                return Err(Error::DimensionMismatch {
                    expected: spec.d(),
                    got: f.d(),
                });
            }
            Ok(())
        }
        (Some(_), None) => Err(Error::invalid(format!("estimator {est} needs frequencies"))),
        (None, Some(_)) => Err(Error::invalid(format!("estimator {est} takes no frequencies"))),
        (None, None) => Ok(()),
    }
}

/// One pooled sample, kernel and set of relabelings, shared by every
/// estimator tested on it.
pub struct TestContext<'a> {
    pooled: &'a PooledSample,
    spec: &'a KernelSpec,
    plan: PermutationPlan,
    orders: Vec<Vec<u32>>,
    identity: Vec<u32>,
    gram: OnceLock<Option<(Gram, f64)>>,
    quad: OnceLock<(QuadSums, Vec<QuadSums>, Timing)>,
}

impl<'a> TestContext<'a> {
    pub fn new(pooled: &'a PooledSample, spec: &'a KernelSpec, plan: PermutationPlan) -> Result<Self> {
        if pooled.d() != spec.d() {
            return Err(Error::DimensionMismatch {
                expected: spec.d(),
                got: pooled.d(),
            });
        }
        if plan.b == 0 {
            return Err(Error::invalid("number of permutations must be at least 1"));
        }
        let orders = plan.orders(pooled.total());
        Ok(Self::with_orders(pooled, spec, plan, orders))
    }

    fn with_orders(pooled: &'a PooledSample, spec: &'a KernelSpec, plan: PermutationPlan, orders: Vec<Vec<u32>>) -> Self {
        Self {
            pooled,
            spec,
            plan,
            orders,
            identity: (0..pooled.total() as u32).collect(),
            gram: OnceLock::new(),
            quad: OnceLock::new(),
        }
    }

    pub fn plan(&self) -> &PermutationPlan {
        &self.plan
    }

    pub fn orders(&self) -> &[Vec<u32>] {
        &self.orders
    }

    fn gram_timed(&self) -> Option<&(Gram, f64)> {
        self.gram
            .get_or_init(|| {
                (self.pooled.total() <= GRAM_LIMIT).then(|| {
                    let t0 = Instant::now();
                    let g = build_gram(self.pooled.z(), self.spec);
                    (g, t0.elapsed().as_secs_f64())
                })
            })
            .as_ref()
    }

    fn gram(&self) -> Option<&Gram> {
        self.gram_timed().map(|(g, _)| g)
    }

    fn quad(&self) -> &(QuadSums, Vec<QuadSums>, Timing) {
        self.quad.get_or_init(|| {
            let (n, n1) = (self.pooled.total(), self.pooled.n1());
            let k0 = self.spec.kappa0();
            match self.gram_timed() {
                Some((g, gram_s)) => {
                    let t0 = Instant::now();
                    let obs = quad_sums_batch(g, n, n1, k0, &[&self.identity])[0];
                    let statistic_s = t0.elapsed().as_secs_f64() + gram_s;
                    let t1 = Instant::now();
                    let refs: Vec<&[u32]> = self.orders.iter().map(Vec::as_slice).collect();
                    let perm = quad_sums_batch(g, n, n1, k0, &refs);
                    let timing = Timing {
                        featurize_s: 0.0,
                        statistic_s,
                        permutations_s: t1.elapsed().as_secs_f64(),
                    };
                    (obs, perm, timing)
                }
                None => {
                    // One pass over the kernel rows serves the observed and
                    // the permuted statistics; time is split evenly.
                    let t0 = Instant::now();
                    let mut refs: Vec<&[u32]> = vec![&self.identity];
                    refs.extend(self.orders.iter().map(Vec::as_slice));
                    let mut all = quad_sums_streaming(self.pooled.z(), self.spec, n1, &refs);
                    let elapsed = t0.elapsed().as_secs_f64();
                    let obs = all.remove(0);
                    let share = elapsed / refs.len() as f64;
                    let timing = Timing {
                        featurize_s: 0.0,
                        statistic_s: share,
                        permutations_s: elapsed - share,
                    };
                    (obs, all, timing)
                }
            }
        })
    }

    fn pairs<'b>(&'b self, order: &'b [u32], gram: Option<&'b Gram>) -> OrderedPairs<'b> {
        OrderedPairs {
            z: self.pooled.z(),
            spec: self.spec,
            gram: gram.map(|g| g.k.as_slice()),
            order,
            n1: self.pooled.n1(),
            n2: self.pooled.n2(),
        }
    }

    /// Design for the incomplete statistic, fixed across relabelings.
    pub fn incomplete_design(&self, r_prime: usize) -> Result<IncompleteDesign> {
        IncompleteDesign::sample(
            self.pooled.n1(),
            r_prime,
            &self.plan.rng.child(format!("design/{r_prime}")),
        )
    }

    /// Statistic values of `est` under each relabeling in `orders`.
    pub fn evaluate_orders(
        &self,
        est: EstimatorId,
        freqs: Option<&FrequencyDraw>,
        orders: &[&[u32]],
    ) -> Result<Vec<f64>> {
        check_freqs(est, self.spec, freqs)?;
        let (n, n1, n2) = (self.pooled.total(), self.pooled.n1(), self.pooled.n2());
        let k0 = self.spec.kappa0();
        match est {
            EstimatorId::QuadB | EstimatorId::QuadU => {
                if n1 < 2 || n2 < 2 {
                    return Err(Error::TooFewSamples { min: 2, got: n1.min(n2) });
                }
                let sums: Vec<QuadSums> = match self.gram() {
                    Some(g) => quad_sums_batch(g, n, n1, k0, orders),
                    None => quad_sums_streaming(self.pooled.z(), self.spec, n1, orders),
                };
                Ok(sums
                    .iter()
                    .map(|s| match est {
                        EstimatorId::QuadB => s.biased(n1, n2, k0),
                        _ => s.unbiased(n1, n2),
                    })
                    .collect())
            }
            EstimatorId::RffB { .. } | EstimatorId::RffU { .. } => {
                let f = freqs.expect("checked above");
                let phi = feature_matrix(self.pooled.z(), f, k0)?;
                Ok(rff_batch(&phi, n1, k0, matches!(est, EstimatorId::RffU { .. }), orders))
            }
            EstimatorId::Linear => self.by_order(orders, |p| linear_stat(p)),
            EstimatorId::Block { b } => {
                let b = b.resolve(n1);
                self.by_order(orders, |p| block_stat(p, b))
            }
            EstimatorId::Incomplete { r_prime } => {
                if n1 != n2 {
                    return Err(Error::UnequalSampleSizes { n1, n2 });
                }
                let design = self.incomplete_design(r_prime)?;
                self.by_order(orders, |p| incomplete_stat(p, &design))
            }
        }
    }

    fn by_order<F>(&self, orders: &[&[u32]], f: F) -> Result<Vec<f64>>
    where
        F: Fn(&OrderedPairs<'_>) -> Result<f64> + Sync,
    {
        let gram = self.gram();
        orders.par_iter().map(|o| f(&self.pairs(o, gram))).collect()
    }

    /// Runs the permutation test for `est`. `freqs` must be given exactly
    /// when `est` is a random-feature statistic.
    pub fn run(&self, est: EstimatorId, freqs: Option<&FrequencyDraw>) -> Result<TestResult> {
        check_freqs(est, self.spec, freqs)?;
        let (n1, n2) = (self.pooled.n1(), self.pooled.n2());
        let k0 = self.spec.kappa0();
        let (t, perm, elapsed) = match est {
            EstimatorId::QuadB | EstimatorId::QuadU => {
                if n1 < 2 || n2 < 2 {
                    return Err(Error::TooFewSamples { min: 2, got: n1.min(n2) });
                }
                let (obs, perm, timing) = self.quad();
                let stat = |s: &QuadSums| match est {
                    EstimatorId::QuadB => s.biased(n1, n2, k0),
                    _ => s.unbiased(n1, n2),
                };
                (stat(obs), perm.iter().map(stat).collect(), *timing)
            }
            EstimatorId::RffB { .. } | EstimatorId::RffU { .. } => {
                let f = freqs.expect("checked above");
                let unbiased = matches!(est, EstimatorId::RffU { .. });
                if unbiased && (n1 < 2 || n2 < 2) {
                    return Err(Error::TooFewSamples { min: 2, got: n1.min(n2) });
                }
                let t0 = Instant::now();
                let phi = feature_matrix(self.pooled.z(), f, k0)?;
                let featurize_s = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let t = rff_batch(&phi, n1, k0, unbiased, &[&self.identity])[0];
                let statistic_s = t1.elapsed().as_secs_f64();
                let t2 = Instant::now();
                let refs: Vec<&[u32]> = self.orders.iter().map(Vec::as_slice).collect();
                let perm = rff_batch(&phi, n1, k0, unbiased, &refs);
                let timing = Timing {
                    featurize_s,
                    statistic_s,
                    permutations_s: t2.elapsed().as_secs_f64(),
                };
                (t, perm, timing)
            }
            _ => {
                let t0 = Instant::now();
                let t = self.evaluate_orders(est, None, &[&self.identity])?[0];
                let statistic_s = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let refs: Vec<&[u32]> = self.orders.iter().map(Vec::as_slice).collect();
                let perm = self.evaluate_orders(est, None, &refs)?;
                let timing = Timing {
                    featurize_s: 0.0,
                    statistic_s,
                    permutations_s: t1.elapsed().as_secs_f64(),
                };
                (t, perm, timing)
            }
        };
        let (critical_value, p_value, reject) = calibrate(t, &perm, self.plan.alpha);
        Ok(TestResult {
            estimator: est,
            statistic: t,
            critical_value,
            p_value,
            reject,
            b: self.plan.b,
            alpha: self.plan.alpha.get(),
            permuted_stats: self.plan.retain.then_some(perm),
            elapsed,
        })
    }
}

/// Draws `plan.b` relabelings of `z` and calibrates `stat` against them,
/// reusing `spec` and `freqs` unchanged for every relabeling.
pub fn permute_and_evaluate(
    z: &PooledSample,
    stat: EstimatorId,
    spec: &KernelSpec,
    freqs: Option<&FrequencyDraw>,
    plan: &PermutationPlan,
) -> Result<TestResult> {
    TestContext::new(z, spec, *plan)?.run(stat, freqs)
}

/// Statistic values over all `N!` relabelings of a small pooled sample.
/// Only `plan.rng` is used, for the incomplete design, so the result lines
/// up with [`permute_and_evaluate`] under the same plan.
pub fn exact_permutation_stats(
    z: &PooledSample,
    stat: EstimatorId,
    spec: &KernelSpec,
    freqs: Option<&FrequencyDraw>,
    plan: &PermutationPlan,
) -> Result<Vec<f64>> {
    let n = z.total();
    if n > EXACT_LIMIT {
        return Err(Error::invalid(format!(
            "exact enumeration supports at most {EXACT_LIMIT} pooled rows, got {n}"
        )));
    }
    let mut all = Vec::new();
    let mut cur: Vec<u32> = (0..n as u32).collect();
    loop {
        all.push(cur.clone());
        if !next_permutation(&mut cur) {
            break;
        }
    }
    let ctx = TestContext::with_orders(z, spec, *plan, Vec::new());
    let refs: Vec<&[u32]> = all.iter().map(Vec::as_slice).collect();
    ctx.evaluate_orders(stat, freqs, &refs)
}

fn next_permutation(v: &mut [u32]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).expect("pivot has a successor");
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RffVariant {
    Biased,
    Unbiased,
}

/// Kernel bandwidth for [`rff_mmd_test`].
#[derive(Debug, Clone, PartialEq)]
pub enum Bandwidth {
    Fixed(KernelSpec),
    /// Median heuristic on the pooled sample, subsampled to `cap` rows.
    Median { cap: usize },
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Median {
            cap: MEDIAN_HEURISTIC_CAP,
        }
    }
}

/// Random-feature MMD permutation test. One set of `r` frequencies is drawn
/// from `plan.rng` and held fixed across all relabelings.
pub fn rff_mmd_test(
    x: &SampleSet,
    y: &SampleSet,
    variant: RffVariant,
    r: usize,
    plan: &PermutationPlan,
    bandwidth: &Bandwidth,
) -> Result<TestResult> {
    let pooled = validate_pair(x, y)?;
    let spec = match bandwidth {
        Bandwidth::Fixed(s) => s.clone(),
        Bandwidth::Median { cap } => median_heuristic(&pooled, *cap, &plan.rng.child("bandwidth"))?,
    };
    let est = match variant {
        RffVariant::Biased => EstimatorId::RffB { r },
        RffVariant::Unbiased => EstimatorId::RffU { r },
    };
    let t0 = Instant::now();
    let freqs = sample_frequencies(&spec, r, &plan.rng.child("freq"))?;
    let draw_s = t0.elapsed().as_secs_f64();
    let mut res = permute_and_evaluate(&pooled, est, &spec, Some(&freqs), plan)?;
    res.elapsed.featurize_s += draw_s;
    Ok(res)
}
