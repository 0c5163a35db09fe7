//! Straightforward reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rffmmd::{RngStream, SampleSet};

pub type Rows = Vec<Vec<f64>>;

pub fn kernel(x: &[f64], y: &[f64], lambda: &[f64]) -> f64 {
    let mut k = 1.0;
    for i in 0..x.len() {
        let u = (x[i] - y[i]) / lambda[i];
        k *= (-u * u).exp() / (PI.sqrt() * lambda[i]);
    }
    k
}

pub fn kappa0(lambda: &[f64]) -> f64 {
    lambda.iter().map(|l| 1.0 / (PI.sqrt() * l)).product()
}

fn mean_k(a: &Rows, b: &Rows, lambda: &[f64], skip_diag: bool) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if skip_diag && i == j {
                continue;
            }
            s += kernel(x, y, lambda);
            c += 1.0;
        }
    }
    s / c
}

pub fn v_stat(x: &Rows, y: &Rows, lambda: &[f64]) -> f64 {
    mean_k(x, x, lambda, false) + mean_k(y, y, lambda, false) - 2.0 * mean_k(x, y, lambda, false)
}

pub fn u_stat(x: &Rows, y: &Rows, lambda: &[f64]) -> f64 {
    mean_k(x, x, lambda, true) + mean_k(y, y, lambda, true) - 2.0 * mean_k(x, y, lambda, false)
}

/// Feature inner product for frequencies `omegas` (one per row).
pub fn rff_kernel(x: &[f64], y: &[f64], omegas: &Rows, k0: f64) -> f64 {
    let mut s = 0.0;
    for w in omegas {
        let wx: f64 = w.iter().zip(x).map(|(a, b)| a * b).sum();
        let wy: f64 = w.iter().zip(y).map(|(a, b)| a * b).sum();
        s += wx.cos() * wy.cos() + wx.sin() * wy.sin();
    }
    k0 * s / omegas.len() as f64
}

fn mean_rff(a: &Rows, b: &Rows, omegas: &Rows, k0: f64, skip_diag: bool) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if skip_diag && i == j {
                continue;
            }
            s += rff_kernel(x, y, omegas, k0);
            c += 1.0;
        }
    }
    s / c
}

pub fn rff_v(x: &Rows, y: &Rows, omegas: &Rows, k0: f64) -> f64 {
    mean_rff(x, x, omegas, k0, false) + mean_rff(y, y, omegas, k0, false) - 2.0 * mean_rff(x, y, omegas, k0, false)
}

pub fn rff_u(x: &Rows, y: &Rows, omegas: &Rows, k0: f64) -> f64 {
    mean_rff(x, x, omegas, k0, true) + mean_rff(y, y, omegas, k0, true) - 2.0 * mean_rff(x, y, omegas, k0, false)
}

/// `h` on the quadruple `(x_i, x_i2, y_j, y_j2)`.
pub fn h(x: &Rows, y: &Rows, lambda: &[f64], i: usize, i2: usize, j: usize, j2: usize) -> f64 {
    kernel(&x[i], &x[i2], lambda) + kernel(&y[j], &y[j2], lambda)
        - kernel(&x[i], &y[j2], lambda)
        - kernel(&x[i2], &y[j], lambda)
}

pub fn linear(x: &Rows, y: &Rows, lambda: &[f64]) -> f64 {
    let m = x.len() / 2;
    (0..m).map(|t| h(x, y, lambda, 2 * t, 2 * t + 1, 2 * t, 2 * t + 1)).sum::<f64>() / m as f64
}

pub fn block(x: &Rows, y: &Rows, lambda: &[f64], b: usize) -> f64 {
    let blocks = x.len() / b;
    let mut s = 0.0;
    for q in 0..blocks {
        let xs: Rows = x[q * b..(q + 1) * b].to_vec();
        let ys: Rows = y[q * b..(q + 1) * b].to_vec();
        s += u_stat(&xs, &ys, lambda);
    }
    s / blocks as f64
}

pub fn incomplete(x: &Rows, y: &Rows, lambda: &[f64], quads: &[[u32; 4]]) -> f64 {
    quads
        .iter()
        .map(|q| h(x, y, lambda, q[0] as usize, q[1] as usize, q[2] as usize, q[3] as usize))
        .sum::<f64>()
        / quads.len() as f64
}

pub fn to_rows(s: &SampleSet) -> Rows {
    s.rows().map(|r| r.to_vec()).collect()
}

pub fn gaussian_rows(n: usize, d: usize, shift: f64, rng: &RngStream) -> Rows {
    let mut g = rng.rng();
    (0..n)
        .map(|_| (0..d).map(|_| shift + g.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

pub fn sample_set(rows: &Rows) -> SampleSet {
    SampleSet::from_rows(rows).unwrap()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Nested adaptive Simpson over a rectangle.
pub fn simpson2<F: Fn(f64, f64) -> f64>(f: &F, (a, b): (f64, f64), (c, d): (f64, f64), tol: f64) -> f64 {
    let inner = |x: f64| simpson(&|y| f(x, y), c, d, tol / 10.0);
    simpson(&inner, a, b, tol)
}

/// Total variation between the empirical laws of `a` and `b`, treating
/// values within a relative `1e-9` of each other as equal.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    use std::collections::HashMap;
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let key = |v: f64| (v / scale * 1e9).round() as i64;
    let mut mass: HashMap<i64, f64> = HashMap::new();
    for &v in a {
        *mass.entry(key(v)).or_default() += 1.0 / a.len() as f64;
    }
    for &v in b {
        *mass.entry(key(v)).or_default() -= 1.0 / b.len() as f64;
    }
    0.5 * mass.values().map(|m| m.abs()).sum::<f64>()
}

/// Kolmogorov-Smirnov distance between two empirical distributions.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut worst) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        worst = worst.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    worst
}

/// KS distance between a sample and a continuous CDF.
pub fn ks_to_cdf<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = cdf(v);
            (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Exact permutation law vs `b` Monte-Carlo relabelings for one estimator
/// on a pooled sample of 4 + 4 points. Returns `(tv, ks)`.
pub fn exact_vs_monte_carlo(est: rffmmd::EstimatorId, b: usize, seed: u64) -> (f64, f64) {
    use rffmmd::permutation::exact_permutation_stats;
    use rffmmd::{sample_frequencies, validate_pair, KernelSpec, PermutationPlan, SignificanceLevel, TestContext};
    let rng = RngStream::derive(seed, format!("exact/{est}"));
    let x = sample_set(&gaussian_rows(4, 1, 0.0, &rng.child("x")));
    let y = sample_set(&gaussian_rows(4, 1, 0.7, &rng.child("y")));
    let pooled = validate_pair(&x, &y).unwrap();
    let spec = KernelSpec::isotropic(1, 1.0).unwrap();
    let plan = PermutationPlan::new(b, rng.child("perm"), SignificanceLevel::default()).unwrap();
    let freqs = est.num_features().map(|r| sample_frequencies(&spec, r, &rng.child("freq")).unwrap());
    let exact = exact_permutation_stats(&pooled, est, &spec, freqs.as_ref(), &plan).unwrap();
    assert_eq!(exact.len(), 40320);
    let mc = TestContext::new(&pooled, &spec, plan)
        .unwrap()
        .run(est, freqs.as_ref())
        .unwrap()
        .permuted_stats
        .unwrap();
    (tv_distance(&exact, &mc), ks_distance(&exact, &mc))
}

/// Largest relative error of each estimator against the loops above over
/// `count` random instances with `n1, n2 <= 5` and `R <= 3`.
pub fn small_instance_errors(count: usize, seed: u64) -> Vec<(&'static str, f64)> {
    use rffmmd::estimators::{
        mmd2_biased, mmd2_block, mmd2_incomplete_with_design, mmd2_linear, mmd2_unbiased, rff_mmd2_biased,
        rff_mmd2_unbiased,
    };
    use rffmmd::{feature_matrix, sample_frequencies, IncompleteDesign, KernelSpec};

    let names = ["quad-b", "quad-u", "rff-b", "rff-u", "linear", "block", "incomplete"];
    let mut worst = [0.0f64; 7];
    let mut note = |k: usize, got: f64, want: f64| {
        let e = (got - want).abs() / (1.0 + want.abs());
        worst[k] = worst[k].max(e);
    };
    for inst in 0..count {
        let rng = RngStream::derive(seed, format!("inst/{inst}"));
        let mut g = rng.rng();
        let d = g.random_range(1..=3);
        let n1 = g.random_range(2..=5);
        let n2 = g.random_range(2..=5);
        let r = g.random_range(1..=3);
        let lambda: Vec<f64> = (0..d).map(|_| g.random_range(0.5..2.0)).collect();
        let x = gaussian_rows(n1, d, 0.0, &rng.child("x"));
        let y = gaussian_rows(n2, d, 0.4, &rng.child("y"));
        let spec = KernelSpec::gaussian(lambda.clone()).unwrap();
        let (sx, sy) = (sample_set(&x), sample_set(&y));

        note(0, mmd2_biased(&sx, &sy, &spec).unwrap(), v_stat(&x, &y, &lambda));
        note(1, mmd2_unbiased(&sx, &sy, &spec).unwrap(), u_stat(&x, &y, &lambda));

        let f = sample_frequencies(&spec, r, &rng.child("freq")).unwrap();
        let omegas: Rows = f.rows().map(|w| w.to_vec()).collect();
        let k0 = kappa0(&lambda);
        let fx = feature_matrix(&sx, &f, spec.kappa0()).unwrap();
        let fy = feature_matrix(&sy, &f, spec.kappa0()).unwrap();
        note(2, rff_mmd2_biased(&fx, &fy).unwrap(), rff_v(&x, &y, &omegas, k0));
        note(3, rff_mmd2_unbiased(&fx, &fy, spec.kappa0()).unwrap(), rff_u(&x, &y, &omegas, k0));

        // Equal-size estimators on the first min(n1, n2) rows, trimmed to
        // an even count for the linear statistic.
        let m = n1.min(n2);
        let (xe, ye) = (x[..m].to_vec(), y[..m].to_vec());
        let (sxe, sye) = (sample_set(&xe), sample_set(&ye));
        let m2 = m - m % 2;
        let (xl, yl) = (x[..m2].to_vec(), y[..m2].to_vec());
        note(4, mmd2_linear(&sample_set(&xl), &sample_set(&yl), &spec).unwrap(), linear(&xl, &yl, &lambda));
        let b = 2 + inst % (m - 1);
        note(5, mmd2_block(&sxe, &sye, &spec, b).unwrap(), block(&xe, &ye, &lambda, b));
        let design = IncompleteDesign::sample(m, 1 + inst % 3, &rng.child("design")).unwrap();
        note(
            6,
            mmd2_incomplete_with_design(&sxe, &sye, &spec, &design).unwrap(),
            incomplete(&xe, &ye, &lambda, design.quadruples()),
        );
    }
    names.into_iter().zip(worst).collect()
}

/// Composite quadrature of `f` on `[0, t]` over sub-intervals of width
/// `1/(4p)`, where the bump pieces of a `p`-cell perturbation join.
pub fn integrate_cells<F: Fn(f64) -> f64>(f: &F, t: f64, p: usize) -> f64 {
    let step = 1.0 / (4 * p) as f64;
    let mut s = 0.0;
    let mut a = 0.0;
    while a < t - 1e-15 {
        let b = (a + step).min(t);
        s += simpson(f, a, b, 1e-13);
        a = b;
    }
    s
}

/// `|integral of the perturbed density - 1|` for `d` in {1, 2}.
pub fn perturbed_normalization_error(d: usize, p: usize, amp: f64) -> f64 {
    let f = rffmmd::scenarios::PerturbedUniform::new(d, p, amp, None).unwrap();
    let total = if d == 1 {
        integrate_cells(&|t| f.density(&[t]), 1.0, p)
    } else {
        let step = 1.0 / (4 * p) as f64;
        let mut s = 0.0;
        for i in 0..4 * p {
            for j in 0..4 * p {
                let (a, c) = (i as f64 * step, j as f64 * step);
                s += simpson2(&|u, v| f.density(&[u, v]), (a, a + step), (c, c + step), 1e-11);
            }
        }
        s
    };
    (total - 1.0).abs()
}

/// Largest gap between the empirical CDF of the first coordinate of `n`
/// sampler draws and its quadrature CDF, over a grid of `40p` points.
pub fn perturbed_cdf_gap(d: usize, p: usize, amp: f64, n: usize, seed: u64) -> f64 {
    let f = rffmmd::scenarios::PerturbedUniform::new(d, p, amp, None).unwrap();
    let s = f.sample(n, &RngStream::derive(seed, format!("cdf/{d}/{p}"))).unwrap();
    let marginal = |u: f64| {
        if d == 1 {
            f.density(&[u])
        } else {
            integrate_cells(&|v| f.density(&[u, v]), 1.0, p)
        }
    };
    let mut firsts: Vec<f64> = s.rows().map(|r| r[0]).collect();
    firsts.sort_by(f64::total_cmp);
    let grid = 40 * p;
    let mut cdf = 0.0;
    let mut worst = 0.0f64;
    for k in 1..=grid {
        let (a, b) = ((k - 1) as f64 / grid as f64, k as f64 / grid as f64);
        cdf += simpson(&marginal, a, b, 1e-10);
        let emp = firsts.partition_point(|&v| v <= b) as f64 / n as f64;
        worst = worst.max((emp - cdf).abs());
    }
    worst
}
