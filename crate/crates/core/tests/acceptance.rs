//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rffmmd::estimators::{mmd2_biased, mmd2_unbiased};
use rffmmd::harness::{
    bandwidth_for_mass, check_spectral_mass, log_log_slope, run_inconsistency_demo, run_power_sweep,
    run_timing_bench, theory_parameter_policy, BandwidthPolicy, ExperimentConfig, ExperimentRecord, RPolicy, Sweep,
    TheoryPolicy,
};
use rffmmd::oracles::{gaussian_mmd2_closed_form, moment_identity_rhs, scalar_ratio, GaussianPair};
use rffmmd::scenarios::ScenarioSpec;
use rffmmd::{EstimatorId, KernelSpec, RngStream, SampleSet};

type Outcome = Result<String, String>;

fn ids(list: &[&str]) -> Vec<EstimatorId> {
    list.iter().map(|s| s.parse().unwrap()).collect()
}

fn rate(rec: &ExperimentRecord, est: &str, value: f64) -> (f64, f64) {
    let row = rec
        .rows
        .iter()
        .find(|r| r.estimator == est && r.param_value == value)
        .unwrap_or_else(|| panic!("no row for {est} at {value}"));
    (row.reject_rate.unwrap(), row.se.unwrap())
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn power_config(mu: f64, n: usize, estimators: &[&str], reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        scenario: ScenarioSpec::Gauss1dMean { mu },
        estimators: ids(estimators),
        sweep: Sweep {
            param: "mu".into(),
            values: vec![mu],
        },
        n1: n,
        n2: n,
        b: 199,
        alpha: 0.05,
        repetitions: reps,
        seed,
        bandwidth: BandwidthPolicy::default(),
        r_policy: RPolicy::Fixed,
    }
}

fn type_one_error() -> Outcome {
    let ests = ["quad-b", "quad-u", "rff-b:10", "rff-u:10", "linear", "block:sqrt", "incomplete:100"];
    let rec = run_power_sweep(&power_config(0.0, 200, &ests, 2000, 101), None).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for e in ests {
        let (r, _) = rate(&rec, e, 0.0);
        ok &= (0.030..=0.065).contains(&r);
        parts.push(format!("{e}={r:.4}"));
    }
    verdict(ok, parts.join(" "))
}

fn oracle_equivalence() -> Outcome {
    let errs = common::small_instance_errors(50, 202);
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let mut ok = worst <= 1e-12;
    let mut parts = vec![format!("max rel err {worst:.2e}")];
    for e in ids(&["quad-b", "quad-u", "rff-b:3", "rff-u:3"]) {
        let (tv, _) = common::exact_vs_monte_carlo(e, 100_000, 7);
        ok &= tv <= 0.02;
        parts.push(format!("TV[{e}]={tv:.4}"));
    }
    // These depend on the order within each sample, so almost every one of
    // the 8! relabelings has its own value; the CDF distance is compared.
    for e in ids(&["linear", "block:2", "incomplete:100"]) {
        let (_, ks) = common::exact_vs_monte_carlo(e, 100_000, 7);
        ok &= ks <= 0.02;
        parts.push(format!("KS[{e}]={ks:.4}"));
    }
    verdict(ok, parts.join(" "))
}

fn gap_bound() -> Outcome {
    let mut g = RngStream::derive(303, "gap").rng();
    let mut violations = 0;
    let mut max_frac = 0.0f64;
    for _ in 0..1000 {
        let d = g.random_range(1..=4);
        let n1 = g.random_range(2..=30);
        let n2 = g.random_range(2..=30);
        let lam = g.random_range(0.05..5.0);
        let scale = g.random_range(0.1..4.0);
        let mut draw = |n: usize| {
            let data: Vec<f64> = (0..n * d).map(|_| scale * g.sample::<f64, _>(StandardNormal)).collect();
            SampleSet::new(data, n, d).unwrap()
        };
        let (x, y) = (draw(n1), draw(n2));
        let spec = KernelSpec::isotropic(d, lam).unwrap();
        let gap = mmd2_biased(&x, &y, &spec).unwrap() - mmd2_unbiased(&x, &y, &spec).unwrap();
        let bound = spec.kappa0() * (1.0 / (n1 as f64 - 1.0) + 1.0 / (n2 as f64 - 1.0));
        let slack = 1e-12 * spec.kappa0();
        if gap < -slack || gap > bound + slack {
            violations += 1;
        }
        max_frac = max_frac.max(gap / bound);
    }
    verdict(violations == 0, format!("{violations} violations, max gap/bound {max_frac:.4}"))
}

/// Draws `n` rows of `N(mu, L L')`.
fn mvn(n: usize, mu: &[f64], chol: &DMatrix<f64>, g: &mut impl Rng) -> Vec<Vec<f64>> {
    let d = mu.len();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| g.sample(StandardNormal)).collect();
            (0..d).map(|i| mu[i] + (0..=i).map(|j| chol[(i, j)] * z[j]).sum::<f64>()).collect()
        })
        .collect()
}

/// Two-sample jackknife standard error of the unbiased statistic, from the
/// off-diagonal row sums of the three kernel blocks.
fn jackknife_se(x: &[Vec<f64>], y: &[Vec<f64>], lam: &[f64]) -> f64 {
    let (n, m) = (x.len(), y.len());
    let (nf, mf) = (n as f64, m as f64);
    let mut rxx = vec![0.0; n];
    let mut ryy = vec![0.0; m];
    let mut rxy = vec![0.0; n];
    let mut ryx = vec![0.0; m];
    for i in 0..n {
        for j in i + 1..n {
            let k = common::kernel(&x[i], &x[j], lam);
            rxx[i] += k;
            rxx[j] += k;
        }
        for j in 0..m {
            let k = common::kernel(&x[i], &y[j], lam);
            rxy[i] += k;
            ryx[j] += k;
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            let k = common::kernel(&y[i], &y[j], lam);
            ryy[i] += k;
            ryy[j] += k;
        }
    }
    let (sxx, syy, sxy): (f64, f64, f64) = (rxx.iter().sum(), ryy.iter().sum(), rxy.iter().sum());
    let u = |sxx: f64, syy: f64, sxy: f64, n: f64, m: f64| sxx / (n * (n - 1.0)) + syy / (m * (m - 1.0)) - 2.0 * sxy / (n * m);
    let spread = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>()
    };
    let del_x: Vec<f64> = (0..n).map(|i| u(sxx - 2.0 * rxx[i], syy, sxy - rxy[i], nf - 1.0, mf)).collect();
    let del_y: Vec<f64> = (0..m).map(|j| u(sxx, syy - 2.0 * ryy[j], sxy - ryx[j], nf, mf - 1.0)).collect();
    ((nf - 1.0) / nf * spread(&del_x) + (mf - 1.0) / mf * spread(&del_y)).sqrt()
}

fn gaussian_closed_form() -> Outcome {
    let rng = RngStream::derive(404, "closed-form");
    let mut g = rng.rng();
    let mut worst = 0.0f64;
    for pair_idx in 0..20 {
        let d = 1 + pair_idx % 3;
        let mu_x: Vec<f64> = (0..d).map(|_| g.random_range(-0.5..0.5)).collect();
        let mu_y: Vec<f64> = (0..d).map(|_| g.random_range(-0.5..0.5)).collect();
        let a = DMatrix::from_fn(d, d, |_, _| g.random_range(-0.5..0.5));
        let sigma = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
        let lam: Vec<f64> = (0..d).map(|_| g.random_range(0.5..2.0)).collect();
        let pair = GaussianPair::new(mu_x.clone(), mu_y.clone(), sigma.clone()).unwrap();
        let spec = KernelSpec::gaussian(lam.clone()).unwrap();
        let chol = sigma.clone().cholesky().unwrap().l();
        let x = mvn(4000, &mu_x, &chol, &mut g);
        let y = mvn(4000, &mu_y, &chol, &mut g);
        let est = mmd2_unbiased(&common::sample_set(&x), &common::sample_set(&y), &spec).unwrap();
        let se = jackknife_se(&x, &y, &lam);
        let exact = gaussian_mmd2_closed_form(&pair, &spec).unwrap();
        worst = worst.max((est - exact).abs() / se);
    }
    verdict(worst <= 4.0, format!("max |U - closed form| / se = {worst:.3} over 20 pairs"))
}

fn moment_identity() -> Outcome {
    let mut g = RngStream::derive(505, "moments").rng();
    let mut worst = 0.0f64;
    for case in 0..10 {
        let d = 1 + case % 3;
        let mu_x: Vec<f64> = (0..d).map(|_| g.random_range(-1.0..1.0)).collect();
        let mu_y: Vec<f64> = (0..d).map(|_| g.random_range(-1.0..1.0)).collect();
        let a = DMatrix::from_fn(d, d, |_, _| g.random_range(-0.4..0.4));
        let sigma = &a * a.transpose() + DMatrix::identity(d, d) * 0.4;
        let lam: Vec<f64> = (0..d).map(|_| g.random_range(0.5..2.0)).collect();
        let pair = GaussianPair::new(mu_x.clone(), mu_y.clone(), sigma.clone()).unwrap();
        let spec = KernelSpec::gaussian(lam.clone()).unwrap();
        let k0 = common::kappa0(&lam);
        let m = 200_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..m {
            let w: Vec<f64> = lam.iter().map(|l| 2f64.sqrt() / l * g.sample::<f64, _>(StandardNormal)).collect();
            let mut quad = 0.0;
            for i in 0..d {
                for j in 0..d {
                    quad += w[i] * sigma[(i, j)] * w[j];
                }
            }
            let phase: f64 = (0..d).map(|i| w[i] * (mu_x[i] - mu_y[i])).sum();
            // Conditional mean of the one-pair statistic given the frequency,
            // from the Gaussian characteristic functions.
            let c = 2.0 * k0 * (-quad).exp() * (1.0 - phase.cos());
            s += c * c;
            s2 += c.powi(4);
        }
        let mean = s / m as f64;
        let se = ((s2 / m as f64 - mean * mean) / m as f64).sqrt();
        let rhs = moment_identity_rhs(&pair, &spec).unwrap();
        worst = worst.max((mean - rhs).abs() / se);
    }
    let mut max_scalar = 0.0f64;
    for i in 0..40 {
        for j in 0..25 {
            let s_b = 10f64.powf(-4.0 + 6.0 * i as f64 / 39.0);
            let s_a = s_b * (0.5 + 0.5 * j as f64 / 24.0);
            max_scalar = max_scalar.max(scalar_ratio(s_a, s_b));
        }
    }
    verdict(
        worst <= 4.0 && max_scalar <= 6.0,
        format!("max |MC - rhs| / se = {worst:.3} over 10 pairs; max scalar ratio {max_scalar:.4} on 1000 points"),
    )
}

fn power_in_r(rec: &ExperimentRecord) -> (Outcome, Outcome) {
    let (q, _) = rate(rec, "quad-u", 0.15);
    let (p10, s10) = rate(rec, "rff-u:10", 0.15);
    let (p200, s200) = rate(rec, "rff-u:200", 0.15);
    let (p1000, s1000) = rate(rec, "rff-u:1000", 0.15);
    let matched = verdict(
        (p200 - q).abs() <= 0.07,
        format!("power RFF(R=200)={p200:.4}, quadratic={q:.4}, |diff|={:.4}", (p200 - q).abs()),
    );
    let mono = verdict(
        p10 <= p200 + 2.0 * s200.max(s10) && p200 <= p1000 + 2.0 * s1000.max(s200),
        format!("power R=10: {p10:.4}, R=200: {p200:.4}, R=1000: {p1000:.4}"),
    );
    (matched, mono)
}

fn inconsistency() -> Outcome {
    let lambda = bandwidth_for_mass(0.002, 1.0);
    let mass = check_spectral_mass(lambda, 1.0, 2.0).map_err(|e| e.to_string())?;
    let base = |ests: &[&str], reps: usize, policy: RPolicy| ExperimentConfig {
        r_policy: policy,
        ..power_config(0.0, 2, ests, reps, 606)
    };
    let err = |e: rffmmd::Error| e.to_string();
    let fixed = run_inconsistency_demo(1.0, 2.0, 3, &[200, 800, 3200], lambda, &base(&["rff-b:3", "rff-u:3"], 2000, RPolicy::Fixed))
        .map_err(err)?;
    let quad = run_inconsistency_demo(1.0, 2.0, 3, &[3200], lambda, &base(&["quad-u"], 100, RPolicy::Fixed)).map_err(err)?;
    let growing =
        run_inconsistency_demo(1.0, 2.0, 3, &[200, 3200], lambda, &base(&["rff-u:1"], 100, RPolicy::LinearInN)).map_err(err)?;

    let mut ok = true;
    let mut parts = vec![format!("lambda={lambda:.5} mass={mass:.4}")];
    for row in &fixed.rows {
        let r = row.reject_rate.unwrap();
        ok &= r <= 0.10;
        parts.push(format!("{}@{}={r:.4}", row.estimator, row.param_value));
    }
    let (q, _) = rate(&quad, "quad-u", 3200.0);
    ok &= q >= 0.8;
    parts.push(format!("quad-u@3200={q:.3}"));
    let (small, _) = rate(&growing, "rff-u:200", 200.0);
    let (large, _) = rate(&growing, "rff-u:3200", 3200.0);
    ok &= large - small >= 0.2;
    parts.push(format!("rff-u:n@200={small:.3} @3200={large:.3}"));
    verdict(ok, parts.join(" "))
}

fn timing() -> Outcome {
    let sizes = [500usize, 1000, 2000, 4000];
    let rec = run_timing_bench(&sizes, &ids(&["quad-u", "rff-u:200", "rff-u:1000"]), 9, 707).map_err(|e| e.to_string())?;
    let times = |est: &str| -> Vec<f64> { rec.rows_for(est).map(|r| r.mean_time_s).collect() };
    let n: Vec<f64> = sizes.iter().map(|&v| v as f64).collect();
    let quad = log_log_slope(&n, &times("quad-u"));
    let rff = log_log_slope(&n, &times("rff-u:200"));
    let ratio = times("rff-u:1000")[1] / times("rff-u:200")[1];
    verdict(
        (1.8..=2.3).contains(&quad) && (0.8..=1.3).contains(&rff) && (3.5..=6.5).contains(&ratio),
        format!("slope quadratic={quad:.3}, slope RFF(R=200)={rff:.3}, time ratio R=1000/R=200 at N=1000 = {ratio:.3}"),
    )
}

fn perturbed_uniform() -> Outcome {
    let norm1 = common::perturbed_normalization_error(1, 3, 2.0);
    let norm2 = common::perturbed_normalization_error(2, 2, 1.5);
    let cdf1 = common::perturbed_cdf_gap(1, 3, 2.0, 100_000, 808);
    let cdf2 = common::perturbed_cdf_gap(2, 2, 1.5, 100_000, 808);
    verdict(
        norm1 < 1e-6 && norm2 < 1e-6 && cdf1 <= 0.02 && cdf2 <= 0.02,
        format!("normalization error d=1 {norm1:.1e}, d=2 {norm2:.1e}; CDF gap d=1 {cdf1:.4}, d=2 {cdf2:.4}"),
    )
}

fn policy() -> Outcome {
    // (n, d, s, n^(4d/(4s+d)), n^(-2/(4s+d))), evaluated independently.
    const TABLE: [(usize, usize, f64, f64, f64); 10] = [
        (256, 1, 1.0, 84.44850628946526, 0.1088188204120155),
        (1000, 1, 0.5, 9999.999999999995, 0.010000000000000002),
        (100, 2, 1.0, 464.15888336127773, 0.2154434690031884),
        (5000, 3, 2.0, 10845.260915228671, 0.21254945670585637),
        (64, 4, 1.0, 4096.0, 0.3535533905932738),
        (10, 1, 3.0, 2.0309176209047357, 0.7017038286703828),
        (2048, 2, 0.25, 676414963.1050572, 0.006200785359250781),
        (777, 5, 1.5, 180015.93199379026, 0.29817340560713557),
        (12345, 1, 10.0, 2.507089643416883, 0.6315606580459336),
        (3, 2, 0.1, 38.940738398300034, 0.4003123183920009),
    ];
    let mut worst = 0.0f64;
    let mut rounding_ok = true;
    for (n, d, s, r_raw, lam) in TABLE {
        let c = theory_parameter_policy(TheoryPolicy::L2Rate { s }, n, d).map_err(|e| e.to_string())?;
        worst = worst.max((c.r_raw - r_raw).abs() / r_raw).max((c.lambda.unwrap() - lam).abs() / lam);
        rounding_ok &= c.r == (r_raw - 1e-6).ceil() as usize;
    }
    let mmd = theory_parameter_policy(TheoryPolicy::Mmd { lambda: None }, 1000, 1).map_err(|e| e.to_string())?;
    verdict(
        worst <= 1e-12 && rounding_ok && mmd.r == 1000,
        format!("max rel err {worst:.2e}, ceilings ok: {rounding_ok}, MMD policy R(1000)={}", mmd.r),
    )
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |name: &str, outcome: Outcome, t0: Instant| {
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {name}  ({d}) [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name}  ({d}) [{secs:.1}s]");
            }
        }
    };
    let t = Instant::now();
    report("type-I error control", type_one_error(), t);
    let t = Instant::now();
    report("small-instance oracle equivalence", oracle_equivalence(), t);
    let t = Instant::now();
    report("U-V gap bound", gap_bound(), t);
    let t = Instant::now();
    report("Gaussian closed-form agreement", gaussian_closed_form(), t);
    let t = Instant::now();
    report("moment identity", moment_identity(), t);
    let t = Instant::now();
    let ests = ["quad-u", "rff-u:10", "rff-u:200", "rff-u:1000"];
    let (matched, mono) = match run_power_sweep(&power_config(0.15, 500, &ests, 600, 909), None) {
        Ok(rec) => power_in_r(&rec),
        Err(e) => (Err(e.to_string()), Err(e.to_string())),
    };
    report("R=200 power match", matched, t);
    report("monotonicity in R", mono, t);
    let t = Instant::now();
    report("inconsistency demonstration", inconsistency(), t);
    let t = Instant::now();
    report("timing scaling", timing(), t);
    let t = Instant::now();
    report("perturbed-uniform correctness", perturbed_uniform(), t);
    let t = Instant::now();
    report("minimax-rate parameter policy", policy(), t);
    println!("{} of 11 criteria failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
