//! Squared-MMD estimators.
//!
//! Quadratic-time V- and U-statistics, their random-feature counterparts, and
//! three sub-quadratic baselines (linear, block and incomplete U-statistics).
//! The kernel-based estimators are written once against [`PairKernel`] so the
//! same code serves direct evaluation and relabeled pooled samples.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{mean_feature_row, FeatureMatrix};
use crate::kernels::{sample_frequencies, KernelSpec};
use crate::sample::{CompensatedSum, RngStream, SampleSet};

/// Block size rule for the block estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockSize {
    Fixed(usize),
    /// `floor(sqrt(n))`, at least 2.
    SqrtN,
}

impl BlockSize {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            BlockSize::Fixed(b) => b,
            BlockSize::SqrtN => ((n as f64).sqrt().floor() as usize).max(2),
        }
    }
}

/// Which statistic a test uses, with its tuning parameter.
///
/// The textual form (also used in configs and CSV output) is one of
/// `quad-b`, `quad-u`, `rff-b:<R>`, `rff-u:<R>`, `linear`, `block:<b>`,
/// `block:sqrt`, `incomplete:<R'>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimatorId {
    QuadB,
    QuadU,
    RffB { r: usize },
    RffU { r: usize },
    Linear,
    Block { b: BlockSize },
    Incomplete { r_prime: usize },
}

impl EstimatorId {
    pub fn is_rff(&self) -> bool {
        matches!(self, EstimatorId::RffB { .. } | EstimatorId::RffU { .. })
    }

    pub fn num_features(&self) -> Option<usize> {
        match self {
            EstimatorId::RffB { r } | EstimatorId::RffU { r } => Some(*r),
            _ => None,
        }
    }

    /// Same estimator with its feature count replaced (no-op for non-RFF).
    pub fn with_features(self, r: usize) -> Self {
        match self {
            EstimatorId::RffB { .. } => EstimatorId::RffB { r },
            EstimatorId::RffU { .. } => EstimatorId::RffU { r },
            other => other,
        }
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorId::QuadB => write!(f, "quad-b"),
            EstimatorId::QuadU => write!(f, "quad-u"),
            EstimatorId::RffB { r } => write!(f, "rff-b:{r}"),
            EstimatorId::RffU { r } => write!(f, "rff-u:{r}"),
            EstimatorId::Linear => write!(f, "linear"),
            EstimatorId::Block { b: BlockSize::SqrtN } => write!(f, "block:sqrt"),
            EstimatorId::Block { b: BlockSize::Fixed(b) } => write!(f, "block:{b}"),
            EstimatorId::Incomplete { r_prime } => write!(f, "incomplete:{r_prime}"),
        }
    }
}

impl FromStr for EstimatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, param) = match s.split_once(':') {
            Some((t, p)) => (t.trim(), Some(p.trim())),
            None => (s.trim(), None),
        };
        let count = |p: Option<&str>| -> Result<usize> {
            let p = p.ok_or_else(|| Error::invalid(format!("estimator `{s}` needs a parameter")))?;
            let v: usize = p
                .parse()
                .map_err(|_| Error::invalid(format!("bad parameter in estimator `{s}`")))?;
            if v == 0 {
                return Err(Error::invalid(format!("parameter of `{s}` must be positive")));
            }
            Ok(v)
        };
        let no_param = |id: EstimatorId| -> Result<EstimatorId> {
            match param {
                None => Ok(id),
                Some(_) => Err(Error::invalid(format!("estimator `{tag}` takes no parameter"))),
            }
        };
        match tag {
            "quad-b" => no_param(EstimatorId::QuadB),
            "quad-u" => no_param(EstimatorId::QuadU),
            "linear" => no_param(EstimatorId::Linear),
            "rff-b" => Ok(EstimatorId::RffB { r: count(param)? }),
            "rff-u" => Ok(EstimatorId::RffU { r: count(param)? }),
            "incomplete" => Ok(EstimatorId::Incomplete { r_prime: count(param)? }),
            "block" => match param {
                Some("sqrt") => Ok(EstimatorId::Block { b: BlockSize::SqrtN }),
                p => Ok(EstimatorId::Block { b: BlockSize::Fixed(count(p)?) }),
            },
            _ => Err(Error::invalid(format!("unknown estimator `{s}`"))),
        }
    }
}

impl TryFrom<String> for EstimatorId {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<EstimatorId> for String {
    fn from(value: EstimatorId) -> String {
        value.to_string()
    }
}

/// Kernel evaluations between the `X` and `Y` parts of a (possibly
/// relabeled) two-sample problem. Indices are within-sample.
pub trait PairKernel {
    fn n1(&self) -> usize;
    fn n2(&self) -> usize;
    fn kappa0(&self) -> f64;
    fn xx(&self, i: usize, j: usize) -> f64;
    fn yy(&self, i: usize, j: usize) -> f64;
    fn xy(&self, i: usize, j: usize) -> f64;
}

struct DirectPairs<'a> {
    x: &'a SampleSet,
    y: &'a SampleSet,
    spec: &'a KernelSpec,
}

impl PairKernel for DirectPairs<'_> {
    fn n1(&self) -> usize {
        self.x.n()
    }
    fn n2(&self) -> usize {
        self.y.n()
    }
    fn kappa0(&self) -> f64 {
        self.spec.kappa0()
    }
    #[inline]
    fn xx(&self, i: usize, j: usize) -> f64 {
        self.spec.eval_unchecked(self.x.row(i), self.x.row(j))
    }
    #[inline]
    fn yy(&self, i: usize, j: usize) -> f64 {
        self.spec.eval_unchecked(self.y.row(i), self.y.row(j))
    }
    #[inline]
    fn xy(&self, i: usize, j: usize) -> f64 {
        self.spec.eval_unchecked(self.x.row(i), self.y.row(j))
    }
}

/// Off-diagonal within-sample sums and the full cross sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSums {
    pub xx_off: f64,
    pub yy_off: f64,
    pub xy: f64,
}

impl QuadSums {
    pub fn biased(&self, n1: usize, n2: usize, kappa0: f64) -> f64 {
        let (a, b) = (n1 as f64, n2 as f64);
        let v = (self.xx_off + a * kappa0) / (a * a) + (self.yy_off + b * kappa0) / (b * b)
            - 2.0 * self.xy / (a * b);
        v.max(0.0)
    }

    pub fn unbiased(&self, n1: usize, n2: usize) -> f64 {
        let (a, b) = (n1 as f64, n2 as f64);
        self.xx_off / (a * (a - 1.0)) + self.yy_off / (b * (b - 1.0)) - 2.0 * self.xy / (a * b)
    }
}

pub fn quad_sums<P: PairKernel>(p: &P) -> QuadSums {
    let (n1, n2) = (p.n1(), p.n2());
    let mut xx = CompensatedSum::default();
    for i in 0..n1 {
        let mut row = 0.0;
        for j in i + 1..n1 {
            row += p.xx(i, j);
        }
        xx.add(2.0 * row);
    }
    let mut yy = CompensatedSum::default();
    for i in 0..n2 {
        let mut row = 0.0;
        for j in i + 1..n2 {
            row += p.yy(i, j);
        }
        yy.add(2.0 * row);
    }
    let mut xy = CompensatedSum::default();
    for i in 0..n1 {
        let mut row = 0.0;
        for j in 0..n2 {
            row += p.xy(i, j);
        }
        xy.add(row);
    }
    QuadSums {
        xx_off: xx.value(),
        yy_off: yy.value(),
        xy: xy.value(),
    }
}

pub fn linear_stat<P: PairKernel>(p: &P) -> Result<f64> {
    let n = equal_sizes(p)?;
    if n % 2 == 1 {
        return Err(Error::OddSampleSize(n));
    }
    let mut acc = CompensatedSum::default();
    for t in 0..n / 2 {
        let (i, j) = (2 * t, 2 * t + 1);
        acc.add(p.xx(i, j) + p.yy(i, j) - p.xy(i, j) - p.xy(j, i));
    }
    Ok(acc.value() / (n / 2) as f64)
}

pub fn block_stat<P: PairKernel>(p: &P, b: usize) -> Result<f64> {
    let n = equal_sizes(p)?;
    if b < 2 || b > n {
        return Err(Error::BadBlockSize { b, n });
    }
    let blocks = n / b;
    let bf = b as f64;
    let mut acc = CompensatedSum::default();
    for q in 0..blocks {
        let lo = q * b;
        let hi = lo + b;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for i in lo..hi {
            for j in i + 1..hi {
                sxx += p.xx(i, j);
                syy += p.yy(i, j);
            }
            for j in lo..hi {
                sxy += p.xy(i, j);
            }
        }
        acc.add((2.0 * sxx + 2.0 * syy) / (bf * (bf - 1.0)) - 2.0 * sxy / (bf * bf));
    }
    Ok(acc.value() / blocks as f64)
}

pub fn incomplete_stat<P: PairKernel>(p: &P, design: &IncompleteDesign) -> Result<f64> {
    let n = equal_sizes(p)?;
    if design.n() != n {
        return Err(Error::invalid(format!(
            "incomplete design built for n = {}, data has n = {n}",
            design.n()
        )));
    }
    let mut acc = CompensatedSum::default();
    for &[i, i2, j, j2] in design.quadruples() {
        let (i, i2, j, j2) = (i as usize, i2 as usize, j as usize, j2 as usize);
        acc.add(p.xx(i, i2) + p.yy(j, j2) - p.xy(i, j2) - p.xy(i2, j));
    }
    Ok(acc.value() / design.len() as f64)
}

fn equal_sizes<P: PairKernel>(p: &P) -> Result<usize> {
    if p.n1() != p.n2() {
        return Err(Error::UnequalSampleSizes { n1: p.n1(), n2: p.n2() });
    }
    if p.n1() < 2 {
        return Err(Error::TooFewSamples { min: 2, got: p.n1() });
    }
    Ok(p.n1())
}

/// Index quadruples `(i, i', j, j')` with `i != i'` and `j != j'` used by the
/// incomplete U-statistic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncompleteDesign {
    n: usize,
    quads: Vec<[u32; 4]>,
}

impl IncompleteDesign {
    /// `r_prime` rounds of `n` quadruples. Each round draws independent
    /// uniform permutations `s` of the `X` indices and `t` of the `Y` indices
    /// and uses `(s[k], s[k+1], t[k], t[k+1])` cyclically, so every index
    /// appears exactly twice per round and each quadruple is a uniform draw
    /// from the full design.
    pub fn sample(n: usize, r_prime: usize, rng: &RngStream) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: n });
        }
        if r_prime == 0 {
            return Err(Error::invalid("incomplete design needs at least one round"));
        }
        let mut g = rng.rng();
        let mut sx: Vec<u32> = (0..n as u32).collect();
        let mut sy = sx.clone();
        let mut quads = Vec::with_capacity(n * r_prime);
        for _ in 0..r_prime {
            sx.shuffle(&mut g);
            sy.shuffle(&mut g);
            for k in 0..n {
                let k2 = (k + 1) % n;
                quads.push([sx[k], sx[k2], sy[k], sy[k2]]);
            }
        }
        Ok(Self { n, quads })
    }

    /// Every admissible quadruple exactly once.
    pub fn complete(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: n });
        }
        let mut quads = Vec::with_capacity(n * n * (n - 1) * (n - 1));
        for i in 0..n as u32 {
            for i2 in (0..n as u32).filter(|&v| v != i) {
                for j in 0..n as u32 {
                    for j2 in (0..n as u32).filter(|&v| v != j) {
                        quads.push([i, i2, j, j2]);
                    }
                }
            }
        }
        Ok(Self { n, quads })
    }

    pub fn from_quadruples(n: usize, quads: Vec<[u32; 4]>) -> Result<Self> {
        if quads.is_empty() {
            return Err(Error::invalid("empty incomplete design"));
        }
        for q in &quads {
            if q.iter().any(|&v| v as usize >= n) || q[0] == q[1] || q[2] == q[3] {
                return Err(Error::invalid(format!("invalid quadruple {q:?} for n = {n}")));
            }
        }
        Ok(Self { n, quads })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn quadruples(&self) -> &[[u32; 4]] {
        &self.quads
    }
}

fn check_dims(x: &SampleSet, y: &SampleSet, spec: &KernelSpec) -> Result<()> {
    for d in [x.d(), y.d()] {
        if d != spec.d() {
            return Err(Error::DimensionMismatch {
                expected: spec.d(),
                got: d,
            });
        }
    }
    Ok(())
}

/// Biased (V-statistic) squared MMD. Quadratic in `n1 + n2`.
pub fn mmd2_biased(x: &SampleSet, y: &SampleSet, spec: &KernelSpec) -> Result<f64> {
    check_dims(x, y, spec)?;
    let p = DirectPairs { x, y, spec };
    Ok(quad_sums(&p).biased(x.n(), y.n(), spec.kappa0()))
}

/// Unbiased (U-statistic) squared MMD. May be negative.
pub fn mmd2_unbiased(x: &SampleSet, y: &SampleSet, spec: &KernelSpec) -> Result<f64> {
    check_dims(x, y, spec)?;
    for n in [x.n(), y.n()] {
        if n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: n });
        }
    }
    let p = DirectPairs { x, y, spec };
    Ok(quad_sums(&p).unbiased(x.n(), y.n()))
}

fn check_width(fx: &FeatureMatrix, fy: &FeatureMatrix) -> Result<()> {
    if fx.width() != fy.width() {
        return Err(Error::FeatureWidthMismatch {
            left: fx.width(),
            right: fy.width(),
        });
    }
    Ok(())
}

/// Squared distance between the mean feature rows.
pub fn rff_mmd2_biased(fx: &FeatureMatrix, fy: &FeatureMatrix) -> Result<f64> {
    check_width(fx, fy)?;
    let (mx, my) = (fx.mean_row(), fy.mean_row());
    Ok(mx.iter().zip(&my).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Random-feature U-statistic from the V-statistic and the squared norms of
/// the mean feature rows (each feature row has squared norm `kappa0`).
pub fn rff_unbiased_from_means(mx: &[f64], my: &[f64], n1: usize, n2: usize, kappa0: f64) -> f64 {
    let (mut v, mut nx, mut ny) = (0.0, 0.0, 0.0);
    for (a, b) in mx.iter().zip(my) {
        v += (a - b) * (a - b);
        nx += a * a;
        ny += b * b;
    }
    let (c1, c2) = (1.0 / (n1 as f64 - 1.0), 1.0 / (n2 as f64 - 1.0));
    v + c1 * nx + c2 * ny - kappa0 * (c1 + c2)
}

pub fn rff_mmd2_unbiased(fx: &FeatureMatrix, fy: &FeatureMatrix, kappa0: f64) -> Result<f64> {
    check_width(fx, fy)?;
    for n in [fx.n(), fy.n()] {
        if n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: n });
        }
    }
    let (mx, my) = (fx.mean_row(), fy.mean_row());
    Ok(rff_unbiased_from_means(&mx, &my, fx.n(), fy.n(), kappa0))
}

/// Linear-time statistic over disjoint consecutive pairs.
pub fn mmd2_linear(x: &SampleSet, y: &SampleSet, spec: &KernelSpec) -> Result<f64> {
    check_dims(x, y, spec)?;
    linear_stat(&DirectPairs { x, y, spec })
}

/// Mean of per-block unbiased statistics over `floor(n / b)` consecutive
/// blocks; trailing rows that do not fill a block are dropped.
pub fn mmd2_block(x: &SampleSet, y: &SampleSet, spec: &KernelSpec, b: usize) -> Result<f64> {
    check_dims(x, y, spec)?;
    block_stat(&DirectPairs { x, y, spec }, b)
}

pub fn mmd2_incomplete(
    x: &SampleSet,
    y: &SampleSet,
    spec: &KernelSpec,
    r_prime: usize,
    rng: &RngStream,
) -> Result<f64> {
    check_dims(x, y, spec)?;
    let p = DirectPairs { x, y, spec };
    let n = equal_sizes(&p)?;
    let design = IncompleteDesign::sample(n, r_prime, rng)?;
    incomplete_stat(&p, &design)
}

pub fn mmd2_incomplete_with_design(
    x: &SampleSet,
    y: &SampleSet,
    spec: &KernelSpec,
    design: &IncompleteDesign,
) -> Result<f64> {
    check_dims(x, y, spec)?;
    incomplete_stat(&DirectPairs { x, y, spec }, design)
}

/// Evaluates `est` once on `(x, y)`. Random-feature statistics draw their
/// frequencies, and the incomplete statistic its design, from `rng`.
pub fn evaluate(est: EstimatorId, x: &SampleSet, y: &SampleSet, spec: &KernelSpec, rng: &RngStream) -> Result<f64> {
    match est {
        EstimatorId::QuadB => mmd2_biased(x, y, spec),
        EstimatorId::QuadU => mmd2_unbiased(x, y, spec),
        EstimatorId::RffB { r } | EstimatorId::RffU { r } => {
            let f = sample_frequencies(spec, r, rng)?;
            let mx = mean_feature_row(x, &f, spec.kappa0())?;
            let my = mean_feature_row(y, &f, spec.kappa0())?;
            match est {
                EstimatorId::RffB { .. } => Ok(mx.iter().zip(&my).map(|(a, b)| (a - b) * (a - b)).sum()),
                _ => {
                    for n in [x.n(), y.n()] {
                        if n < 2 {
                            return Err(Error::TooFewSamples { min: 2, got: n });
                        }
                    }
                    Ok(rff_unbiased_from_means(&mx, &my, x.n(), y.n(), spec.kappa0()))
                }
            }
        }
        EstimatorId::Linear => mmd2_linear(x, y, spec),
        EstimatorId::Block { b } => mmd2_block(x, y, spec, b.resolve(x.n())),
        EstimatorId::Incomplete { r_prime } => mmd2_incomplete(x, y, spec, r_prime, rng),
    }
}
