//! Closed-form population quantities for Gaussian pairs under the Gaussian
//! product kernel.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// `N(mu_x, sigma)` vs `N(mu_y, sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    mu_x: DVector<f64>,
    mu_y: DVector<f64>,
    sigma: DMatrix<f64>,
}

impl GaussianPair {
    pub fn new(mu_x: Vec<f64>, mu_y: Vec<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        let d = mu_x.len();
        if mu_y.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mu_y.len() });
        }
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: sigma.nrows() });
        }
        let asym = (&sigma - sigma.transpose()).abs().max();
        if asym > 1e-12 * sigma.abs().max().max(1.0) || sigma.clone().cholesky().is_none() {
            return Err(Error::SingularMatrix);
        }
        Ok(Self {
            mu_x: DVector::from_vec(mu_x),
            mu_y: DVector::from_vec(mu_y),
            sigma,
        })
    }

    /// Identity covariance.
    pub fn isotropic(mu_x: Vec<f64>, mu_y: Vec<f64>) -> Result<Self> {
        let d = mu_x.len();
        Self::new(mu_x, mu_y, DMatrix::identity(d, d))
    }

    pub fn d(&self) -> usize {
        self.mu_x.len()
    }

    pub fn mu_x(&self) -> &DVector<f64> {
        &self.mu_x
    }

    pub fn mu_y(&self) -> &DVector<f64> {
        &self.mu_y
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn gap(&self) -> DVector<f64> {
        &self.mu_x - &self.mu_y
    }
}

fn check_spec(d: usize, spec: &KernelSpec) -> Result<()> {
    if spec.d() != d {
        return Err(Error::DimensionMismatch { expected: d, got: spec.d() });
    }
    Ok(())
}

/// `cov + diag(lambda^2 / 4)`: returns `(gap' A^-1 gap / 4, |A|)`.
fn quad_form(gap: &DVector<f64>, cov: &DMatrix<f64>, spec: &KernelSpec) -> Result<(f64, f64)> {
    let mut a = cov.clone();
    for (i, l) in spec.lambda().iter().enumerate() {
        a[(i, i)] += l * l / 4.0;
    }
    let chol = a.cholesky().ok_or(Error::SingularMatrix)?;
    let q = gap.dot(&chol.solve(gap)) / 4.0;
    Ok((q, chol.determinant()))
}

/// Squared MMD between `N(mean_a, cov)` and `N(mean_b, cov)`.
pub fn gaussian_mmd2_same_cov(
    mean_a: &DVector<f64>,
    mean_b: &DVector<f64>,
    cov: &DMatrix<f64>,
    spec: &KernelSpec,
) -> Result<f64> {
    let d = mean_a.len();
    check_spec(d, spec)?;
    let (q, det) = quad_form(&(mean_a - mean_b), cov, spec)?;
    Ok(2.0 * (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0) * (-(-q).exp_m1()) / det.sqrt())
}

pub fn gaussian_mmd2_closed_form(pair: &GaussianPair, spec: &KernelSpec) -> Result<f64> {
    gaussian_mmd2_same_cov(&pair.mu_x, &pair.mu_y, &pair.sigma, spec)
}

/// `E_w[(E[U_1 | w])^2]` written with differences of independent copies:
/// `2k0 MMD^2(X-X', X''-Y) + 2k0 MMD^2(Y-Y', X-Y'') - k0 MMD^2(X+X', Y+Y')`.
pub fn moment_identity_difference_form(pair: &GaussianPair, spec: &KernelSpec) -> Result<f64> {
    let k0 = spec.kappa0();
    let cov2 = &pair.sigma * 2.0;
    let zero = DVector::zeros(pair.d());
    let xy = &pair.mu_x - &pair.mu_y;
    let yx = &pair.mu_y - &pair.mu_x;
    let a = gaussian_mmd2_same_cov(&zero, &(-&yx), &cov2, spec)?; // X - X' vs X'' - Y
    let b = gaussian_mmd2_same_cov(&zero, &xy, &cov2, spec)?; // Y - Y' vs X - Y''
    let c = gaussian_mmd2_same_cov(&(&pair.mu_x * 2.0), &(&pair.mu_y * 2.0), &cov2, spec)?;
    Ok(2.0 * k0 * a + 2.0 * k0 * b - k0 * c)
}

/// The same quantity written with sums of independent copies:
/// `2k0 MMD^2(X+X', X''+Y) + 2k0 MMD^2(Y+Y', X+Y'') - k0 MMD^2(X+X', Y+Y')`.
pub fn moment_identity_sum_form(pair: &GaussianPair, spec: &KernelSpec) -> Result<f64> {
    let k0 = spec.kappa0();
    let cov2 = &pair.sigma * 2.0;
    let xx = &pair.mu_x * 2.0;
    let yy = &pair.mu_y * 2.0;
    let xy = &pair.mu_x + &pair.mu_y;
    let a = gaussian_mmd2_same_cov(&xx, &xy, &cov2, spec)?;
    let b = gaussian_mmd2_same_cov(&yy, &xy, &cov2, spec)?;
    let c = gaussian_mmd2_same_cov(&xx, &yy, &cov2, spec)?;
    Ok(2.0 * k0 * a + 2.0 * k0 * b - k0 * c)
}

/// `4 k0 MMD^2(Z1, Z2) - k0 MMD^2(Z3, Z4)` with `Z1 ~ N(0, 2S)`,
/// `Z2 ~ N(mu_x - mu_y, 2S)`, `Z3 ~ N(2 mu_x, 2S)`, `Z4 ~ N(2 mu_y, 2S)`.
pub fn moment_identity_rhs(pair: &GaussianPair, spec: &KernelSpec) -> Result<f64> {
    let k0 = spec.kappa0();
    let cov2 = &pair.sigma * 2.0;
    let z1 = DVector::zeros(pair.d());
    let z2 = pair.gap();
    let m12 = gaussian_mmd2_same_cov(&z1, &z2, &cov2, spec)?;
    let m34 = gaussian_mmd2_same_cov(&(&pair.mu_x * 2.0), &(&pair.mu_y * 2.0), &cov2, spec)?;
    Ok(4.0 * k0 * m12 - k0 * m34)
}

/// `E[U_1 | w] = 2 k0 exp(-w' S w) (1 - cos(w' (mu_x - mu_y)))` for a single
/// frequency `w`.
pub fn conditional_u1_mean(pair: &GaussianPair, omega: &[f64], kappa0: f64) -> Result<f64> {
    if omega.len() != pair.d() {
        return Err(Error::DimensionMismatch { expected: pair.d(), got: omega.len() });
    }
    let w = DVector::from_column_slice(omega);
    let damp = (-w.dot(&(&pair.sigma * &w))).exp();
    Ok(2.0 * kappa0 * damp * (1.0 - w.dot(&pair.gap()).cos()))
}

/// `f(s) = 3 + 2 e^-s + e^-2s`.
pub fn moment_f(s: f64) -> f64 {
    3.0 + 2.0 * (-s).exp() + (-2.0 * s).exp()
}

/// `g(s) = (1 - e^-s)^2`.
pub fn moment_g(s: f64) -> f64 {
    let e = -(-s).exp_m1();
    e * e
}

/// `f(s_a) g(s_a) / g(s_b)`; zero when `s_a = 0`.
pub fn scalar_ratio(s_a: f64, s_b: f64) -> f64 {
    if s_a == 0.0 {
        return 0.0;
    }
    moment_f(s_a) * moment_g(s_a) / moment_g(s_b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRatio {
    /// `moment_identity_rhs / MMD^4`.
    pub ratio: f64,
    /// `gap' (2S + D)^-1 gap / 4`.
    pub s_a: f64,
    /// `gap' (S + D)^-1 gap / 4`.
    pub s_b: f64,
    /// `f(s_a) g(s_a) / g(s_b)`, at most 6.
    pub scalar: f64,
    /// `6 C2 / C3`, the bound implied for `ratio`.
    pub bound: f64,
}

pub fn moment_ratio_bound_check(pair: &GaussianPair, spec: &KernelSpec) -> Result<MomentRatio> {
    let gap = pair.gap();
    if gap.iter().all(|&v| v == 0.0) {
        return Err(Error::DegeneratePair);
    }
    check_spec(pair.d(), spec)?;
    let d = pair.d() as f64;
    let (s_a, det_a) = quad_form(&gap, &(&pair.sigma * 2.0), spec)?;
    let (s_b, det_b) = quad_form(&gap, &pair.sigma, spec)?;
    let scale = 2.0 * (4.0 * std::f64::consts::PI).powf(-d / 2.0);
    let c2 = spec.kappa0() * scale / det_a.sqrt();
    let c3 = (scale / det_b.sqrt()).powi(2);
    let mmd2 = gaussian_mmd2_closed_form(pair, spec)?;
    Ok(MomentRatio {
        ratio: moment_identity_rhs(pair, spec)? / (mmd2 * mmd2),
        s_a,
        s_b,
        scalar: scalar_ratio(s_a, s_b),
        bound: 6.0 * c2 / c3,
    })
}
