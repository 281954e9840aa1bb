//! Plug-in functionals of the fitted `g` with heteroskedasticity-robust
//! sandwich standard errors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::dictionary::DictionarySpec;
use crate::error::{Error, Result};
use crate::linalg::{lstsq_multi, with_intercept};
use crate::selection::PdsFit;

/// Two-sided 5% normal critical value.
pub const CRITICAL_VALUE: f64 = 1.959964;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    /// `integral g'(x) dF(x)` against the empirical distribution of `x`.
    AverageDerivative,
    /// `g(x_(hi)) - g(x_(lo))` at empirical quantiles.
    QuantileContrast { lo: f64, hi: f64 },
    /// `g(x0)`.
    PointEval { x0: f64 },
}

impl FunctionalKind {
    /// Short name used in reports: `theta1`, `theta2` or `g_at`.
    pub fn name(&self) -> String {
        match *self {
            FunctionalKind::AverageDerivative => "theta1".into(),
            FunctionalKind::QuantileContrast { lo, hi } if lo == 0.25 && hi == 0.75 => "theta2".into(),
            FunctionalKind::QuantileContrast { lo, hi } => format!("g_q{hi}-g_q{lo}"),
            FunctionalKind::PointEval { x0 } => format!("g({x0})"),
        }
    }
}

/// A linear functional `a(g) = A' beta` of `g(x) = p(x)' beta`.
#[derive(Debug, Clone)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    /// Gradient of the functional with respect to `beta`.
    pub gradient: DVector<f64>,
}

impl FunctionalSpec {
    /// `A_k = (1/n) sum_i p_k'(x_i)`.
    pub fn average_derivative(p_spec: &DictionarySpec, x: &[f64]) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("average derivative over an empty sample".into()));
        }
        let d = p_spec.evaluate_derivative(x)?;
        let gradient = d.row_mean().transpose();
        Ok(Self {
            kind: FunctionalKind::AverageDerivative,
            gradient,
        })
    }

    /// `A = p(x_(hi)) - p(x_(lo))`.
    pub fn quantile_contrast(p_spec: &DictionarySpec, x: &[f64], lo: f64, hi: f64) -> Result<Self> {
        let at = |q| -> Result<DVector<f64>> {
            let xq = empirical_quantile(x, q)?;
            evaluate_row(p_spec, xq)
        };
        let gradient = at(hi)? - at(lo)?;
        Ok(Self {
            kind: FunctionalKind::QuantileContrast { lo, hi },
            gradient,
        })
    }

    /// `A = p(x0)`.
    pub fn point_eval(p_spec: &DictionarySpec, x0: f64) -> Result<Self> {
        Ok(Self {
            kind: FunctionalKind::PointEval { x0 },
            gradient: evaluate_row(p_spec, x0)?,
        })
    }

    /// Builds the gradient for `kind` on the sample `x`.
    pub fn new(kind: FunctionalKind, p_spec: &DictionarySpec, x: &[f64]) -> Result<Self> {
        match kind {
            FunctionalKind::AverageDerivative => Self::average_derivative(p_spec, x),
            FunctionalKind::QuantileContrast { lo, hi } => Self::quantile_contrast(p_spec, x, lo, hi),
            FunctionalKind::PointEval { x0 } => Self::point_eval(p_spec, x0),
        }
    }
}

fn evaluate_row(p_spec: &DictionarySpec, x: f64) -> Result<DVector<f64>> {
    let row = p_spec.evaluate(&DMatrix::from_element(1, 1, x))?;
    Ok(row.row(0).transpose())
}

/// Order statistic `x_(ceil(q n))`, 1-based, without interpolation.
pub fn empirical_quantile(x: &[f64], q: f64) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("quantile of an empty sample".into()));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::ProbabilityDomain(q));
    }
    let n = x.len();
    let r = q * n as f64;
    // q n that is an integer up to rounding must not be pushed up by ceil
    let rank = if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() };
    let rank = (rank as usize).clamp(1, n);
    let mut v = x.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b));
    Ok(*kth)
}

/// `P` minus its least-squares projection on `[1, Q_sel]`.
pub fn residualize_p(p: &DMatrix<f64>, q_sel: &DMatrix<f64>) -> DMatrix<f64> {
    let base = with_intercept(&[q_sel]);
    let coef = lstsq_multi(&base, p).coefficients;
    p - base * coef
}

/// Sandwich pieces for one functional.
#[derive(Debug, Clone)]
pub struct Sandwich {
    pub v_hat: f64,
    pub omega_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `V = A' Omega^{-1} Sigma Omega^{-1} A` with `Omega = W'W/n` and
/// `Sigma = sum_i w_i w_i' e_i^2 / n`.
pub fn sandwich_variance(w: &DMatrix<f64>, residuals: &DVector<f64>, a: &DVector<f64>) -> Result<Sandwich> {
    let (n, k) = w.shape();
    if residuals.len() != n || a.len() != k {
        return Err(Error::Dimension(format!(
            "sandwich: W is {n}x{k}, residuals {}, A {}",
            residuals.len(),
            a.len()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sandwich variance of an empty sample".into()));
    }
    let nf = n as f64;
    let omega_hat = symmetrize(w.tr_mul(w) / nf);
    let mut we = w.clone();
    for (mut row, e) in we.row_iter_mut().zip(residuals.iter()) {
        row *= e.abs();
    }
    let sigma_hat = symmetrize(we.tr_mul(&we) / nf);
    let eig = SymmetricEigen::new(omega_hat.clone());
    let largest = eig.eigenvalues.amax();
    let smallest = eig.eigenvalues.min();
    if !(smallest > 1e-12 * largest.max(f64::MIN_POSITIVE)) || !(largest > 0.0) {
        return Err(Error::SingularOmega { eigenvalue: smallest });
    }
    let ut_a = eig.eigenvectors.tr_mul(a);
    let scaled = DVector::from_fn(k, |j, _| ut_a[j] / eig.eigenvalues[j]);
    let b = &eig.eigenvectors * scaled;
    let v_hat = (b.transpose() * &sigma_hat * &b)[(0, 0)].max(0.0);
    Ok(Sandwich {
        v_hat,
        omega_hat,
        sigma_hat,
    })
}

#[derive(Debug, Clone)]
pub struct InferenceResult {
    pub kind: FunctionalKind,
    pub theta_hat: f64,
    /// Per-observation sandwich variance.
    pub v_hat: f64,
    /// `sqrt(v_hat / n)`.
    pub se: f64,
    /// `theta_hat / se`.
    pub t_stat: f64,
    pub ci95: (f64, f64),
    pub omega_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
}

/// `theta = A' beta_hat` with its sandwich standard error. The treatment
/// block is residualized on the intercept and the fit's control columns; the
/// final least-squares residuals enter `Sigma`.
pub fn functional_estimate(fit: &PdsFit, spec: &FunctionalSpec) -> Result<InferenceResult> {
    if spec.gradient.len() != fit.beta_hat.len() {
        return Err(Error::Dimension(format!(
            "functional has {} terms, fit has {}",
            spec.gradient.len(),
            fit.beta_hat.len()
        )));
    }
    let theta_hat = spec.gradient.dot(&fit.beta_hat);
    let w = residualize_p(&fit.p, &fit.controls);
    let sandwich = sandwich_variance(&w, &fit.residuals, &spec.gradient)?;
    let se = (sandwich.v_hat / fit.n() as f64).sqrt();
    Ok(InferenceResult {
        kind: spec.kind,
        theta_hat,
        v_hat: sandwich.v_hat,
        se,
        t_stat: theta_hat / se,
        ci95: (theta_hat - CRITICAL_VALUE * se, theta_hat + CRITICAL_VALUE * se),
        omega_hat: sandwich.omega_hat,
        sigma_hat: sandwich.sigma_hat,
    })
}

/// Two-sided 5% test of `theta = theta0`.
pub fn rejection_test(res: &InferenceResult, theta0: f64) -> Result<bool> {
    if !(res.se > 0.0) {
        return Err(Error::ZeroStandardError);
    }
    Ok((res.theta_hat - theta0).abs() / res.se > CRITICAL_VALUE)
}
