//! Cyclic coordinate descent with covariance updates.
//!
//! The Gram matrix `X'X` is formed once per design, so one sweep costs
//! `O(M)` coordinate checks plus `O(M)` per coefficient that moves. Many
//! right-hand sides (first-stage targets, reduced form, loading rounds)
//! share one [`LassoDesign`].

use nalgebra::{DMatrix, DVector};

use super::loadings::{initial_loadings_sq, squared, weighted_rms};
use super::{LassoConfig, LassoFit};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, select_columns};

fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Largest KKT violation given the score vector `grad = X'(y - X t)`.
fn violation_from_score(grad: &DVector<f64>, t: &DVector<f64>, lambda: f64, loadings: &DVector<f64>) -> f64 {
    grad.iter()
        .zip(t.iter())
        .zip(loadings.iter())
        .map(|((&g, &tj), &psi)| {
            if tj != 0.0 {
                (2.0 * g - lambda * psi * tj.signum()).abs()
            } else {
                (2.0 * g.abs() - lambda * psi).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Largest violation of the stationarity conditions
/// `2 X_j'r = lambda psi_j sign(t_j)` (active) and
/// `2 |X_j'r| <= lambda psi_j` (inactive) at `t`.
pub fn kkt_violation(x: &DMatrix<f64>, y: &DVector<f64>, t: &DVector<f64>, lambda: f64, loadings: &DVector<f64>) -> f64 {
    let r = y - x * t;
    violation_from_score(&x.tr_mul(&r), t, lambda, loadings)
}

/// `||y - X t||^2 + lambda sum_j |psi_j t_j|`.
pub fn lasso_objective(x: &DMatrix<f64>, y: &DVector<f64>, t: &DVector<f64>, lambda: f64, loadings: &DVector<f64>) -> f64 {
    let r = y - x * t;
    r.norm_squared() + lambda * t.iter().zip(loadings.iter()).map(|(a, b)| (a * b).abs()).sum::<f64>()
}

/// A design matrix with its cached Gram matrix and elementwise squares.
#[derive(Debug, Clone)]
pub struct LassoDesign {
    x: DMatrix<f64>,
    gram: DMatrix<f64>,
    x_sq: DMatrix<f64>,
}

struct Descent {
    coef: DVector<f64>,
    score: DVector<f64>,
    sweeps: usize,
    converged: bool,
}

impl LassoDesign {
    pub fn new(x: DMatrix<f64>) -> Self {
        let gram = x.transpose() * &x;
        let x_sq = squared(&x);
        Self { x, gram, x_sq }
    }

    /// Design `[extra | X]`, reusing the cached Gram block of `X`.
    pub fn prepend(&self, extra: &DMatrix<f64>) -> LassoDesign {
        let (n, m) = self.x.shape();
        assert_eq!(extra.nrows(), n, "row mismatch when augmenting a design");
        let k = extra.ncols();
        let mut x = DMatrix::zeros(n, k + m);
        x.columns_mut(0, k).copy_from(extra);
        x.columns_mut(k, m).copy_from(&self.x);
        let cross = extra.transpose() * &self.x;
        let mut gram = DMatrix::zeros(k + m, k + m);
        gram.view_mut((0, 0), (k, k)).copy_from(&(extra.transpose() * extra));
        gram.view_mut((0, k), (k, m)).copy_from(&cross);
        gram.view_mut((k, 0), (m, k)).copy_from(&cross.transpose());
        gram.view_mut((k, k), (m, m)).copy_from(&self.gram);
        let x_sq = squared(&x);
        LassoDesign { x, gram, x_sq }
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    fn descend(
        &self,
        xty: &DVector<f64>,
        lambda: f64,
        loadings: &DVector<f64>,
        cfg: &LassoConfig,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Descent {
        let m = self.n_features();
        let mut coef = DVector::zeros(m);
        let mut score = xty.clone();
        let mut sweeps = 0;
        let mut converged = m == 0;
        while !converged && sweeps < cfg.cd_max_iter {
            sweeps += 1;
            let mut max_change = 0.0f64;
            for j in 0..m {
                let gjj = self.gram[(j, j)];
                if gjj <= 0.0 {
                    continue;
                }
                let old = coef[j];
                let updated = soft_threshold(score[j] + gjj * old, 0.5 * lambda * loadings[j]) / gjj;
                if updated != old {
                    let delta = updated - old;
                    score.axpy(-delta, &self.gram.column(j), 1.0);
                    coef[j] = updated;
                    max_change = max_change.max(delta.abs());
                }
            }
            if let Some(trace) = trace.as_deref_mut() {
                // Objective up to the constant y'y.
                let fit = -2.0 * coef.dot(xty) + coef.dot(&(&self.gram * &coef));
                let pen: f64 = coef.iter().zip(loadings.iter()).map(|(a, b)| (a * b).abs()).sum();
                trace.push(fit + lambda * pen);
            }
            converged = max_change <= cfg.cd_tol;
        }
        Descent {
            coef,
            score,
            sweeps,
            converged,
        }
    }

    /// Solves the sign-fixed stationarity system on the active set exactly and
    /// keeps it if it is sign-consistent and reduces the KKT violation.
    fn polish(&self, xty: &DVector<f64>, lambda: f64, loadings: &DVector<f64>, d: &mut Descent) {
        let active: Vec<usize> = (0..d.coef.len()).filter(|&j| d.coef[j] != 0.0).collect();
        if active.is_empty() {
            return;
        }
        let k = active.len();
        let g_aa = DMatrix::from_fn(k, k, |a, b| self.gram[(active[a], active[b])]);
        let rhs = DVector::from_fn(k, |a, _| {
            let j = active[a];
            xty[j] - 0.5 * lambda * loadings[j] * d.coef[j].signum()
        });
        let (sol, _) = lstsq(&g_aa, &rhs);
        let consistent = active
            .iter()
            .zip(sol.iter())
            .all(|(&j, &s)| s != 0.0 && s.signum() == d.coef[j].signum());
        if !consistent {
            return;
        }
        let mut coef = DVector::zeros(d.coef.len());
        let mut score = xty.clone();
        for (&j, &s) in active.iter().zip(sol.iter()) {
            coef[j] = s;
            score.axpy(-s, &self.gram.column(j), 1.0);
        }
        let before = violation_from_score(&d.score, &d.coef, lambda, loadings);
        let after = violation_from_score(&score, &coef, lambda, loadings);
        if after < before {
            d.coef = coef;
            d.score = score;
        }
    }

    /// Solves the Lasso for a precomputed `X'y`. Inputs are assumed valid.
    pub fn solve(&self, xty: &DVector<f64>, lambda: f64, loadings: &DVector<f64>, cfg: &LassoConfig) -> LassoFit {
        let mut d = self.descend(xty, lambda, loadings, cfg, None);
        self.polish(xty, lambda, loadings, &mut d);
        let active_set = (0..d.coef.len()).filter(|&j| d.coef[j] != 0.0).collect();
        LassoFit {
            coefficients: d.coef,
            active_set,
            lambda,
            loadings: loadings.clone(),
            iterations: d.sweeps,
            converged: d.converged,
            loading_rounds: 1,
            perfect_fit: false,
            degenerate_refinement: false,
        }
    }

    #[cfg(test)]
    pub(crate) fn objective_trace(&self, y: &DVector<f64>, lambda: f64, loadings: &DVector<f64>, cfg: &LassoConfig) -> Vec<f64> {
        let mut trace = Vec::new();
        let xty = self.x.tr_mul(y);
        self.descend(&xty, lambda, loadings, cfg, Some(&mut trace));
        trace
    }

    /// OLS on the active columns; zeros elsewhere.
    pub fn post_lasso(&self, y: &DVector<f64>, active: &[usize]) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_features());
        if active.is_empty() {
            return out;
        }
        let (b, _) = lstsq(&select_columns(&self.x, active), y);
        for (&j, v) in active.iter().zip(b.iter()) {
            out[j] = *v;
        }
        out
    }

    fn post_lasso_residuals(&self, y: &DVector<f64>, active: &[usize]) -> DVector<f64> {
        if active.is_empty() {
            return y.clone();
        }
        let xa = select_columns(&self.x, active);
        let (b, _) = lstsq(&xa, y);
        y - xa * b
    }

    /// Lasso with iterated penalty loadings: initial loadings from the demeaned
    /// target, then up to `n_loadings - 1` refinements from Post-Lasso
    /// residuals. Loadings depend on the fit only through its active set, so
    /// a repeated active set is a fixed point and ends the iteration.
    pub fn iterated(&self, target: &DVector<f64>, lambda: f64, cfg: &LassoConfig) -> Result<LassoFit> {
        let xty = self.x.tr_mul(target);
        let loadings = initial_loadings_sq(&self.x_sq, target)?;
        let mut fit = self.solve(&xty, lambda, &loadings, cfg);
        let mean = target.mean();
        let scale = (target.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / target.len() as f64).sqrt();
        for round in 2..=cfg.n_loadings {
            let resid = self.post_lasso_residuals(target, &fit.active_set);
            if resid.amax() < 1e-12 * scale {
                fit.perfect_fit = true;
                break;
            }
            let loadings = match weighted_rms(&self.x_sq, &resid.map(|r| r * r)) {
                Ok(l) => l,
                Err(_) => {
                    fit.degenerate_refinement = true;
                    break;
                }
            };
            let next = self.solve(&xty, lambda, &loadings, cfg);
            let fixed_point = next.active_set == fit.active_set;
            fit = LassoFit {
                loading_rounds: round,
                ..next
            };
            if fixed_point {
                break;
            }
        }
        Ok(fit)
    }
}

fn validate(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, loadings: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!("X has {} rows, y has {}", x.nrows(), y.len())));
    }
    if loadings.len() != x.ncols() {
        return Err(Error::Dimension(format!(
            "X has {} columns, loadings has {}",
            x.ncols(),
            loadings.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative (got {lambda})")));
    }
    if let Some(index) = loadings.iter().position(|&l| !(l > 0.0)) {
        return Err(Error::DegenerateLoading { index });
    }
    Ok(())
}

/// Solves the weighted-penalty Lasso from a zero start with a fixed cyclic
/// coordinate order. Non-convergence is reported through
/// [`LassoFit::converged`].
pub fn lasso_solve(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    loadings: &DVector<f64>,
    cfg: &LassoConfig,
) -> Result<LassoFit> {
    validate(x, y, lambda, loadings)?;
    let design = LassoDesign::new(x.clone());
    Ok(design.solve(&x.tr_mul(y), lambda, loadings, cfg))
}

/// Least squares on `active_set` columns (pseudo-inverse), zeros elsewhere.
pub fn post_lasso(x: &DMatrix<f64>, y: &DVector<f64>, active_set: &[usize]) -> DVector<f64> {
    let mut out = DVector::zeros(x.ncols());
    if active_set.is_empty() {
        return out;
    }
    let (b, _) = lstsq(&select_columns(x, active_set), y);
    for (&j, v) in active_set.iter().zip(b.iter()) {
        out[j] = *v;
    }
    out
}

/// Iterated-loading Lasso of `target` on `q` at penalty level `lambda`.
pub fn iterated_lasso(q: &DMatrix<f64>, target: &DVector<f64>, lambda: f64, cfg: &LassoConfig) -> Result<LassoFit> {
    if q.nrows() != target.len() {
        return Err(Error::Dimension(format!("Q has {} rows, target has {}", q.nrows(), target.len())));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be nonnegative (got {lambda})")));
    }
    LassoDesign::new(q.clone()).iterated(target, lambda, cfg)
}
