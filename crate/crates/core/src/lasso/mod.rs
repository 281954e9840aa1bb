//! Weighted-penalty Lasso
//!
//! ```text
//! min_t  sum_i (y_i - x_i't)^2 + lambda * sum_j |psi_j t_j|
//! ```
//!
//! with Gaussian-quantile penalty levels and iterated, heteroskedasticity
//! aware penalty loadings refined from Post-Lasso residuals.

mod loadings;
mod quantile;
mod solver;

pub use loadings::{initial_loadings, refined_loadings};
pub use quantile::normal_quantile;
pub use solver::{iterated_lasso, kkt_violation, lasso_objective, lasso_solve, post_lasso, LassoDesign};

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Tuning constants for one family of Lasso problems.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoConfig {
    /// Slack constant `c > 1` in the penalty level.
    pub c: f64,
    /// Tail probability `gamma` in the penalty level.
    pub gamma: f64,
    /// Number of penalty-loading rounds (1 = initial loadings only).
    pub n_loadings: usize,
    /// Convergence tolerance on the largest coefficient change in a sweep.
    pub cd_tol: f64,
    pub cd_max_iter: usize,
    pub kkt_tol: f64,
}

impl LassoConfig {
    pub const DEFAULT_C: f64 = 1.1;
    pub const DEFAULT_N_LOADINGS: usize = 15;
    pub const DEFAULT_CD_TOL: f64 = 1e-8;
    pub const DEFAULT_CD_MAX_ITER: usize = 10_000;
    pub const DEFAULT_KKT_TOL: f64 = 1e-6;

    /// `0.1 / log(max{K L, n})`.
    pub fn default_gamma(k: usize, l: usize, n: usize) -> f64 {
        let scale = (k * l).max(n).max(3) as f64;
        0.1 / scale.ln()
    }

    pub fn with_gamma(gamma: f64) -> Self {
        Self {
            c: Self::DEFAULT_C,
            gamma,
            n_loadings: Self::DEFAULT_N_LOADINGS,
            cd_tol: Self::DEFAULT_CD_TOL,
            cd_max_iter: Self::DEFAULT_CD_MAX_ITER,
            kkt_tol: Self::DEFAULT_KKT_TOL,
        }
    }

    /// Defaults for a problem with `k` treatment terms, `l` conditioning
    /// terms and `n` observations.
    pub fn for_problem(k: usize, l: usize, n: usize) -> Self {
        Self::with_gamma(Self::default_gamma(k, l, n))
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.c > 1.0) {
            problems.push(format!("c must exceed 1 (got {})", self.c));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            problems.push(format!("gamma must lie in (0, 1) (got {})", self.gamma));
        }
        if self.n_loadings == 0 {
            problems.push("n_loadings must be at least 1".to_string());
        }
        if !(self.cd_tol > 0.0) {
            problems.push(format!("cd_tol must be positive (got {})", self.cd_tol));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

/// User overrides for the tuning constants; unset fields take the
/// problem-dependent defaults of [`LassoConfig::for_problem`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LassoTuning {
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub n_loadings: Option<usize>,
}

impl LassoTuning {
    pub fn resolve(&self, k: usize, l: usize, n: usize) -> LassoConfig {
        let mut cfg = LassoConfig::for_problem(k, l, n);
        if let Some(c) = self.c {
            cfg.c = c;
        }
        if let Some(gamma) = self.gamma {
            cfg.gamma = gamma;
        }
        if let Some(n_loadings) = self.n_loadings {
            cfg.n_loadings = n_loadings;
        }
        cfg
    }
}

/// A solved weighted-penalty Lasso.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coefficients: DVector<f64>,
    /// Sorted positions of the nonzero coefficients.
    pub active_set: Vec<usize>,
    pub lambda: f64,
    /// Loadings used in the final solve.
    pub loadings: DVector<f64>,
    /// Coordinate-descent sweeps in the final solve.
    pub iterations: usize,
    pub converged: bool,
    /// Loading rounds actually performed.
    pub loading_rounds: usize,
    /// Post-Lasso residuals vanished; loading refinement stopped early.
    pub perfect_fit: bool,
    /// Refined loadings degenerated; the last valid fit was returned.
    pub degenerate_refinement: bool,
}

/// Which selection equation a penalty level is for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// `n_targets` simultaneous first-stage regressions.
    FirstStage { n_targets: usize },
    ReducedForm,
}

impl Stage {
    fn n_targets(self) -> usize {
        match self {
            Stage::FirstStage { n_targets } => n_targets,
            Stage::ReducedForm => 1,
        }
    }
}

/// `2 c sqrt(n) Phi^{-1}(1 - gamma / (2 * n_targets * dict_size))`.
pub fn penalty_level(n: usize, stage: Stage, dict_size: usize, cfg: &LassoConfig) -> Result<f64> {
    let n_targets = stage.n_targets();
    if n < 2 || dict_size == 0 || n_targets == 0 {
        return Err(Error::InvalidArgument(format!(
            "penalty level needs n >= 2 and nonempty dictionaries (n={n}, targets={n_targets}, L={dict_size})"
        )));
    }
    let tail = cfg.gamma / (2.0 * n_targets as f64 * dict_size as f64);
    if tail >= 1.0 || !(tail > 0.0) {
        return Err(Error::PenaltyDomain {
            n_targets,
            dict_size,
            tail,
        });
    }
    Ok(2.0 * cfg.c * (n as f64).sqrt() * normal_quantile(1.0 - tail)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn penalty_level_examples() {
        let cfg = LassoConfig::with_gamma(0.05);
        let rf = penalty_level(100, Stage::ReducedForm, 10, &cfg).unwrap();
        assert!((rf - 22.0 * normal_quantile(0.9975).unwrap()).abs() < 1e-12);
        assert!((rf - 61.755).abs() < 1e-3);

        let fs1 = penalty_level(100, Stage::FirstStage { n_targets: 1 }, 10, &cfg).unwrap();
        assert_eq!(fs1, rf);

        let big = penalty_level(400, Stage::ReducedForm, 10, &cfg).unwrap();
        assert!((big / rf - 2.0).abs() < 1e-14);
    }

    #[test]
    fn penalty_level_rejects_degenerate_tail() {
        let mut cfg = LassoConfig::with_gamma(0.5);
        cfg.gamma = 2.5;
        assert!(matches!(
            penalty_level(100, Stage::ReducedForm, 1, &cfg),
            Err(Error::PenaltyDomain { .. })
        ));
        assert!(penalty_level(1, Stage::ReducedForm, 5, &LassoConfig::with_gamma(0.1)).is_err());
    }

    #[test]
    fn defaults_follow_reference_constants() {
        let cfg = LassoConfig::for_problem(7, 329, 500);
        assert_eq!(cfg.c, 1.1);
        assert_eq!(cfg.n_loadings, 15);
        assert!((cfg.gamma - 0.1 / (2303f64).ln()).abs() < 1e-15);
        assert!(cfg.validate().is_ok());
        let bad = LassoConfig { c: 0.5, gamma: 1.5, ..cfg };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("c must") && msg.contains("gamma"));
    }
}
