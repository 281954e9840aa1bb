//! Post-double selection: first-stage Lasso of every treatment term on the
//! conditioning dictionary, reduced-form Lasso of the outcome, the union of
//! both selections, and the final least-squares refit. Also the data-driven
//! choice of `K` and the comparison estimators.

mod bic;
mod estimators;

pub use bic::{bic, choose_from_bic, choose_k_bic, floor_cube_root, floor_fourth_root, k_grid, KSelection};
pub use estimators::{EstimationData, Estimator, EstimatorOutcome, EstimatorPlan, Pipeline, SeriesControls};

use nalgebra::{DMatrix, DVector};

use crate::dictionary::DictionarySpec;
use crate::error::{Error, Result};
use crate::lasso::{penalty_level, LassoConfig, LassoDesign, Stage};
use crate::linalg::{lstsq, select_columns, standardize, with_intercept};

/// Selected conditioning terms from both selection equations.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    /// `I_k` for every first-stage target.
    pub fs_sets: Vec<Vec<usize>>,
    /// `L x K'` Post-Lasso first-stage coefficients in the units of `Q`.
    pub fs_coefficients: DMatrix<f64>,
    pub rf_set: Vec<usize>,
    /// Post-Lasso reduced-form coefficients in the units of `Q`.
    pub rf_coefficients: DVector<f64>,
    /// Sorted union of every first-stage set and the reduced-form set.
    pub union_set: Vec<usize>,
}

impl SelectionResult {
    pub fn from_parts(
        fs_sets: Vec<Vec<usize>>,
        fs_coefficients: DMatrix<f64>,
        rf_set: Vec<usize>,
        rf_coefficients: DVector<f64>,
    ) -> Self {
        let mut union_set: Vec<usize> = fs_sets.iter().flatten().chain(rf_set.iter()).copied().collect();
        union_set.sort_unstable();
        union_set.dedup();
        Self {
            fs_sets,
            fs_coefficients,
            rf_set,
            rf_coefficients,
            union_set,
        }
    }

    /// Single selection: only the reduced-form terms are kept.
    pub fn reduced_form_only(&self) -> Vec<usize> {
        self.rf_set.clone()
    }
}

/// A conditioning dictionary prepared for repeated Lasso selection: the raw
/// matrix is kept for refits, a centered unit-sd copy (with its Gram matrix)
/// drives every Lasso.
#[derive(Debug, Clone)]
pub struct ConditioningSet {
    raw: DMatrix<f64>,
    design: LassoDesign,
    scales: Vec<f64>,
}

impl ConditioningSet {
    pub fn new(q: &DMatrix<f64>) -> Result<Self> {
        let (std, _, scales) = standardize(q).map_err(|column| Error::DegenerateColumn { matrix: "Q", column })?;
        Ok(Self {
            raw: q.clone(),
            design: LassoDesign::new(std),
            scales,
        })
    }

    pub fn raw(&self) -> &DMatrix<f64> {
        &self.raw
    }

    pub fn design(&self) -> &LassoDesign {
        &self.design
    }

    pub fn len(&self) -> usize {
        self.raw.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.ncols() == 0
    }

    pub fn n(&self) -> usize {
        self.raw.nrows()
    }

    /// Iterated Lasso of one target; returns the active set and Post-Lasso
    /// coefficients expressed in the units of the raw dictionary.
    fn select(&self, target: &DVector<f64>, lambda: f64, cfg: &LassoConfig) -> Result<(Vec<usize>, DVector<f64>)> {
        let col = DMatrix::from_column_slice(target.len(), 1, target.as_slice());
        let (std, _, sd) = standardize(&col).map_err(|_| Error::DegenerateColumn {
            matrix: "target",
            column: 0,
        })?;
        let std = std.column(0).into_owned();
        let fit = self.design.iterated(&std, lambda, cfg)?;
        let post = self.design.post_lasso(&std, &fit.active_set);
        let coef = DVector::from_fn(self.len(), |j, _| post[j] * sd[0] / self.scales[j]);
        Ok((fit.active_set, coef))
    }

    /// First-stage selection for every column of `targets` at the common
    /// penalty level for `targets.ncols()` simultaneous regressions.
    pub fn first_stage(&self, targets: &DMatrix<f64>, cfg: &LassoConfig) -> Result<(Vec<Vec<usize>>, DMatrix<f64>)> {
        check_rows(self.n(), targets.nrows())?;
        let k = targets.ncols();
        if k == 0 {
            return Err(Error::InvalidArgument("first stage needs at least one target".into()));
        }
        let lambda = penalty_level(self.n(), Stage::FirstStage { n_targets: k }, self.len(), cfg)?;
        let mut sets = Vec::with_capacity(k);
        let mut coefficients = DMatrix::zeros(self.len(), k);
        for (target, col) in targets.column_iter().enumerate() {
            let (set, coef) = self
                .select(&col.into_owned(), lambda, cfg)
                .map_err(|e| Error::FirstStage {
                    target,
                    source: Box::new(e),
                })?;
            coefficients.set_column(target, &coef);
            sets.push(set);
        }
        Ok((sets, coefficients))
    }

    pub fn reduced_form(&self, y: &DVector<f64>, cfg: &LassoConfig) -> Result<(Vec<usize>, DVector<f64>)> {
        check_rows(self.n(), y.len())?;
        let lambda = penalty_level(self.n(), Stage::ReducedForm, self.len(), cfg)?;
        self.select(y, lambda, cfg)
    }

    /// Both selection steps and their union.
    pub fn double_select(&self, targets: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Result<SelectionResult> {
        let (fs_sets, fs_coefficients) = self.first_stage(targets, cfg)?;
        let (rf_set, rf_coefficients) = self.reduced_form(y, cfg)?;
        Ok(SelectionResult::from_parts(fs_sets, fs_coefficients, rf_set, rf_coefficients))
    }
}

fn check_rows(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::Dimension(format!("expected {expected} rows, got {got}")));
    }
    Ok(())
}

/// Lasso of every column of `p_fs` on `q` at the first-stage penalty level.
pub fn first_stage_select(p_fs: &DMatrix<f64>, q: &DMatrix<f64>, cfg: &LassoConfig) -> Result<(Vec<Vec<usize>>, DMatrix<f64>)> {
    ConditioningSet::new(q)?.first_stage(p_fs, cfg)
}

/// Lasso of `y` on `q` at the reduced-form penalty level.
pub fn reduced_form_select(q: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Result<(Vec<usize>, DVector<f64>)> {
    ConditioningSet::new(q)?.reduced_form(y, cfg)
}

/// Final least-squares fit of `y` on `[1, P, controls]`.
#[derive(Debug, Clone)]
pub struct PdsFit {
    /// Coefficients on the columns of `P`.
    pub beta_hat: DVector<f64>,
    /// Intercept followed by the coefficients on the control columns.
    pub eta_hat: DVector<f64>,
    /// Indices of the conditioning terms used as controls.
    pub selected: Vec<usize>,
    pub residuals: DVector<f64>,
    /// Treatment dictionary evaluated at the sample (unscaled).
    pub p: DMatrix<f64>,
    /// Control columns used in the refit (unscaled).
    pub controls: DMatrix<f64>,
    /// Dictionary behind `P`, when known; `g_hat(x) = p(x)'beta_hat`.
    pub p_spec: Option<DictionarySpec>,
    /// The refit needed the minimum-norm pseudo-inverse solution.
    pub rank_deficient: bool,
}

impl PdsFit {
    pub fn intercept(&self) -> f64 {
        self.eta_hat[0]
    }

    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn rss(&self) -> f64 {
        self.residuals.norm_squared()
    }

    /// Columns in the refit, intercept included.
    pub fn n_regressors(&self) -> usize {
        1 + self.p.ncols() + self.controls.ncols()
    }

    /// Gaussian-likelihood BIC of the refit.
    pub fn bic(&self) -> f64 {
        bic(self.rss(), self.n(), self.n_regressors())
    }

    /// `p(x)'beta_hat`; `None` when the dictionary is unknown.
    pub fn g_hat(&self, x: f64) -> Option<f64> {
        let spec = self.p_spec.as_ref()?;
        let row = spec.evaluate(&DMatrix::from_element(1, 1, x)).ok()?;
        Some(row.row(0).transpose().dot(&self.beta_hat))
    }
}

/// Least squares of `y` on `[1, P, controls]`, minimum-norm when singular.
pub fn final_ols(p: &DMatrix<f64>, controls: &DMatrix<f64>, y: &DVector<f64>, selected: Vec<usize>) -> Result<PdsFit> {
    let n = y.len();
    if p.nrows() != n || controls.nrows() != n {
        return Err(Error::Dimension(format!(
            "refit rows: y={n}, P={}, controls={}",
            p.nrows(),
            controls.nrows()
        )));
    }
    let design = with_intercept(&[p, controls]);
    let (coef, rank_deficient) = lstsq(&design, y);
    let residuals = y - &design * &coef;
    let k = p.ncols();
    let mut eta_hat = DVector::zeros(1 + controls.ncols());
    eta_hat[0] = coef[0];
    eta_hat.rows_mut(1, controls.ncols()).copy_from(&coef.rows(1 + k, controls.ncols()));
    Ok(PdsFit {
        beta_hat: coef.rows(1, k).into_owned(),
        eta_hat,
        selected,
        residuals,
        p: p.clone(),
        controls: controls.clone(),
        p_spec: None,
        rank_deficient,
    })
}

/// Post-double refit: `y` on `[1, P, Q[union]]`.
pub fn pds_fit(p: &DMatrix<f64>, q: &DMatrix<f64>, y: &DVector<f64>, sel: &SelectionResult) -> Result<PdsFit> {
    if let Some(&bad) = sel.union_set.iter().find(|&&j| j >= q.ncols()) {
        return Err(Error::Dimension(format!("selected index {bad} outside Q with {} columns", q.ncols())));
    }
    final_ols(p, &select_columns(q, &sel.union_set), y, sel.union_set.clone())
}
