//! The post-double family and the comparison estimators, sharing one
//! evaluated conditioning dictionary per sample.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::bic::{choose_k_bic, KSelection};
use super::{final_ols, pds_fit, ConditioningSet, PdsFit, SelectionResult};
use crate::dictionary::{build_extended_fs, check_columns, hermite_table, DictionarySpec};
use crate::error::{Error, Result};
use crate::lasso::{penalty_level, LassoTuning, Stage};
use crate::linalg::{select_columns, standardize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Estimator {
    PostDouble,
    PostDoubleSet,
    PostDoubleExt,
    PostDoubleSetExt,
    PostSingleI,
    PostSingleII,
    SeriesI,
    SeriesII,
    Oracle,
}

impl Estimator {
    pub const ALL: [Estimator; 9] = [
        Estimator::PostDouble,
        Estimator::PostDoubleSet,
        Estimator::PostDoubleExt,
        Estimator::PostDoubleSetExt,
        Estimator::PostSingleI,
        Estimator::PostSingleII,
        Estimator::SeriesI,
        Estimator::SeriesII,
        Estimator::Oracle,
    ];

    /// Machine-readable name used in CSV output.
    pub fn id(self) -> &'static str {
        match self {
            Estimator::PostDouble => "post_double",
            Estimator::PostDoubleSet => "post_double_set",
            Estimator::PostDoubleExt => "post_double_ext",
            Estimator::PostDoubleSetExt => "post_double_set_ext",
            Estimator::PostSingleI => "post_single_1",
            Estimator::PostSingleII => "post_single_2",
            Estimator::SeriesI => "series_1",
            Estimator::SeriesII => "series_2",
            Estimator::Oracle => "oracle",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Estimator::PostDouble => "Post-Double",
            Estimator::PostDoubleSet => "Post-Double Set",
            Estimator::PostDoubleExt => "Post-Double Ext",
            Estimator::PostDoubleSetExt => "Post-Double Set+Ext",
            Estimator::PostSingleI => "Post-Single I",
            Estimator::PostSingleII => "Post-Single II",
            Estimator::SeriesI => "Series I",
            Estimator::SeriesII => "Series II",
            Estimator::Oracle => "Oracle",
        }
    }

    /// Whether the estimator needs the true control function.
    pub fn needs_h(self) -> bool {
        self == Estimator::Oracle
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Estimator::ALL
            .into_iter()
            .find(|e| e.id() == key || e.label().to_ascii_lowercase() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown estimator '{s}'")))
    }
}

/// Control set of an unselected series regression.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesControls {
    /// `He_1..He_degree` of every coordinate of `z` separately.
    AdditiveHermite { degree: usize },
    /// Every term of the conditioning dictionary.
    FullDictionary,
    /// The first `c` conditioning terms.
    FirstColumns(usize),
    /// `c` conditioning terms drawn without replacement.
    RandomColumns(usize),
}

/// Everything fixed across estimators for one sample.
#[derive(Debug, Clone)]
pub struct EstimatorPlan {
    /// Number of treatment terms for the fixed-`K` estimators.
    pub k: usize,
    pub q_spec: DictionarySpec,
    /// Candidate degrees for the BIC-driven estimators.
    pub k_grid: Vec<usize>,
    pub series_one: SeriesControls,
    pub series_two: SeriesControls,
    pub tuning: LassoTuning,
}

/// One sample. `h_true` is only needed by the Oracle estimator.
#[derive(Debug, Clone)]
pub struct EstimationData {
    pub x: Vec<f64>,
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
    pub h_true: Option<DVector<f64>>,
}

impl EstimationData {
    pub fn n(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorOutcome {
    pub estimator: Estimator,
    /// Treatment degree of the reported fit.
    pub k: usize,
    pub fit: PdsFit,
    /// Present for the BIC-driven estimators.
    pub k_selection: Option<KSelection>,
}

struct TreatmentBlock {
    raw: DMatrix<f64>,
    standardized: DMatrix<f64>,
}

/// Runs estimators on one sample, caching treatment blocks, selections and
/// post-double fits shared between them.
pub struct Pipeline<'a> {
    data: &'a EstimationData,
    plan: &'a EstimatorPlan,
    conditioning: ConditioningSet,
    treatment: HashMap<usize, TreatmentBlock>,
    first_stage: HashMap<(usize, bool), (Vec<Vec<usize>>, DMatrix<f64>)>,
    reduced_form: HashMap<usize, (Vec<usize>, DVector<f64>)>,
    post_double: HashMap<(usize, bool), PdsFit>,
}

impl<'a> Pipeline<'a> {
    pub fn new(data: &'a EstimationData, plan: &'a EstimatorPlan) -> Result<Self> {
        let n = data.n();
        if n == 0 {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        if data.x.len() != n || data.z.nrows() != n {
            return Err(Error::Dimension(format!(
                "sample rows: y={n}, x={}, z={}",
                data.x.len(),
                data.z.nrows()
            )));
        }
        if plan.k == 0 {
            return Err(Error::InvalidArgument("K must be at least 1".into()));
        }
        let q = plan.q_spec.evaluate(&data.z)?;
        check_columns("Q", &q)?;
        Ok(Self {
            data,
            plan,
            conditioning: ConditioningSet::new(&q)?,
            treatment: HashMap::new(),
            first_stage: HashMap::new(),
            reduced_form: HashMap::new(),
            post_double: HashMap::new(),
        })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        self.conditioning.raw()
    }

    fn n(&self) -> usize {
        self.data.n()
    }

    fn l(&self) -> usize {
        self.conditioning.len()
    }

    fn treatment(&mut self, k: usize) -> Result<&TreatmentBlock> {
        if !self.treatment.contains_key(&k) {
            let x = DMatrix::from_column_slice(self.n(), 1, &self.data.x);
            let raw = DictionarySpec::hermite_univariate(k).evaluate(&x)?;
            let (standardized, _, _) =
                standardize(&raw).map_err(|column| Error::DegenerateColumn { matrix: "P", column })?;
            self.treatment.insert(k, TreatmentBlock { raw, standardized });
        }
        Ok(&self.treatment[&k])
    }

    /// Double selection at degree `k`, optionally with the extended
    /// first-stage dictionary.
    pub fn selection(&mut self, k: usize, extended: bool) -> Result<SelectionResult> {
        let cfg = self.plan.tuning.resolve(k, self.l(), self.n());
        if !self.first_stage.contains_key(&(k, extended)) {
            let p = &self.treatment(k)?.standardized;
            let targets = if extended { build_extended_fs(p) } else { p.clone() };
            let out = self.conditioning.first_stage(&targets, &cfg)?;
            self.first_stage.insert((k, extended), out);
        }
        if !self.reduced_form.contains_key(&k) {
            let out = self.conditioning.reduced_form(&self.data.y, &cfg)?;
            self.reduced_form.insert(k, out);
        }
        let (fs_sets, fs_coefficients) = self.first_stage[&(k, extended)].clone();
        let (rf_set, rf_coefficients) = self.reduced_form[&k].clone();
        Ok(SelectionResult::from_parts(fs_sets, fs_coefficients, rf_set, rf_coefficients))
    }

    /// Post-double fit at degree `k`.
    pub fn post_double(&mut self, k: usize, extended: bool) -> Result<PdsFit> {
        if let Some(fit) = self.post_double.get(&(k, extended)) {
            return Ok(fit.clone());
        }
        let sel = self.selection(k, extended)?;
        let p = self.treatment(k)?.raw.clone();
        let mut fit = pds_fit(&p, self.conditioning.raw(), &self.data.y, &sel)?;
        fit.p_spec = Some(DictionarySpec::hermite_univariate(k));
        self.post_double.insert((k, extended), fit.clone());
        Ok(fit)
    }

    fn bic_search(&mut self, extended: bool) -> Result<(KSelection, PdsFit)> {
        let grid = self.plan.k_grid.clone();
        let selection = choose_k_bic(&grid, |k| self.post_double(k, extended).map(|f| f.bic()))?;
        let fit = self.post_double(selection.k_hat, extended)?;
        Ok((selection, fit))
    }

    fn post_single_one(&mut self, k: usize) -> Result<PdsFit> {
        let sel = self.selection(k, false)?;
        let p = self.treatment(k)?.raw.clone();
        let controls = select_columns(self.conditioning.raw(), &sel.rf_set);
        final_ols(&p, &controls, &self.data.y, sel.rf_set)
    }

    /// Lasso of `y` on the joint dictionary `[P, Q]`; the refit keeps all of
    /// `P` and the selected `Q` terms.
    fn post_single_two(&mut self, k: usize) -> Result<PdsFit> {
        let (n, l) = (self.n(), self.l());
        let cfg = self.plan.tuning.resolve(k, l, n);
        let p_std = self.treatment(k)?.standardized.clone();
        let joint = self.conditioning.design().prepend(&p_std);
        let lambda = penalty_level(n, Stage::ReducedForm, k + l, &cfg)?;
        let target = standardized_target(&self.data.y)?;
        let fit = joint.iterated(&target, lambda, &cfg)?;
        let selected: Vec<usize> = fit.active_set.iter().filter(|&&j| j >= k).map(|&j| j - k).collect();
        let p = self.treatment(k)?.raw.clone();
        let controls = select_columns(self.conditioning.raw(), &selected);
        final_ols(&p, &controls, &self.data.y, selected)
    }

    fn series<R: Rng + ?Sized>(&mut self, k: usize, controls: &SeriesControls, rng: &mut R) -> Result<PdsFit> {
        let l = self.l();
        let (matrix, selected) = match *controls {
            SeriesControls::AdditiveHermite { degree } => (additive_hermite(&self.data.z, degree), Vec::new()),
            SeriesControls::FullDictionary => (self.conditioning.raw().clone(), (0..l).collect()),
            SeriesControls::FirstColumns(c) => {
                let idx: Vec<usize> = (0..c.min(l)).collect();
                (select_columns(self.conditioning.raw(), &idx), idx)
            }
            SeriesControls::RandomColumns(c) => {
                let mut idx = rand::seq::index::sample(rng, l, c.min(l)).into_vec();
                idx.sort_unstable();
                (select_columns(self.conditioning.raw(), &idx), idx)
            }
        };
        let p = self.treatment(k)?.raw.clone();
        final_ols(&p, &matrix, &self.data.y, selected)
    }

    /// Regresses `y - h(z)` on `[1, P]`.
    fn oracle(&mut self, k: usize) -> Result<PdsFit> {
        let h = self
            .data
            .h_true
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("the Oracle estimator needs the true control function".into()))?;
        let target = &self.data.y - h;
        let p = self.treatment(k)?.raw.clone();
        final_ols(&p, &DMatrix::zeros(self.n(), 0), &target, Vec::new())
    }

    /// Runs one estimator. `rng` is only drawn from by random control subsets.
    pub fn estimate<R: Rng + ?Sized>(&mut self, estimator: Estimator, rng: &mut R) -> Result<EstimatorOutcome> {
        let k = self.plan.k;
        let (k, mut fit, k_selection) = match estimator {
            Estimator::PostDouble => (k, self.post_double(k, false)?, None),
            Estimator::PostDoubleExt => (k, self.post_double(k, true)?, None),
            Estimator::PostDoubleSet | Estimator::PostDoubleSetExt => {
                let (sel, fit) = self.bic_search(estimator == Estimator::PostDoubleSetExt)?;
                (sel.k_hat, fit, Some(sel))
            }
            Estimator::PostSingleI => (k, self.post_single_one(k)?, None),
            Estimator::PostSingleII => (k, self.post_single_two(k)?, None),
            Estimator::SeriesI => {
                let controls = self.plan.series_one.clone();
                (k, self.series(k, &controls, rng)?, None)
            }
            Estimator::SeriesII => {
                let controls = self.plan.series_two.clone();
                (k, self.series(k, &controls, rng)?, None)
            }
            Estimator::Oracle => (k, self.oracle(k)?, None),
        };
        fit.p_spec = Some(DictionarySpec::hermite_univariate(k));
        Ok(EstimatorOutcome {
            estimator,
            k,
            fit,
            k_selection,
        })
    }
}

fn standardized_target(y: &DVector<f64>) -> Result<DVector<f64>> {
    let col = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
    let (std, _, _) = standardize(&col).map_err(|_| Error::DegenerateColumn { matrix: "y", column: 0 })?;
    Ok(std.column(0).into_owned())
}

/// `He_1(z_j), ..., He_degree(z_j)` for every column `j`, grouped by column.
fn additive_hermite(z: &DMatrix<f64>, degree: usize) -> DMatrix<f64> {
    let (n, d) = z.shape();
    let mut out = DMatrix::zeros(n, d * degree);
    for j in 0..d {
        for i in 0..n {
            let table = hermite_table(z[(i, j)], degree);
            for m in 1..=degree {
                out[(i, j * degree + m - 1)] = table[m];
            }
        }
    }
    out
}
