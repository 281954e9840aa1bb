//! The `fit` command: post-double-selection estimates on a CSV dataset.

use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use pds_core::dictionary::DictionarySpec;
use pds_core::inference::{functional_estimate, FunctionalSpec};
use pds_core::montecarlo::DEFAULT_FUNCTIONALS;
use pds_core::selection::{
    floor_cube_root, floor_fourth_root, k_grid, EstimatorPlan, KSelection, Pipeline, SeriesControls,
};
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use crate::config::{FitConfig, FitSectionEcho, KMode, LassoEcho, QKind, ResolvedEcho};
use crate::data::{load_csv, ColumnSpec, Dataset};

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub config: FitEcho,
    pub data: DataSummary,
    pub estimates: Vec<EstimateReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitEcho {
    pub fit: FitSectionEcho,
    pub lasso: LassoEcho,
    pub resolved: ResolvedEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct DataSummary {
    pub input: String,
    pub n: usize,
    /// Rows dropped for missing values.
    pub dropped: usize,
    pub y: String,
    pub x: String,
    pub z: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub label: String,
    pub k: usize,
    /// Size of the conditioning dictionary.
    pub l: usize,
    pub rank_deficient: bool,
    /// Conditioning terms used as controls, by index and by name.
    pub selected_index: Vec<usize>,
    pub selected: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_selection: Option<KSelectionReport>,
    pub functionals: Vec<FunctionalReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KSelectionReport {
    pub grid: Vec<usize>,
    pub k_bic: usize,
    pub k_hat: usize,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub k: usize,
    /// Absent when the fit at this degree failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bic: Option<f64>,
}

impl From<&KSelection> for KSelectionReport {
    fn from(s: &KSelection) -> Self {
        Self {
            grid: s.candidates.iter().map(|c| c.0).collect(),
            k_bic: s.k_bic,
            k_hat: s.k_hat,
            candidates: s.candidates.iter().map(|&(k, bic)| Candidate { k, bic }).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalReport {
    pub name: String,
    pub theta_hat: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub t_stat: f64,
}

/// Degree of the fixed-`K` estimators. Under BIC it applies only to
/// estimators outside the BIC search.
pub fn fixed_degree(mode: KMode, n: usize) -> usize {
    match mode {
        KMode::Fixed(k) => k,
        KMode::AutoN14 => floor_fourth_root(n).max(1),
        KMode::AutoN13 | KMode::Bic => floor_cube_root(n).max(1),
    }
}

/// Conditioning dictionary over the `d` controls and its tensor degree.
pub fn conditioning_dictionary(cfg: &FitConfig, d: usize, k: usize) -> (DictionarySpec, Option<usize>) {
    match cfg.q_kind {
        QKind::Raw => (DictionarySpec::raw(d), None),
        QKind::Tensor => {
            let degree = cfg.q_degree.unwrap_or(k);
            (DictionarySpec::hermite_tensor(d, degree), Some(degree))
        }
    }
}

pub fn fit_plan(cfg: &FitConfig, data: &Dataset) -> (EstimatorPlan, Option<usize>) {
    let n = data.n();
    let k = fixed_degree(cfg.k_mode, n);
    let (q_spec, q_degree) = conditioning_dictionary(cfg, data.z.ncols(), k);
    let plan = EstimatorPlan {
        k,
        q_spec,
        k_grid: k_grid(n),
        series_one: SeriesControls::AdditiveHermite { degree: k },
        series_two: SeriesControls::FullDictionary,
        tuning: cfg.lasso.clone(),
    };
    (plan, q_degree)
}

pub fn run_fit(cfg: &FitConfig) -> Result<FitReport> {
    let spec = ColumnSpec {
        y: cfg.y.clone(),
        x: cfg.x.clone(),
        z: cfg.z.clone(),
    };
    let data = load_csv(&cfg.input, &spec)?;
    let (plan, q_degree) = fit_plan(cfg, &data);
    let l = plan.q_spec.n_terms();
    let q_labels = plan.q_spec.term_labels(&data.z_names);
    let estimation = data.estimation_data();
    let mut pipeline = Pipeline::new(&estimation, &plan)?;
    let mut rng = StdRng::seed_from_u64(cfg.seed);

    let mut estimates = Vec::new();
    for estimator in cfg.estimator_list() {
        let outcome = pipeline
            .estimate(estimator, &mut rng)
            .with_context(|| format!("{estimator} failed"))?;
        let p_spec = DictionarySpec::hermite_univariate(outcome.k);
        let mut functionals = Vec::new();
        for kind in DEFAULT_FUNCTIONALS {
            let fspec = FunctionalSpec::new(kind, &p_spec, &data.x)?;
            let res = functional_estimate(&outcome.fit, &fspec)
                .with_context(|| format!("{estimator}: inference on {} failed", kind.name()))?;
            functionals.push(FunctionalReport {
                name: kind.name(),
                theta_hat: res.theta_hat,
                se: res.se,
                ci_lower: res.ci95.0,
                ci_upper: res.ci95.1,
                t_stat: res.t_stat,
            });
        }
        let selected = &outcome.fit.selected;
        estimates.push(EstimateReport {
            estimator: estimator.id().to_string(),
            label: estimator.label().to_string(),
            k: outcome.k,
            l,
            rank_deficient: outcome.fit.rank_deficient,
            selected_index: selected.clone(),
            selected: selected.iter().map(|&j| q_labels[j].clone()).collect(),
            k_selection: outcome.k_selection.as_ref().map(KSelectionReport::from),
            functionals,
        });
    }

    let reported_k = estimates.first().map_or(plan.k, |e| e.k);
    Ok(FitReport {
        config: FitEcho {
            fit: FitSectionEcho::new(cfg, &data.z_names, q_degree),
            lasso: LassoEcho::new(&cfg.lasso),
            resolved: ResolvedEcho::new(&cfg.lasso, reported_k, l, data.n()),
        },
        data: DataSummary {
            input: cfg.input.display().to_string(),
            n: data.n(),
            dropped: data.dropped,
            y: cfg.y.clone(),
            x: cfg.x.clone(),
            z: data.z_names.clone(),
        },
        estimates,
    })
}

impl FitReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("fit report serializes")
    }

    /// Plain-text summary for the terminal.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let d = &self.data;
        let _ = writeln!(
            s,
            "{}: n = {} ({} rows dropped for missing values), {} controls",
            d.input,
            d.n,
            d.dropped,
            d.z.len()
        );
        for e in &self.estimates {
            let _ = writeln!(s);
            let _ = writeln!(s, "{} (K = {}, L = {})", e.label, e.k, e.l);
            if let Some(sel) = &e.k_selection {
                let bics: Vec<String> = sel
                    .candidates
                    .iter()
                    .map(|c| match c.bic {
                        Some(b) => format!("{}:{b:.2}", c.k),
                        None => format!("{}:failed", c.k),
                    })
                    .collect();
                let _ = writeln!(
                    s,
                    "  K grid {}..{}, K_BIC = {}, K = {}",
                    sel.grid.first().unwrap_or(&0),
                    sel.grid.last().unwrap_or(&0),
                    sel.k_bic,
                    sel.k_hat
                );
                let _ = writeln!(s, "  BIC {}", bics.join(" "));
            }
            let _ = writeln!(
                s,
                "  {:<10} {:>12} {:>12} {:>27} {:>9}",
                "functional", "estimate", "se", "95% CI", "t"
            );
            for f in &e.functionals {
                let ci = format!("[{:.6}, {:.6}]", f.ci_lower, f.ci_upper);
                let _ = writeln!(
                    s,
                    "  {:<10} {:>12.6} {:>12.6} {:>27} {:>9.3}",
                    f.name, f.theta_hat, f.se, ci, f.t_stat
                );
            }
            let names = if e.selected.is_empty() {
                "none".to_string()
            } else {
                e.selected.join(", ")
            };
            let _ = writeln!(s, "  selected vars ({}): {names}", e.selected.len());
            if e.rank_deficient {
                let _ = writeln!(s, "  warning: the final least-squares fit was rank deficient");
            }
        }
        s
    }

    pub fn write(&self, cfg: &FitConfig) -> Result<()> {
        fs::write(&cfg.out, self.to_toml()).with_context(|| format!("cannot write {}", cfg.out.display()))
    }
}
