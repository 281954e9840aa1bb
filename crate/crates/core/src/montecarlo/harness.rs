//! Replicated estimation and metric aggregation.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dgp::{generate_sample, DgpConfig, Design, Sample};
use super::report::{McReport, McRow};
use super::theta::true_theta;
use crate::dictionary::DictionarySpec;
use crate::error::{Error, Result};
use crate::inference::{functional_estimate, rejection_test, FunctionalKind, FunctionalSpec};
use crate::lasso::LassoTuning;
use crate::linalg::median;
use crate::selection::{floor_cube_root, k_grid, EstimationData, Estimator, EstimatorPlan, Pipeline, SeriesControls};

/// The two functionals reported for every design: the average derivative
/// and the interquartile contrast.
pub const DEFAULT_FUNCTIONALS: [FunctionalKind; 2] = [
    FunctionalKind::AverageDerivative,
    FunctionalKind::QuantileContrast { lo: 0.25, hi: 0.75 },
];

/// What to run in each replication.
#[derive(Debug, Clone)]
pub struct McSettings {
    pub estimators: Vec<Estimator>,
    pub functionals: Vec<FunctionalKind>,
    pub n_reps: usize,
    pub tuning: LassoTuning,
    /// Replaces `floor(n^{1/3})` for the fixed-degree estimators.
    pub k_override: Option<usize>,
}

impl McSettings {
    pub fn new(estimators: Vec<Estimator>, n_reps: usize) -> Self {
        Self {
            estimators,
            functionals: DEFAULT_FUNCTIONALS.to_vec(),
            n_reps,
            tuning: LassoTuning::default(),
            k_override: None,
        }
    }
}

/// Estimator plan of a design: `K = floor(n^{1/3})`; tensor Hermite
/// conditioning terms of degree `K` with additive and full series controls
/// in the low-dimensional designs; the raw controls with the first or a
/// random `floor(4n/5)` of them in the high-dimensional one.
pub fn design_plan(cfg: &DgpConfig, k_override: Option<usize>, tuning: &LassoTuning) -> EstimatorPlan {
    let k = k_override.unwrap_or_else(|| floor_cube_root(cfg.n)).max(1);
    let (q_spec, series_one, series_two) = match cfg.design {
        Design::LowDim | Design::Unconfounded => (
            DictionarySpec::hermite_tensor(cfg.dim_z, k),
            SeriesControls::AdditiveHermite { degree: k },
            SeriesControls::FullDictionary,
        ),
        Design::HighDim => {
            let c = 4 * cfg.n / 5;
            (
                DictionarySpec::raw(cfg.dim_z),
                SeriesControls::FirstColumns(c),
                SeriesControls::RandomColumns(c),
            )
        }
    };
    EstimatorPlan {
        k,
        q_spec,
        k_grid: k_grid(cfg.n),
        series_one,
        series_two,
        tuning: tuning.clone(),
    }
}

/// Random stream of replication `r`: the base seed selects the key, the
/// replication index the stream, so any replication can be replayed alone.
pub fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// Sample of replication `r` together with the seed for random control
/// subsets.
pub fn replication_sample(cfg: &DgpConfig, r: usize) -> (Sample, u64) {
    let mut rng = replication_rng(cfg.seed, r);
    let sample = generate_sample(cfg, &mut rng);
    let aux_seed = rng.random::<u64>();
    (sample, aux_seed)
}

/// Estimate, standard error and rejection flag of one functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub theta_hat: f64,
    pub se: f64,
    pub reject: bool,
}

/// `results[e][f]` for estimator `e` and functional `f`; `None` marks a
/// failure.
pub type ReplicationResults = Vec<Vec<Option<Estimate>>>;

/// Runs every estimator on one sample and tests each functional against
/// its value in `truths`.
pub fn replicate_on_sample(
    sample: &Sample,
    plan: &EstimatorPlan,
    estimators: &[Estimator],
    functionals: &[FunctionalKind],
    truths: &[f64],
    aux_seed: u64,
) -> ReplicationResults {
    let data = EstimationData {
        x: sample.x.clone(),
        z: sample.z.clone(),
        y: sample.y.clone(),
        h_true: Some(sample.h_true.clone()),
    };
    let failed = || vec![None; functionals.len()];
    let mut pipeline = match Pipeline::new(&data, plan) {
        Ok(p) => p,
        Err(_) => return estimators.iter().map(|_| failed()).collect(),
    };
    let mut aux = ChaCha8Rng::seed_from_u64(aux_seed);
    estimators
        .iter()
        .map(|&est| {
            let outcome = match pipeline.estimate(est, &mut aux) {
                Ok(o) => o,
                Err(_) => return failed(),
            };
            let p_spec = DictionarySpec::hermite_univariate(outcome.k);
            functionals
                .iter()
                .zip(truths)
                .map(|(&kind, &truth)| {
                    let spec = FunctionalSpec::new(kind, &p_spec, &data.x).ok()?;
                    let res = functional_estimate(&outcome.fit, &spec).ok()?;
                    let reject = rejection_test(&res, truth).ok()?;
                    Some(Estimate {
                        theta_hat: res.theta_hat,
                        se: res.se,
                        reject,
                    })
                })
                .collect()
        })
        .collect()
}

/// Median bias, median absolute deviation and rejection frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub median_bias: f64,
    pub mad: f64,
    pub rp5: f64,
}

pub fn aggregate_metrics(theta_hats: &[f64], rejections: &[bool], theta_true: f64) -> Result<Metrics> {
    if theta_hats.is_empty() || theta_hats.len() != rejections.len() {
        return Err(Error::InvalidArgument(format!(
            "metrics need matching nonempty inputs ({} estimates, {} flags)",
            theta_hats.len(),
            rejections.len()
        )));
    }
    let deviations: Vec<f64> = theta_hats.iter().map(|t| (t - theta_true).abs()).collect();
    Ok(Metrics {
        median_bias: median(theta_hats) - theta_true,
        mad: median(&deviations),
        rp5: rejections.iter().filter(|&&r| r).count() as f64 / rejections.len() as f64,
    })
}

/// Replicates the design `settings.n_reps` times on the current rayon pool
/// and aggregates per estimator and functional. Failed replications are
/// counted and excluded from the metrics.
pub fn run_monte_carlo_with(cfg: &DgpConfig, settings: &McSettings) -> Result<McReport> {
    cfg.validate()?;
    if settings.n_reps == 0 {
        return Err(Error::InvalidArgument("n_reps must be at least 1".into()));
    }
    if settings.estimators.is_empty() || settings.functionals.is_empty() {
        return Err(Error::InvalidArgument("nothing to estimate".into()));
    }
    let truths = settings
        .functionals
        .iter()
        .map(|&kind| true_theta(cfg, kind))
        .collect::<Result<Vec<_>>>()?;
    let plan = design_plan(cfg, settings.k_override, &settings.tuning);
    let per_rep: Vec<ReplicationResults> = (0..settings.n_reps)
        .into_par_iter()
        .map(|r| {
            let (sample, aux_seed) = replication_sample(cfg, r);
            replicate_on_sample(&sample, &plan, &settings.estimators, &settings.functionals, &truths, aux_seed)
        })
        .collect();
    let mut rows = Vec::new();
    for (fi, (&kind, &truth)) in settings.functionals.iter().zip(&truths).enumerate() {
        for (ei, &est) in settings.estimators.iter().enumerate() {
            let ok: Vec<Estimate> = per_rep.iter().filter_map(|rep| rep[ei][fi]).collect();
            let thetas: Vec<f64> = ok.iter().map(|e| e.theta_hat).collect();
            let flags: Vec<bool> = ok.iter().map(|e| e.reject).collect();
            let metrics = aggregate_metrics(&thetas, &flags, truth).unwrap_or(Metrics {
                median_bias: f64::NAN,
                mad: f64::NAN,
                rp5: f64::NAN,
            });
            rows.push(McRow {
                functional: kind,
                estimator: est,
                theta_true: truth,
                metrics,
                n_reps: settings.n_reps,
                failures: settings.n_reps - ok.len(),
            });
        }
    }
    Ok(McReport {
        config: cfg.clone(),
        rows,
    })
}

/// All default functionals for `estimators`, default tuning.
pub fn run_monte_carlo(cfg: &DgpConfig, estimators: &[Estimator], n_reps: usize) -> Result<McReport> {
    run_monte_carlo_with(cfg, &McSettings::new(estimators.to_vec(), n_reps))
}

/// The sample of replication `r` as a single table: `y, x, z1..zd`.
pub fn sample_table(sample: &Sample) -> (Vec<String>, DMatrix<f64>) {
    let n = sample.y.len();
    let d = sample.z.ncols();
    let mut names = vec!["y".to_string(), "x".to_string()];
    names.extend((1..=d).map(|j| format!("z{j}")));
    let table = DMatrix::from_fn(n, d + 2, |i, j| match j {
        0 => sample.y[i],
        1 => sample.x[i],
        _ => sample.z[(i, j - 2)],
    });
    (names, table)
}
