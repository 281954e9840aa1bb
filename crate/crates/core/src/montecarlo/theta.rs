//! Population values of the target functionals by large-sample simulation.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dgp::{control_function, g, g_prime, DgpConfig, Design};
use crate::error::{Error, Result};
use crate::inference::{empirical_quantile, FunctionalKind};

/// Draws of `x` behind every population value.
pub const ORACLE_DRAWS: usize = 10_000_000;
const ORACLE_SEED: u64 = 0x7e57_0ac1e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Key {
    design: Design,
    dim_z: usize,
    rho: u64,
    sigma_v: u64,
}

fn cache() -> &'static Mutex<HashMap<Key, std::sync::Arc<Vec<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<Key, std::sync::Arc<Vec<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Variance of `sum_j w_j z_j` with `w_j = (1/2)^{j-1}` and Toeplitz
/// correlations `rho^{|j-k|}`.
pub fn geometric_index_variance(dim_z: usize, rho: f64) -> f64 {
    // running s_j = sum_{k<j} w_k rho^{j-k}
    let mut total = 0.0;
    let mut s = 0.0;
    let mut w = 1.0;
    for _ in 0..dim_z {
        total += w * w + 2.0 * w * s;
        s = rho * (s + w);
        w *= 0.5;
    }
    total
}

fn draw_x(key: Key, cfg: &DgpConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };
    let sigma_v = cfg.sigma_v;
    match key.design {
        Design::LowDim => {
            let s = (1.0 - cfg.rho * cfg.rho).sqrt();
            let mut z = vec![0.0; cfg.dim_z];
            (0..ORACLE_DRAWS)
                .map(|_| {
                    for j in 0..cfg.dim_z {
                        let e = normal();
                        z[j] = if j == 0 { e } else { cfg.rho * z[j - 1] + s * e };
                    }
                    control_function(Design::LowDim, z.iter().copied()) + sigma_v * normal()
                })
                .collect()
        }
        Design::HighDim => {
            // h(z) is an exact Gaussian index; draw it directly
            let sd_h = geometric_index_variance(cfg.dim_z, cfg.rho).sqrt();
            (0..ORACLE_DRAWS).map(|_| sd_h * normal() + sigma_v * normal()).collect()
        }
        Design::Unconfounded => (0..ORACLE_DRAWS).map(|_| sigma_v * normal()).collect(),
    }
}

fn draws(cfg: &DgpConfig) -> std::sync::Arc<Vec<f64>> {
    let key = Key {
        design: cfg.design,
        dim_z: if cfg.design == Design::Unconfounded { 0 } else { cfg.dim_z },
        rho: if cfg.design == Design::Unconfounded { 0 } else { cfg.rho.to_bits() },
        sigma_v: cfg.sigma_v.to_bits(),
    };
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    guard.entry(key).or_insert_with(|| std::sync::Arc::new(draw_x(key, cfg))).clone()
}

/// Population value of `kind` under the design of `cfg`, from
/// [`ORACLE_DRAWS`] draws of `x` (cached per design, `dim_z`, `rho` and
/// `sigma_v`). Point evaluations are exact.
pub fn true_theta(cfg: &DgpConfig, kind: FunctionalKind) -> Result<f64> {
    cfg.validate()?;
    match kind {
        FunctionalKind::PointEval { x0 } => Ok(g(x0)),
        FunctionalKind::AverageDerivative => {
            let x = draws(cfg);
            Ok(x.iter().map(|&v| g_prime(v)).sum::<f64>() / x.len() as f64)
        }
        FunctionalKind::QuantileContrast { lo, hi } => {
            if !(lo > 0.0 && lo <= 1.0 && hi > 0.0 && hi <= 1.0) {
                return Err(Error::ProbabilityDomain(if lo > 0.0 && lo <= 1.0 { hi } else { lo }));
            }
            let x = draws(cfg);
            Ok(g(empirical_quantile(&x, hi)?) - g(empirical_quantile(&x, lo)?))
        }
    }
}
