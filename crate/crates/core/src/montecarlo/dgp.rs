//! Simulation designs.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Design {
    /// Four Toeplitz-correlated controls, `h(z) = logistic(sum z) - 1/2`,
    /// tensor Hermite conditioning dictionary.
    LowDim,
    /// `dim z = 2n`, `h(z) = sum (1/2)^{j-1} z_j`, the controls themselves
    /// as conditioning dictionary.
    HighDim,
    /// Low-dimensional controls that enter neither `x` nor `y`.
    Unconfounded,
}

impl Design {
    pub fn id(self) -> &'static str {
        match self {
            Design::LowDim => "low_dim",
            Design::HighDim => "high_dim",
            Design::Unconfounded => "unconfounded",
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Design {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" | "low_dim" => Ok(Design::LowDim),
            "high" | "high_dim" => Ok(Design::HighDim),
            "unconfounded" | "none" => Ok(Design::Unconfounded),
            other => Err(Error::InvalidArgument(format!(
                "unknown design '{other}' (expected low, high or unconfounded)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgpConfig {
    pub design: Design,
    pub n: usize,
    pub sigma_v: f64,
    pub sigma_eps: f64,
    pub dim_z: usize,
    /// Correlation decay `corr(z_j, z_k) = rho^{|j-k|}`.
    pub rho: f64,
    pub seed: u64,
}

impl DgpConfig {
    pub const DEFAULT_RHO: f64 = 0.5;
    pub const LOW_DIM_Z: usize = 4;

    /// Design defaults: four controls in the low-dimensional designs,
    /// `2n` in the high-dimensional one.
    pub fn new(design: Design, n: usize, sigma_v: f64, sigma_eps: f64, seed: u64) -> Self {
        let dim_z = match design {
            Design::HighDim => 2 * n,
            Design::LowDim | Design::Unconfounded => Self::LOW_DIM_Z,
        };
        Self {
            design,
            n,
            sigma_v,
            sigma_eps,
            dim_z,
            rho: Self::DEFAULT_RHO,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n < 2 {
            problems.push(format!("n must be at least 2 (got {})", self.n));
        }
        if self.dim_z == 0 {
            problems.push("dim_z must be positive".to_string());
        }
        if !(self.rho.abs() < 1.0) {
            problems.push(format!("rho must lie in (-1, 1) (got {})", self.rho));
        }
        if !(self.sigma_v > 0.0 && self.sigma_v.is_finite()) {
            problems.push(format!("sigma_v must be positive (got {})", self.sigma_v));
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite()) {
            problems.push(format!("sigma_eps must be nonnegative (got {})", self.sigma_eps));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }
}

/// One simulated sample.
#[derive(Debug, Clone)]
pub struct Sample {
    pub y: DVector<f64>,
    pub x: Vec<f64>,
    pub z: DMatrix<f64>,
    /// `h(z_i)`.
    pub h_true: DVector<f64>,
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `g(x) = logistic(x) - 1/2`.
pub fn g(x: f64) -> f64 {
    logistic(x) - 0.5
}

/// `g'(x) = logistic(x) (1 - logistic(x))`.
pub fn g_prime(x: f64) -> f64 {
    let l = logistic(x);
    l * (1.0 - l)
}

/// Rows i.i.d. Gaussian with unit variances and `corr(z_j, z_k) =
/// rho^{|j-k|}`, via `z_1 = e_1`, `z_j = rho z_{j-1} + sqrt(1 - rho^2) e_j`.
pub fn draw_toeplitz_gaussian<R: Rng + ?Sized>(n: usize, d: usize, rho: f64, rng: &mut R) -> DMatrix<f64> {
    let s = (1.0 - rho * rho).sqrt();
    let mut z = DMatrix::zeros(n, d);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..d {
            let e: f64 = StandardNormal.sample(rng);
            prev = if j == 0 { e } else { rho * prev + s * e };
            z[(i, j)] = prev;
        }
    }
    z
}

/// `h(z)` for one row of controls.
pub fn control_function(design: Design, z: impl Iterator<Item = f64>) -> f64 {
    match design {
        Design::LowDim => g(z.sum()),
        Design::HighDim => {
            let mut w = 1.0;
            let mut acc = 0.0;
            for v in z {
                acc += w * v;
                w *= 0.5;
            }
            acc
        }
        Design::Unconfounded => 0.0,
    }
}

/// `x = h(z) + sigma_v v`, `y = g(x) + h(z) + sigma_eps eps`.
pub fn generate_sample<R: Rng + ?Sized>(cfg: &DgpConfig, rng: &mut R) -> Sample {
    let n = cfg.n;
    let z = draw_toeplitz_gaussian(n, cfg.dim_z, cfg.rho, rng);
    let h_true = DVector::from_fn(n, |i, _| control_function(cfg.design, z.row(i).iter().copied()));
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let v: f64 = StandardNormal.sample(rng);
            h_true[i] + cfg.sigma_v * v
        })
        .collect();
    let y = DVector::from_fn(n, |i, _| {
        let e: f64 = StandardNormal.sample(rng);
        g(x[i]) + h_true[i] + cfg.sigma_eps * e
    });
    Sample { y, x, z, h_true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        sab / (saa * sbb).sqrt()
    }

    fn col(z: &DMatrix<f64>, j: usize) -> Vec<f64> {
        z.column(j).iter().copied().collect()
    }

    #[test]
    fn independent_when_rho_zero() {
        let z = draw_toeplitz_gaussian(10_000, 3, 0.0, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(corr(&col(&z, 0), &col(&z, 1)).abs() < 0.05);
        assert!(corr(&col(&z, 1), &col(&z, 2)).abs() < 0.05);
    }

    #[test]
    fn toeplitz_correlations() {
        let z = draw_toeplitz_gaussian(10_000, 4, 0.5, &mut ChaCha8Rng::seed_from_u64(2));
        assert!((corr(&col(&z, 0), &col(&z, 1)) - 0.5).abs() < 0.03);
        assert!((corr(&col(&z, 1), &col(&z, 3)) - 0.25).abs() < 0.03);
    }

    #[test]
    fn moments_at_large_n() {
        let z = draw_toeplitz_gaussian(100_000, 6, 0.5, &mut ChaCha8Rng::seed_from_u64(3));
        for j in 0..6 {
            let c = col(&z, j);
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let v = c.iter().map(|x| (x - m).powi(2)).sum::<f64>() / c.len() as f64;
            assert!((v - 1.0).abs() < 0.02, "var z_{j} = {v}");
        }
        assert!((corr(&col(&z, 0), &col(&z, 1)) - 0.5).abs() < 0.02);
    }

    #[test]
    fn sample_covariance_matches_toeplitz() {
        let d = 8;
        let n = 100_000;
        let z = draw_toeplitz_gaussian(n, d, 0.5, &mut ChaCha8Rng::seed_from_u64(4));
        let s = z.tr_mul(&z) / n as f64;
        for j in 0..d {
            for k in 0..d {
                let target = 0.5f64.powi((j as i32 - k as i32).abs());
                assert!((s[(j, k)] - target).abs() < 0.02);
            }
        }
    }

    #[test]
    fn noiseless_outcome_is_g_plus_h() {
        for design in [Design::LowDim, Design::HighDim, Design::Unconfounded] {
            let cfg = DgpConfig::new(design, 50, 1.0, 0.0, 5);
            let s = generate_sample(&cfg, &mut ChaCha8Rng::seed_from_u64(5));
            for i in 0..50 {
                assert!((s.y[i] - g(s.x[i]) - s.h_true[i]).abs() < 1e-15);
            }
            assert_eq!(s.z.ncols(), cfg.dim_z);
        }
    }

    #[test]
    fn control_function_examples() {
        assert_eq!(g(0.0) + control_function(Design::LowDim, [0.0; 4].into_iter()), 0.0);
        let e1 = (0..1000).map(|j| if j == 0 { 1.0 } else { 0.0 });
        assert_eq!(control_function(Design::HighDim, e1), 1.0);
        assert_eq!(control_function(Design::HighDim, [0.0, 0.0, 4.0].into_iter()), 1.0);
    }

    #[test]
    fn derivative_bound() {
        for i in -50..=50 {
            let x = i as f64 * 0.2;
            assert!(g_prime(x) > 0.0 && g_prime(x) <= 0.25);
        }
        assert_eq!(g_prime(0.0), 0.25);
    }

    #[test]
    fn default_dimensions() {
        assert_eq!(DgpConfig::new(Design::HighDim, 500, 1.0, 1.0, 0).dim_z, 1000);
        assert_eq!(DgpConfig::new(Design::LowDim, 500, 1.0, 1.0, 0).dim_z, 4);
        assert_eq!("high".parse::<Design>().unwrap(), Design::HighDim);
        let bad = DgpConfig {
            rho: 1.0,
            n: 1,
            ..DgpConfig::new(Design::LowDim, 500, 1.0, 1.0, 0)
        };
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("rho") && msg.contains("n must"));
    }
}
