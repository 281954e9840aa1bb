//! Data-driven choice of the number of treatment terms.

use crate::error::{Error, Result};

/// Gaussian-likelihood BIC: `n log(RSS/n) + n_columns log n`.
pub fn bic(rss: f64, n: usize, n_columns: usize) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + n_columns as f64 * nf.ln()
}

/// Largest `k` with `k^power <= bound`, by exact integer arithmetic.
fn floor_root(bound: u128, power: u32) -> usize {
    let mut k: u128 = (bound as f64).powf(1.0 / power as f64) as u128 + 1;
    while k > 0 && k.pow(power) > bound {
        k -= 1;
    }
    while (k + 1).pow(power) <= bound {
        k += 1;
    }
    k as usize
}

/// `floor(n^{1/3})`.
pub fn floor_cube_root(n: usize) -> usize {
    floor_root(n as u128, 3)
}

/// `floor(n^{1/4})`.
pub fn floor_fourth_root(n: usize) -> usize {
    floor_root(n as u128, 4)
}

/// Candidate degrees `floor(n^{1/3}/2) ..= floor(2 n^{1/3})`, never below 1.
pub fn k_grid(n: usize) -> Vec<usize> {
    // floor(n^{1/3}/2) = max{k : (2k)^3 <= n}, floor(2 n^{1/3}) = max{k : k^3 <= 8n}
    let lo = floor_root(n as u128, 3) / 2;
    let hi = floor_root(8 * n as u128, 3);
    (lo.max(1)..=hi.max(1)).collect()
}

/// Outcome of a BIC search over candidate degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct KSelection {
    /// Every candidate with its BIC; `None` marks a failed fit.
    pub candidates: Vec<(usize, Option<f64>)>,
    pub k_bic: usize,
    /// `k_bic + 1`, clamped to the grid maximum.
    pub k_hat: usize,
}

/// Picks `K_BIC + 1` from per-degree BIC values. A failed or missing fit at
/// the chosen degree falls back to `K_BIC`.
pub fn choose_from_bic(candidates: Vec<(usize, Option<f64>)>) -> Result<KSelection> {
    let grid_max = candidates.iter().map(|c| c.0).max().ok_or(Error::EmptyGrid)?;
    let k_bic = candidates
        .iter()
        .filter_map(|&(k, b)| b.filter(|v| v.is_finite()).map(|v| (k, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(k, _)| k)
        .ok_or(Error::EmptyGrid)?;
    let next = (k_bic + 1).min(grid_max);
    let usable = candidates.iter().any(|&(k, b)| k == next && b.is_some_and(f64::is_finite));
    Ok(KSelection {
        candidates,
        k_bic,
        k_hat: if usable { next } else { k_bic },
    })
}

/// Fits every degree in `grid` with `fit_bic`, skipping failures, and applies
/// [`choose_from_bic`].
pub fn choose_k_bic<F>(grid: &[usize], mut fit_bic: F) -> Result<KSelection>
where
    F: FnMut(usize) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let candidates = grid.iter().map(|&k| (k, fit_bic(k).ok())).collect();
    choose_from_bic(candidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_at_thousand() {
        assert_eq!(k_grid(1000), (5..=20).collect::<Vec<_>>());
        assert_eq!(floor_cube_root(1000), 10);
    }

    #[test]
    fn grid_at_five_hundred() {
        // 500^{1/3} = 7.937
        assert_eq!(k_grid(500), (3..=15).collect::<Vec<_>>());
        assert_eq!(floor_cube_root(500), 7);
        assert_eq!(floor_fourth_root(500), 4);
    }

    #[test]
    fn plus_one_rule_and_clamp() {
        let sel = choose_from_bic(vec![(5, Some(1.0)), (6, Some(2.0)), (7, Some(3.0))]).unwrap();
        assert_eq!((sel.k_bic, sel.k_hat), (5, 6));
        let sel = choose_from_bic(vec![(5, Some(3.0)), (6, Some(2.0)), (7, Some(1.0))]).unwrap();
        assert_eq!((sel.k_bic, sel.k_hat), (7, 7));
    }

    #[test]
    fn failed_degrees_are_skipped() {
        let sel = choose_from_bic(vec![(3, None), (4, Some(-2.0)), (5, None), (6, Some(0.0))]).unwrap();
        assert_eq!((sel.k_bic, sel.k_hat), (4, 4));
        assert!(matches!(choose_from_bic(vec![(3, None)]), Err(Error::EmptyGrid)));
        assert!(matches!(choose_k_bic(&[], |_| Ok(0.0)), Err(Error::EmptyGrid)));
    }

    #[test]
    fn bic_matches_formula() {
        let v = bic(50.0, 100, 4);
        assert!((v - (100.0 * 0.5f64.ln() + 4.0 * 100f64.ln())).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn integer_roots_bracket(n in 1usize..10_000_000) {
            let k = floor_cube_root(n);
            prop_assert!(k.pow(3) <= n && (k + 1).pow(3) > n);
            let k = floor_fourth_root(n);
            prop_assert!(k.pow(4) <= n && (k + 1).pow(4) > n);
        }
    }
}
