//! Dense least-squares helpers shared by the Lasso refits, the final OLS
//! stage and the residualization used for inference.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution computed from a thin SVD.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: DMatrix<f64>,
    pub rank: usize,
    pub rank_deficient: bool,
}

fn pinv_tolerance(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * sigma_max * f64::EPSILON
}

/// Solves `min ||x b - y||` columnwise for every column of `y` with the
/// Moore-Penrose pseudo-inverse.
pub fn lstsq_multi(x: &DMatrix<f64>, y: &DMatrix<f64>) -> LeastSquares {
    let (n, p) = x.shape();
    assert_eq!(n, y.nrows(), "row mismatch in least squares");
    if p == 0 {
        return LeastSquares {
            coefficients: DMatrix::zeros(0, y.ncols()),
            rank: 0,
            rank_deficient: false,
        };
    }
    let svd = x.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let tol = pinv_tolerance(n, p, sigma_max);
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");

    // b = V diag(1/s) U' y, truncated at the rank tolerance.
    let mut uty = u.tr_mul(y);
    for (i, s) in svd.singular_values.iter().enumerate() {
        let scale = if *s > tol { 1.0 / s } else { 0.0 };
        uty.row_mut(i).scale_mut(scale);
    }
    let coefficients = v_t.tr_mul(&uty);
    LeastSquares {
        coefficients,
        rank,
        rank_deficient: rank < p,
    }
}

/// Single right-hand-side version of [`lstsq_multi`].
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, bool) {
    let rhs = DMatrix::from_column_slice(y.len(), 1, y.as_slice());
    let sol = lstsq_multi(x, &rhs);
    (sol.coefficients.column(0).into_owned(), sol.rank_deficient)
}

/// Horizontally stacks an intercept column with the given blocks.
pub fn with_intercept(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks
        .first()
        .map(|b| b.nrows())
        .expect("at least one block is required");
    let cols = 1 + blocks.iter().map(|b| b.ncols()).sum::<usize>();
    let mut out = DMatrix::zeros(n, cols);
    out.column_mut(0).fill(1.0);
    let mut at = 1;
    for b in blocks {
        assert_eq!(b.nrows(), n, "row mismatch when stacking blocks");
        out.columns_mut(at, b.ncols()).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Columns of `m` listed in `idx`, in that order.
pub fn select_columns(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), idx.len());
    for (dst, &src) in idx.iter().enumerate() {
        out.set_column(dst, &m.column(src));
    }
    out
}

/// Sample mean and population-normalized (1/n) standard deviation per column.
pub fn column_moments(m: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = m.nrows() as f64;
    m.column_iter()
        .map(|c| {
            let mean = c.sum() / n;
            let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .unzip()
}

/// Centered, unit-sd (1/n) copy of `m` with the removed means and scales.
/// Returns the index of the first column without sample variation as the
/// error.
pub fn standardize(m: &DMatrix<f64>) -> std::result::Result<(DMatrix<f64>, Vec<f64>, Vec<f64>), usize> {
    let (means, sds) = column_moments(m);
    let mut out = m.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let max_abs = m.column(j).amax();
        if sds[j] <= 1e-12 * max_abs || max_abs == 0.0 {
            return Err(j);
        }
        col.apply(|v| *v = (*v - means[j]) / sds[j]);
    }
    Ok((out, means, sds))
}

/// Median of a non-empty slice (average of the middle pair for even length).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_full_rank_solution() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let (b, deficient) = lstsq(&x, &y);
        assert!(!deficient);
        assert!((b[0] - 1.0).abs() < 1e-12);
        assert!((b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_gives_minimum_norm_split() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let (b, deficient) = lstsq(&x, &y);
        assert!(deficient);
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
