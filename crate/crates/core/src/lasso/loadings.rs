use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `sqrt((1/n) sum_i x_ij^2 w_i^2)` for every column, with `w` already
/// squared and `x_sq` holding elementwise squares of the design.
pub(crate) fn weighted_rms(x_sq: &DMatrix<f64>, w_sq: &DVector<f64>) -> Result<DVector<f64>> {
    let n = x_sq.nrows() as f64;
    let mut out = x_sq.tr_mul(w_sq);
    for (index, v) in out.iter_mut().enumerate() {
        *v = (*v / n).sqrt();
        if !(*v > 0.0) {
            return Err(Error::DegenerateLoading { index });
        }
    }
    Ok(out)
}

pub(crate) fn squared(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v * v)
}

fn demeaned_squares(target: &DVector<f64>) -> DVector<f64> {
    let mean = target.mean();
    let max_abs = target.amax();
    target.map(|v| {
        let d = v - mean;
        // Treat rounding noise around a constant target as exact zero.
        if d.abs() <= 1e-14 * max_abs {
            0.0
        } else {
            d * d
        }
    })
}

/// Initial loadings from the demeaned target.
pub fn initial_loadings(q: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    check_rows(q, target)?;
    weighted_rms(&squared(q), &demeaned_squares(target))
}

pub(crate) fn initial_loadings_sq(x_sq: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    weighted_rms(x_sq, &demeaned_squares(target))
}

/// Refined loadings from residuals of a previous fit.
pub fn refined_loadings(q: &DMatrix<f64>, residuals: &DVector<f64>) -> Result<DVector<f64>> {
    check_rows(q, residuals)?;
    weighted_rms(&squared(q), &residuals.map(|r| r * r))
}

fn check_rows(q: &DMatrix<f64>, v: &DVector<f64>) -> Result<()> {
    if q.nrows() != v.len() {
        return Err(Error::Dimension(format!(
            "dictionary has {} rows, vector has {}",
            q.nrows(),
            v.len()
        )));
    }
    if q.nrows() == 0 {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    Ok(())
}
