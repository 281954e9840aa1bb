//! Approximating dictionaries: univariate Hermite series for the treatment
//! function, tensor-product Hermite series (or raw coordinates) for the
//! conditioning function, and the sum/difference extension used by the
//! extended first stage.
//!
//! Hermite polynomials follow the probabilists' convention
//! `He_{k+1}(x) = x He_k(x) - k He_{k-1}(x)`. Constant terms are never part of
//! a dictionary; the final regression carries its own intercept.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::column_moments;

/// `He_k(x)` by the three-term recurrence.
pub fn hermite_eval(x: f64, k: usize) -> f64 {
    let (mut prev, mut cur) = (0.0, 1.0);
    for j in 0..k {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `He_k'(x) = k He_{k-1}(x)`.
pub fn hermite_deriv(x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * hermite_eval(x, k - 1)
    }
}

/// `[He_0(x), ..., He_kmax(x)]` in one pass.
pub fn hermite_table(x: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0);
    if kmax >= 1 {
        out.push(x);
    }
    for j in 1..kmax {
        let next = x * out[j] - j as f64 * out[j - 1];
        out.push(next);
    }
    out
}

/// A multi-index `(m_1, ..., m_d)` selecting `prod_j He_{m_j}(z_j)`.
pub type MultiIndex = Vec<usize>;

/// All multi-indices with `1 <= sum m_j <= degree`, graded by total degree
/// and lexicographically descending within a degree, e.g. for `d = 2`:
/// `(1,0), (0,1), (2,0), (1,1), (0,2), ...`.
pub fn tensor_index_set(input_dim: usize, degree: usize) -> Vec<MultiIndex> {
    fn compositions(total: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<MultiIndex>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            compositions(total - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }

    assert!(input_dim >= 1, "tensor dictionary needs at least one input");
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(input_dim);
    for total in 1..=degree {
        compositions(total, input_dim, &mut prefix, &mut out);
    }
    out
}

/// Number of columns produced by [`build_extended_fs`] on `k` base columns.
pub fn extended_size(k: usize) -> usize {
    k + k * k.saturating_sub(1)
}

/// Originals, then pairwise sums `p_j + p_j'` for `j < j'`, then pairwise
/// differences `p_j - p_j'`, pairs in lexicographic order.
pub fn build_extended_fs(p: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = p.shape();
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|j| (j + 1..k).map(move |jj| (j, jj)))
        .collect();
    let mut out = DMatrix::zeros(n, k + 2 * pairs.len());
    out.columns_mut(0, k).copy_from(p);
    for (at, &(j, jj)) in pairs.iter().enumerate() {
        out.set_column(k + at, &(p.column(j) + p.column(jj)));
        out.set_column(k + pairs.len() + at, &(p.column(j) - p.column(jj)));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DictionaryKind {
    /// `He_1(x), ..., He_K(x)`.
    HermiteUnivariate,
    /// `prod_j He_{m_j}(z_j)` over [`tensor_index_set`].
    HermiteTensor,
    /// The input coordinates themselves.
    RawCoordinates,
    /// Univariate Hermite terms extended by pairwise sums and differences.
    ExtendedSumsDiffs,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DictionarySpec {
    pub kind: DictionaryKind,
    pub degree: usize,
    pub input_dim: usize,
}

impl DictionarySpec {
    pub fn hermite_univariate(degree: usize) -> Self {
        Self {
            kind: DictionaryKind::HermiteUnivariate,
            degree,
            input_dim: 1,
        }
    }

    pub fn hermite_tensor(input_dim: usize, degree: usize) -> Self {
        Self {
            kind: DictionaryKind::HermiteTensor,
            degree,
            input_dim,
        }
    }

    pub fn raw(input_dim: usize) -> Self {
        Self {
            kind: DictionaryKind::RawCoordinates,
            degree: 1,
            input_dim,
        }
    }

    pub fn extended(degree: usize) -> Self {
        Self {
            kind: DictionaryKind::ExtendedSumsDiffs,
            degree,
            input_dim: 1,
        }
    }

    pub fn n_terms(&self) -> usize {
        match self.kind {
            DictionaryKind::HermiteUnivariate => self.degree,
            DictionaryKind::HermiteTensor => tensor_index_set(self.input_dim, self.degree).len(),
            DictionaryKind::RawCoordinates => self.input_dim,
            DictionaryKind::ExtendedSumsDiffs => extended_size(self.degree),
        }
    }

    fn check_inputs(&self, inputs: &DMatrix<f64>) -> Result<()> {
        if inputs.ncols() != self.input_dim {
            return Err(Error::Dimension(format!(
                "dictionary expects {} input columns, got {}",
                self.input_dim,
                inputs.ncols()
            )));
        }
        Ok(())
    }

    /// Evaluates the dictionary rowwise on an `n x input_dim` input matrix.
    pub fn evaluate(&self, inputs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_inputs(inputs)?;
        let n = inputs.nrows();
        match self.kind {
            DictionaryKind::HermiteUnivariate => {
                let mut out = DMatrix::zeros(n, self.degree);
                for i in 0..n {
                    let table = hermite_table(inputs[(i, 0)], self.degree);
                    for k in 0..self.degree {
                        out[(i, k)] = table[k + 1];
                    }
                }
                Ok(out)
            }
            DictionaryKind::HermiteTensor => {
                let indices = tensor_index_set(self.input_dim, self.degree);
                let mut out = DMatrix::zeros(n, indices.len());
                let mut tables = Vec::with_capacity(self.input_dim);
                for i in 0..n {
                    tables.clear();
                    tables.extend((0..self.input_dim).map(|j| hermite_table(inputs[(i, j)], self.degree)));
                    for (col, m) in indices.iter().enumerate() {
                        out[(i, col)] = m
                            .iter()
                            .zip(&tables)
                            .map(|(&mj, t)| t[mj])
                            .product();
                    }
                }
                Ok(out)
            }
            DictionaryKind::RawCoordinates => Ok(inputs.clone()),
            DictionaryKind::ExtendedSumsDiffs => {
                let base = DictionarySpec::hermite_univariate(self.degree).evaluate(inputs)?;
                Ok(build_extended_fs(&base))
            }
        }
    }

    /// Derivative of every term with respect to a scalar input.
    pub fn evaluate_derivative(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        if self.input_dim != 1 {
            return Err(Error::InvalidArgument(
                "derivatives are only defined for scalar-input dictionaries".into(),
            ));
        }
        let n = x.len();
        match self.kind {
            DictionaryKind::HermiteUnivariate => Ok(DMatrix::from_fn(n, self.degree, |i, k| {
                hermite_deriv(x[i], k + 1)
            })),
            DictionaryKind::RawCoordinates => Ok(DMatrix::from_element(n, 1, 1.0)),
            DictionaryKind::ExtendedSumsDiffs => {
                let base = DictionarySpec::hermite_univariate(self.degree).evaluate_derivative(x)?;
                Ok(build_extended_fs(&base))
            }
            DictionaryKind::HermiteTensor => {
                let inputs = DMatrix::from_column_slice(n, 1, x);
                // A one-dimensional tensor dictionary is the univariate one.
                self.check_inputs(&inputs)?;
                DictionarySpec::hermite_univariate(self.degree).evaluate_derivative(x)
            }
        }
    }

    /// Human-readable term names. `names` labels the input coordinates.
    pub fn term_labels(&self, names: &[String]) -> Vec<String> {
        match self.kind {
            DictionaryKind::HermiteUnivariate => {
                let x = names.first().map(String::as_str).unwrap_or("x");
                (1..=self.degree).map(|k| format!("He{k}({x})")).collect()
            }
            DictionaryKind::HermiteTensor => tensor_index_set(self.input_dim, self.degree)
                .into_iter()
                .map(|m| {
                    let inner: Vec<String> = m.iter().map(usize::to_string).collect();
                    format!("q[{}]", inner.join(","))
                })
                .collect(),
            DictionaryKind::RawCoordinates => (0..self.input_dim)
                .map(|j| names.get(j).cloned().unwrap_or_else(|| format!("z{}", j + 1)))
                .collect(),
            DictionaryKind::ExtendedSumsDiffs => {
                let base = DictionarySpec::hermite_univariate(self.degree).term_labels(names);
                let k = base.len();
                let mut out = base.clone();
                for op in ["+", "-"] {
                    for j in 0..k {
                        for jj in j + 1..k {
                            out.push(format!("{}{op}{}", base[j], base[jj]));
                        }
                    }
                }
                out
            }
        }
    }
}

/// Evaluated regressor matrices for one sample.
#[derive(Debug, Clone)]
pub struct DesignMatrices {
    /// `n x K`, row `i` is `p(x_i)` (unscaled).
    pub p: DMatrix<f64>,
    /// `n x L`, row `i` is `q(z_i)` (unscaled).
    pub q: DMatrix<f64>,
    /// Sample standard deviations of the `K` columns of `p` followed by the
    /// `L` columns of `q`; Lasso stages divide by these.
    pub column_scales: Vec<f64>,
}

impl DesignMatrices {
    pub fn p_scales(&self) -> &[f64] {
        &self.column_scales[..self.p.ncols()]
    }

    pub fn q_scales(&self) -> &[f64] {
        &self.column_scales[self.p.ncols()..]
    }
}

pub(crate) fn check_columns(matrix: &'static str, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (_, sds) = column_moments(m);
    for (column, (sd, col)) in sds.iter().zip(m.column_iter()).enumerate() {
        let max_abs = col.amax();
        if *sd <= 1e-12 * max_abs || max_abs == 0.0 {
            return Err(Error::DegenerateColumn { matrix, column });
        }
    }
    Ok(sds)
}

/// Evaluates both dictionaries and records column scales. Any column with
/// no sample variation is rejected.
pub fn build_design(
    spec_p: &DictionarySpec,
    spec_q: &DictionarySpec,
    x: &[f64],
    z: &DMatrix<f64>,
) -> Result<DesignMatrices> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    if z.nrows() != x.len() {
        return Err(Error::Dimension(format!(
            "x has {} rows but z has {}",
            x.len(),
            z.nrows()
        )));
    }
    let p = spec_p.evaluate(&DMatrix::from_column_slice(x.len(), 1, x))?;
    let q = spec_q.evaluate(z)?;
    let mut column_scales = check_columns("P", &p)?;
    column_scales.extend(check_columns("Q", &q)?);
    Ok(DesignMatrices { p, q, column_scales })
}
