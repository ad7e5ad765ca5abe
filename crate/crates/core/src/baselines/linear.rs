use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Linear predictor with an explicit intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LinearModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
    }
}

pub(crate) fn check_xy(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} targets", x.nrows(), y.len())));
    }
    if y.is_empty() || x.ncols() == 0 {
        return Err(Error::invalid("empty design matrix"));
    }
    Ok(())
}

/// Column means, the mean target, and the centered design and target.
pub(crate) fn center(x: &DMatrix<f64>, y: &[f64]) -> (DVector<f64>, f64, DMatrix<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let y_mean = y.iter().sum::<f64>() / n;
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - y_mean));
    (means, y_mean, xc, yc)
}

/// Ridge regression on centered data: `w = (XᵀX + λI)⁻¹ Xᵀy`, intercept
/// `ȳ − w·x̄`. With `λ = 0` the pseudo-inverse gives the minimum-norm
/// least-squares solution.
pub fn ridge_fit(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<LinearModel> {
    check_xy(x, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "ridge penalty must be non-negative, got {lambda}"
        )));
    }
    let (means, y_mean, xc, yc) = center(x, y);
    let p = x.ncols();
    let gram = xc.transpose() * &xc + DMatrix::identity(p, p) * lambda;
    let rhs = xc.transpose() * yc;
    let solved = if lambda > 0.0 {
        gram.clone().cholesky().map(|c| c.solve(&rhs))
    } else {
        None
    };
    let w = match solved {
        Some(w) => w,
        None => {
            let eps = 1e-12 * gram.norm().max(1.0);
            let pinv = gram
                .pseudo_inverse(eps)
                .map_err(|e| Error::invalid(format!("pseudo-inverse failed: {e}")))?;
            pinv * rhs
        }
    };
    Ok(LinearModel {
        intercept: y_mean - w.dot(&means),
        weights: w.iter().copied().collect(),
    })
}
