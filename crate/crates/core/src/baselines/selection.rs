use nalgebra::{DMatrix, DVector};

use super::linear::{center, check_xy, ridge_fit};
use crate::error::{Error, Result};

pub const LASSO_TOL: f64 = 1e-8;
pub const LASSO_MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionMethod {
    Lasso { lambda: f64 },
    Rfe { target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectedFeatures {
    pub method: SelectionMethod,
    /// Sorted, non-empty column indices.
    pub kept: Vec<usize>,
}

impl SelectedFeatures {
    /// Copies the kept columns into a new matrix.
    pub fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x.select_columns(&self.kept)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub sweeps: usize,
}

/// Smallest penalty at which the all-zero solution is optimal.
pub fn lasso_lambda_max(x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    check_xy(x, y)?;
    let (_, _, xc, yc) = center(x, y);
    let n = y.len() as f64;
    Ok(xc.column_iter().map(|c| (c.dot(&yc) / n).abs()).fold(0.0, f64::max))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent on `(1/2n)‖y − Xw‖² + λ‖w‖₁` over centered
/// data, from `w = 0`.
pub fn lasso_fit(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<LassoFit> {
    check_xy(x, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!(
            "lasso penalty must be non-negative, got {lambda}"
        )));
    }
    let (means, y_mean, xc, yc) = center(x, y);
    let n = y.len() as f64;
    let p = x.ncols();
    let norms: Vec<f64> = xc.column_iter().map(|c| c.norm_squared() / n).collect();
    let mut w = DVector::zeros(p);
    let mut r = yc;
    let mut sweeps = 0;
    loop {
        if sweeps == LASSO_MAX_SWEEPS {
            return Err(Error::NoConvergence(format!(
                "lasso after {sweeps} sweeps: residual norm {:.6e}, objective {:.6e}",
                r.norm(),
                objective(&r, &w, lambda)
            )));
        }
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = xc.column(j);
            let old = w[j];
            let rho = col.dot(&r) / n + norms[j] * old;
            let new = soft_threshold(rho, lambda) / norms[j];
            if new != old {
                r.axpy(old - new, &col, 1.0);
                w[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < LASSO_TOL {
            break;
        }
        if sweeps % POLISH_EVERY == 0 {
            polish_active_set(&xc, &mut w, &mut r, lambda);
        }
    }
    Ok(LassoFit {
        intercept: y_mean - w.dot(&means),
        weights: w.iter().copied().collect(),
        sweeps,
    })
}

/// Sweeps between attempts to jump to the exact optimum of the current
/// active set. Nearly collinear columns otherwise make cyclic descent
/// crawl along a flat valley for millions of sweeps.
const POLISH_EVERY: usize = 20;

fn objective(r: &DVector<f64>, w: &DVector<f64>, lambda: f64) -> f64 {
    r.norm_squared() / (2.0 * r.len() as f64) + lambda * w.lp_norm(1)
}

/// Active-set acceleration. Solves the stationarity equations
/// `X_Aᵀ(y − X_A w_A)/n = λ·sign(w_A)` on the nonzero set with its current
/// signs. When the solution flips a sign, steps toward it only as far as the
/// first coordinate reaching zero, drops that coordinate, and solves again.
/// The objective is a convex quadratic along each step, so it never rises.
fn polish_active_set(xc: &DMatrix<f64>, w: &mut DVector<f64>, r: &mut DVector<f64>, lambda: f64) {
    let n = xc.nrows() as f64;
    let mut active: Vec<usize> = (0..w.len()).filter(|&j| w[j] != 0.0).collect();
    let y = r.clone() + xc * &*w;
    let mut cand = w.clone();
    while !active.is_empty() {
        let xa = xc.select_columns(&active);
        let wa = DVector::from_iterator(active.len(), active.iter().map(|&j| cand[j]));
        let signs = wa.map(f64::signum);
        let gram = xa.transpose() * &xa / n;
        let rhs = xa.transpose() * &y / n - &signs * lambda;
        let Some(sol) = gram.cholesky().map(|c| c.solve(&rhs)) else {
            return;
        };
        if sol.iter().any(|v| !v.is_finite()) {
            return;
        }
        let mut step = 1.0;
        let mut hit = None;
        for k in 0..active.len() {
            if sol[k].signum() != signs[k] {
                let t = wa[k] / (wa[k] - sol[k]);
                if t < step {
                    step = t;
                    hit = Some(k);
                }
            }
        }
        for (k, &j) in active.iter().enumerate() {
            cand[j] = wa[k] + step * (sol[k] - wa[k]);
        }
        match hit {
            None => break,
            Some(k) => {
                cand[active[k]] = 0.0;
                active.remove(k);
            }
        }
    }
    let r_new = &y - xc * &cand;
    if objective(&r_new, &cand, lambda) <= objective(r, w, lambda) {
        *w = cand;
        *r = r_new;
    }
}

pub fn lasso_select(x: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<SelectedFeatures> {
    let fit = lasso_fit(x, y, lambda)?;
    let kept: Vec<usize> = (0..fit.weights.len()).filter(|&j| fit.weights[j] != 0.0).collect();
    if kept.is_empty() {
        return Err(Error::invalid(format!("lasso with lambda {lambda}: no features kept")));
    }
    Ok(SelectedFeatures {
        method: SelectionMethod::Lasso { lambda },
        kept,
    })
}

/// Recursive elimination with a ridge estimator: refit, drop the column with
/// the smallest absolute weight (lowest index on ties), repeat.
pub fn rfe_select(x: &DMatrix<f64>, y: &[f64], target: usize, ridge_lambda: f64) -> Result<SelectedFeatures> {
    check_xy(x, y)?;
    let p = x.ncols();
    if target == 0 || target > p {
        return Err(Error::invalid(format!(
            "elimination target must be in 1..={p}, got {target}"
        )));
    }
    let mut kept: Vec<usize> = (0..p).collect();
    while kept.len() > target {
        let fit = ridge_fit(&x.select_columns(&kept), y, ridge_lambda)?;
        let mut drop = 0;
        for (pos, w) in fit.weights.iter().enumerate() {
            if w.abs() < fit.weights[drop].abs() {
                drop = pos;
            }
        }
        kept.remove(drop);
    }
    Ok(SelectedFeatures {
        method: SelectionMethod::Rfe { target },
        kept,
    })
}
