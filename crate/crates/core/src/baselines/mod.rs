//! Radiomics-only regressors, feature selection, and the held-out benchmark
//! that compares them.

pub mod gbr;
pub mod knn;
pub mod linear;
pub mod selection;

use std::fmt;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{metrics, Metrics};
use crate::radiomics::STD_FLOOR;

pub use gbr::{Gbr, GbrConfig};
pub use knn::Knn;
pub use linear::{ridge_fit, LinearModel};
pub use selection::{
    lasso_fit, lasso_lambda_max, lasso_select, rfe_select, LassoFit, SelectedFeatures, SelectionMethod,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regressor {
    Ridge,
    Knn,
    Gbr,
}

impl Regressor {
    pub const ALL: [Regressor; 3] = [Regressor::Ridge, Regressor::Knn, Regressor::Gbr];
}

impl fmt::Display for Regressor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Regressor::Ridge => "ridge",
            Regressor::Knn => "knn",
            Regressor::Gbr => "gbr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    None,
    Lasso,
    Rfe,
}

impl Selector {
    pub const ALL: [Selector; 3] = [Selector::None, Selector::Lasso, Selector::Rfe];
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Selector::None => "none",
            Selector::Lasso => "lasso",
            Selector::Rfe => "rfe",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub ridge_lambda: f64,
    pub knn_k: usize,
    pub gbr: GbrConfig,
    /// LASSO penalty as a fraction of the smallest all-zero penalty.
    pub lasso_fraction: f64,
    /// RFE stops at this many features, or at all of them if fewer exist.
    pub rfe_target: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            ridge_lambda: 1.0,
            knn_k: 5,
            gbr: GbrConfig::default(),
            lasso_fraction: 0.1,
            rfe_target: 20,
            test_fraction: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRow {
    pub regressor: Regressor,
    pub selector: Selector,
    pub kept: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle, then the first `round(n · test_fraction)` rows (at least
/// one) are held out. Both parts come back sorted.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).max(1);
    if n < n_test + 2 {
        return Err(Error::invalid(format!("{n} rows are too few for a held-out split")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, test })
}

/// Z-scores both matrices with the column statistics of `train`.
pub fn standardize_columns(train: &DMatrix<f64>, test: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = train.nrows() as f64;
    let mut a = train.clone();
    let mut b = test.clone();
    for j in 0..train.ncols() {
        let col = train.column(j);
        let mean = col.sum() / n;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n)
            .sqrt()
            .max(STD_FLOOR);
        a.column_mut(j).apply(|v| *v = (*v - mean) / std);
        b.column_mut(j).apply(|v| *v = (*v - mean) / std);
    }
    (a, b)
}

enum Fitted {
    Linear(LinearModel),
    Knn(Knn),
    Gbr(Gbr),
}

impl Fitted {
    fn predict(&self, row: &[f64]) -> f64 {
        match self {
            Fitted::Linear(m) => m.predict(row),
            Fitted::Knn(m) => m.predict(row),
            Fitted::Gbr(m) => m.predict(row),
        }
    }
}

fn fit(regressor: Regressor, x: &DMatrix<f64>, y: &[f64], cfg: &BaselineConfig) -> Result<Fitted> {
    Ok(match regressor {
        Regressor::Ridge => Fitted::Linear(ridge_fit(x, y, cfg.ridge_lambda)?),
        Regressor::Knn => Fitted::Knn(Knn::fit(x, y, cfg.knn_k.min(y.len()))?),
        Regressor::Gbr => Fitted::Gbr(Gbr::fit(x, y, &cfg.gbr)?),
    })
}

fn select(selector: Selector, x: &DMatrix<f64>, y: &[f64], cfg: &BaselineConfig) -> Result<Vec<usize>> {
    match selector {
        Selector::None => Ok((0..x.ncols()).collect()),
        Selector::Lasso => {
            let lambda = cfg.lasso_fraction * lasso_lambda_max(x, y)?;
            Ok(lasso_select(x, y, lambda)?.kept)
        }
        Selector::Rfe => Ok(rfe_select(x, y, cfg.rfe_target.min(x.ncols()), cfg.ridge_lambda)?.kept),
    }
}

/// Fits every requested combination on a seeded 70:30-style split and scores
/// it on the held-out rows. Rows come back in the order of `combos`.
pub fn run_baselines(
    x: &DMatrix<f64>,
    y: &[f64],
    combos: &[(Regressor, Selector)],
    cfg: &BaselineConfig,
) -> Result<Vec<BaselineRow>> {
    if x.nrows() != y.len() {
        return Err(Error::Shape(format!("{} feature rows, {} labels", x.nrows(), y.len())));
    }
    let split = split_indices(y.len(), cfg.test_fraction, cfg.seed)?;
    let (x_train, x_test) = standardize_columns(&x.select_rows(&split.train), &x.select_rows(&split.test));
    let y_train: Vec<f64> = split.train.iter().map(|&i| y[i]).collect();
    let y_test: Vec<f64> = split.test.iter().map(|&i| y[i]).collect();

    let mut selectors: Vec<Selector> = Vec::new();
    for (_, s) in combos {
        if !selectors.contains(s) {
            selectors.push(*s);
        }
    }
    let kept: Vec<(Selector, Vec<usize>)> = selectors
        .par_iter()
        .map(|&s| select(s, &x_train, &y_train, cfg).map(|k| (s, k)))
        .collect::<Result<_>>()?;

    combos
        .par_iter()
        .map(|&(regressor, selector)| {
            let cols = &kept.iter().find(|(s, _)| *s == selector).expect("selection computed").1;
            let model = fit(regressor, &x_train.select_columns(cols), &y_train, cfg)?;
            let test = x_test.select_columns(cols);
            let pred: Vec<f64> = test
                .row_iter()
                .map(|r| model.predict(&r.iter().copied().collect::<Vec<_>>()))
                .collect();
            Ok(BaselineRow {
                regressor,
                selector,
                kept: cols.len(),
                metrics: metrics(&y_test, &pred)?,
            })
        })
        .collect()
}
