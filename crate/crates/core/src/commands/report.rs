use std::collections::HashMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;

use super::{require_file, require_files};
use crate::baselines::{run_baselines, BaselineConfig, Regressor, Selector};
use crate::data::{format_sig9, read_features_csv, read_labels_csv, read_predictions_csv, write_report_csv};
use crate::error::{Error, Result};
use crate::evaluation::{compare_reports, evaluate, mae_rmse_correlation, EvalReport, Metrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ridge,
    Knn,
    Gbr,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectArg {
    None,
    Lasso,
    Rfe,
    All,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::All)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = SelectArg::All)]
    pub select: SelectArg,
    /// Seed of the 70:30 split.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction file to score. Repeatable.
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Comparator for the first --pred file in a paired permutation test.
    #[arg(long)]
    pub pred_b: Option<PathBuf>,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub n_perm: usize,
    #[arg(long)]
    pub out: PathBuf,
}

pub(super) fn baseline(a: &BaselineArgs) -> Result<()> {
    require_files(&[&a.features, &a.labels])?;
    let features = read_features_csv(&a.features)?;
    let labels = read_labels_csv(&a.labels)?;
    let ga: HashMap<&str, f64> = labels.iter().map(|l| (l.id.as_str(), l.ga_days)).collect();
    let y = features
        .rows
        .iter()
        .map(|(id, _)| {
            ga.get(id.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownId(format!("{id} (no label)")))
        })
        .collect::<Result<Vec<_>>>()?;
    let p = features.names.len();
    let x = DMatrix::from_fn(features.rows.len(), p, |i, j| features.rows[i].1.values[j]);

    let regressors: Vec<Regressor> = match a.model {
        ModelArg::Ridge => vec![Regressor::Ridge],
        ModelArg::Knn => vec![Regressor::Knn],
        ModelArg::Gbr => vec![Regressor::Gbr],
        ModelArg::All => Regressor::ALL.to_vec(),
    };
    let selectors: Vec<Selector> = match a.select {
        SelectArg::None => vec![Selector::None],
        SelectArg::Lasso => vec![Selector::Lasso],
        SelectArg::Rfe => vec![Selector::Rfe],
        SelectArg::All => Selector::ALL.to_vec(),
    };
    let combos: Vec<_> = regressors
        .iter()
        .flat_map(|&r| selectors.iter().map(move |&s| (r, s)))
        .collect();
    let cfg = BaselineConfig {
        seed: a.seed,
        ..BaselineConfig::default()
    };
    let rows = run_baselines(&x, &y, &combos, &cfg)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.regressor.to_string(),
                r.selector.to_string(),
                format_sig9(r.metrics.mae),
                format_sig9(r.metrics.mae_std),
                format_sig9(r.metrics.r2),
            ]
        })
        .collect();
    write_report_csv(&a.out, &["model", "selector", "mae", "mae_std", "r2"], &table)?;
    for r in &rows {
        println!(
            "{:<6} {:<6} {:>3} features  MAE {:.2} ± {:.2} days  R² {:.3}",
            r.regressor, r.selector, r.kept, r.metrics.mae, r.metrics.mae_std, r.metrics.r2
        );
    }
    Ok(())
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

pub(super) fn eval(a: &EvalArgs) -> Result<()> {
    require_file(&a.labels)?;
    let mut paths: Vec<&PathBuf> = a.pred.iter().collect();
    paths.extend(&a.pred_b);
    require_files(&paths)?;
    let labels = read_labels_csv(&a.labels)?;
    let mut names: Vec<String> = paths.iter().map(|p| label_of(p)).collect();
    if names.iter().enumerate().any(|(i, n)| names[..i].contains(n)) {
        names = paths.iter().map(|p| p.display().to_string()).collect();
    }
    let mut reports = paths
        .iter()
        .zip(&names)
        .map(|(p, name)| evaluate(name, &labels, &read_predictions_csv(p)?))
        .collect::<Result<Vec<EvalReport>>>()?;
    if a.pred_b.is_some() {
        let b = reports.len() - 1;
        let p = compare_reports(&reports[0], &reports[b], a.n_perm, a.seed)?;
        reports[0].pvalue = Some(p);
        reports[b].pvalue = Some(p);
    }
    let table: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let m = &r.metrics;
            vec![
                r.label.clone(),
                m.n.to_string(),
                format_sig9(m.mae),
                format_sig9(m.mae_std),
                format_sig9(m.rmse),
                format_sig9(m.r2),
                r.pvalue.map(format_sig9).unwrap_or_default(),
            ]
        })
        .collect();
    write_report_csv(
        &a.out,
        &["label", "n", "mae", "mae_std", "rmse", "r2", "pvalue"],
        &table,
    )?;
    for r in &reports {
        let m = &r.metrics;
        print!(
            "{}: n={} MAE {:.2} ± {:.2} days, RMSE {:.2}, R² {:.3}",
            r.label, m.n, m.mae, m.mae_std, m.rmse, m.r2
        );
        match r.pvalue {
            Some(p) => println!(", p={p:.4}"),
            None => println!(),
        }
    }
    if reports.len() >= 3 {
        let metrics: Vec<Metrics> = reports.iter().map(|r| r.metrics).collect();
        match mae_rmse_correlation(&metrics) {
            Ok(c) => println!("MAE/RMSE correlation across files: {c:.4}"),
            Err(e) => log::warn!("MAE/RMSE correlation unavailable: {e}"),
        }
    }
    Ok(())
}
