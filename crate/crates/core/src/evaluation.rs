//! Error metrics, a paired sign-flip permutation test and report assembly.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::LabelRow;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub n: usize,
    pub mae: f64,
    /// Population standard deviation of the absolute errors.
    pub mae_std: f64,
    pub rmse: f64,
    /// NaN when the targets have zero variance.
    pub r2: f64,
}

pub fn metrics(y: &[f64], y_hat: &[f64]) -> Result<Metrics> {
    if y.len() != y_hat.len() {
        return Err(Error::Shape(format!(
            "{} targets, {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    let n = y.len() as f64;
    let abs: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| (a - b).abs()).collect();
    let mae = abs.iter().sum::<f64>() / n;
    let mae_std = (abs.iter().map(|e| (e - mae).powi(2)).sum::<f64>() / n).sqrt();
    let ss_res: f64 = abs.iter().map(|e| e * e).sum();
    let rmse = (ss_res / n).sqrt();
    let mean = y.iter().sum::<f64>() / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        log::warn!("targets have zero variance; R² is undefined");
        f64::NAN
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(Metrics {
        n: y.len(),
        mae,
        mae_std,
        rmse,
        r2,
    })
}

/// Resamples drawn per worker chunk; fixes the random stream layout so the
/// result does not depend on the thread count.
const PERM_CHUNK: usize = 1024;

/// Two-sided paired sign-flip test on `d = a - b`. Returns
/// `(1 + #{|mean(d_perm)| ≥ |mean(d)|}) / (n_perm + 1)`.
pub fn paired_significance(a: &[f64], b: &[f64], n_perm: usize, seed: u64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "paired errors differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() || n_perm == 0 {
        return Err(Error::invalid(
            "permutation test needs samples and at least one permutation",
        ));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let observed = (d.iter().sum::<f64>() / n).abs();
    // equal statistics may differ in the last bits after reordering
    let threshold = observed * (1.0 - 1e-12);
    let chunks = n_perm.div_ceil(PERM_CHUNK);
    let exceed: usize = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let draws = PERM_CHUNK.min(n_perm - chunk * PERM_CHUNK);
            (0..draws)
                .filter(|_| {
                    let mut sum = 0.0;
                    let mut bits = 0u64;
                    for (i, v) in d.iter().enumerate() {
                        if i % 64 == 0 {
                            bits = rng.random();
                        }
                        sum += if bits & 1 == 1 { *v } else { -*v };
                        bits >>= 1;
                    }
                    (sum / n).abs() >= threshold
                })
                .count()
        })
        .sum();
    Ok((1 + exceed) as f64 / (n_perm + 1) as f64)
}

/// Pearson correlation of MAE and RMSE across runs.
pub fn mae_rmse_correlation(reports: &[Metrics]) -> Result<f64> {
    if reports.len() < 3 {
        return Err(Error::invalid("correlation needs at least three reports"));
    }
    let n = reports.len() as f64;
    let mx = reports.iter().map(|r| r.mae).sum::<f64>() / n;
    let my = reports.iter().map(|r| r.rmse).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for r in reports {
        let (dx, dy) = (r.mae - mx, r.rmse - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid("MAE or RMSE column has zero variance"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleError {
    pub id: String,
    pub y: f64,
    pub y_hat: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub label: String,
    pub per_sample: Vec<SampleError>,
    pub metrics: Metrics,
    pub pvalue: Option<f64>,
}

/// Joins predictions to labels by id, in prediction order. Every predicted
/// id must have a label.
pub fn evaluate(label: &str, labels: &[LabelRow], predictions: &[(String, f64)]) -> Result<EvalReport> {
    let truth: HashMap<&str, f64> = labels.iter().map(|l| (l.id.as_str(), l.ga_days)).collect();
    let per_sample = predictions
        .iter()
        .map(|(id, y_hat)| {
            let y = *truth.get(id.as_str()).ok_or_else(|| Error::UnknownId(id.clone()))?;
            Ok(SampleError {
                id: id.clone(),
                y,
                y_hat: *y_hat,
                abs_err: (y - y_hat).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = per_sample.iter().map(|s| s.y).collect();
    let y_hat: Vec<f64> = per_sample.iter().map(|s| s.y_hat).collect();
    Ok(EvalReport {
        label: label.to_string(),
        metrics: metrics(&y, &y_hat)?,
        per_sample,
        pvalue: None,
    })
}

/// Significance of the difference between two reports over the same ids.
pub fn compare_reports(a: &EvalReport, b: &EvalReport, n_perm: usize, seed: u64) -> Result<f64> {
    let errs_b: HashMap<&str, f64> = b.per_sample.iter().map(|s| (s.id.as_str(), s.abs_err)).collect();
    if errs_b.len() != a.per_sample.len() {
        return Err(Error::invalid("prediction files cover different ids"));
    }
    let mut ea = Vec::with_capacity(a.per_sample.len());
    let mut eb = Vec::with_capacity(a.per_sample.len());
    for s in &a.per_sample {
        let other = errs_b
            .get(s.id.as_str())
            .ok_or_else(|| Error::UnknownId(s.id.clone()))?;
        ea.push(s.abs_err);
        eb.push(*other);
    }
    paired_significance(&ea, &eb, n_perm, seed)
}
