use crate::data::RadiomicVector;
use crate::error::{Error, Result};

/// Lower bound on the per-feature scale, so constant features map to 0.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-feature mean and population standard deviation of a training split.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizerStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl StandardizerStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(Error::Shape(format!("{} means for {} scales", mean.len(), std.len())));
        }
        let std = std.into_iter().map(|s| s.max(STD_FLOOR)).collect();
        Ok(StandardizerStats { mean, std })
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

pub fn fit_standardizer(train: &[RadiomicVector]) -> Result<StandardizerStats> {
    let first = train
        .first()
        .ok_or_else(|| Error::invalid("cannot fit a standardizer on an empty set"))?;
    let p = first.len();
    if train.iter().any(|v| v.len() != p) {
        return Err(Error::Shape("feature vectors differ in length".into()));
    }
    let n = train.len() as f64;
    let mean: Vec<f64> = (0..p)
        .map(|j| train.iter().map(|v| v.values[j]).sum::<f64>() / n)
        .collect();
    let std = (0..p)
        .map(|j| {
            let var = train.iter().map(|v| (v.values[j] - mean[j]).powi(2)).sum::<f64>() / n;
            var.sqrt()
        })
        .collect();
    StandardizerStats::new(mean, std)
}

pub fn apply_standardizer(stats: &StandardizerStats, v: &RadiomicVector) -> Result<RadiomicVector> {
    if v.standardized {
        return Err(Error::invalid("vector is already standardized"));
    }
    if v.len() != stats.len() {
        return Err(Error::Shape(format!(
            "standardizer has {} features, vector has {}",
            stats.len(),
            v.len()
        )));
    }
    Ok(RadiomicVector {
        values: stats.transform(&v.values),
        names: v.names.clone(),
        standardized: true,
    })
}
