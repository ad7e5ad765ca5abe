use super::discretize::DiscretizedRoi;
use super::matrix::entropy;
use crate::data::MaskedImage;
use crate::error::{Error, Result};

pub const FIRSTORDER_FEATURES: [&str; 18] = [
    "Energy",
    "TotalEnergy",
    "Entropy",
    "Minimum",
    "10Percentile",
    "90Percentile",
    "Maximum",
    "Mean",
    "Median",
    "InterquartileRange",
    "Range",
    "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "Kurtosis",
    "Variance",
    "Uniformity",
];

/// Percentile of sorted data, interpolating linearly between order
/// statistics at position `q/100 * (n-1)`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let t = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * t
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Intensity statistics over the raw ROI values. Entropy and Uniformity use
/// the binned levels.
pub fn firstorder_features(img: &MaskedImage, d: &DiscretizedRoi) -> Result<Vec<f64>> {
    if d.roi_coords.is_empty() {
        return Err(Error::EmptyMask(Some(img.id.clone())));
    }
    let mut x: Vec<f64> = d.roi_coords.iter().map(|&(r, c)| img.pixels[(r, c)] as f64).collect();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;

    let energy: f64 = x.iter().map(|v| v * v).sum();
    let total_energy = energy * img.pixel_size_mm * img.pixel_size_mm;

    let mut hist = vec![0usize; d.n_levels as usize + 1];
    for &(r, c) in &d.roi_coords {
        hist[d.levels[(r, c)] as usize] += 1;
    }
    let probs: Vec<f64> = hist.iter().filter(|&&h| h > 0).map(|&h| h as f64 / n).collect();
    let hist_entropy = entropy(probs.iter().copied());
    let uniformity: f64 = probs.iter().map(|p| p * p).sum();

    let min = x[0];
    let max = x[x.len() - 1];
    let p10 = percentile(&x, 10.0);
    let p90 = percentile(&x, 90.0);
    let mu = mean(&x);
    let median = percentile(&x, 50.0);
    let iqr = percentile(&x, 75.0) - percentile(&x, 25.0);
    let mad = x.iter().map(|v| (v - mu).abs()).sum::<f64>() / n;
    let robust: Vec<f64> = x.iter().copied().filter(|&v| v >= p10 && v <= p90).collect();
    // with very few pixels no value may fall inside the band
    let robust_mad = if robust.is_empty() {
        0.0
    } else {
        let robust_mu = mean(&robust);
        robust.iter().map(|v| (v - robust_mu).abs()).sum::<f64>() / robust.len() as f64
    };
    let rms = (energy / n).sqrt();
    let moment = |k: i32| x.iter().map(|v| (v - mu).powi(k)).sum::<f64>() / n;
    let m2 = moment(2);
    let (skewness, kurtosis) = if m2 == 0.0 {
        (0.0, 0.0)
    } else {
        (moment(3) / m2.powf(1.5), moment(4) / (m2 * m2))
    };

    Ok(vec![
        energy,
        total_energy,
        hist_entropy,
        min,
        p10,
        p90,
        max,
        mu,
        median,
        iqr,
        max - min,
        mad,
        robust_mad,
        rms,
        skewness,
        kurtosis,
        m2,
        uniformity,
    ])
}
