use nalgebra::{DMatrix, SymmetricEigen};

use super::discretize::DiscretizedRoi;
use super::matrix::{average_rows, entropy, TextureKind, TextureMatrix, LOG_EPS, PLANAR_OFFSETS};
use crate::error::{Error, Result};

pub const GLCM_FEATURES: [&str; 24] = [
    "Autocorrelation",
    "JointAverage",
    "ClusterProminence",
    "ClusterShade",
    "ClusterTendency",
    "Contrast",
    "Correlation",
    "DifferenceAverage",
    "DifferenceEntropy",
    "DifferenceVariance",
    "JointEnergy",
    "JointEntropy",
    "Imc1",
    "Imc2",
    "Idm",
    "Idmn",
    "Id",
    "Idn",
    "InverseVariance",
    "MaximumProbability",
    "SumAverage",
    "SumEntropy",
    "SumSquares",
    "MCC",
];

/// Symmetric co-occurrence counts, one matrix per planar direction.
pub fn glcm(d: &DiscretizedRoi) -> Vec<TextureMatrix> {
    let ng = d.n_levels as usize;
    PLANAR_OFFSETS
        .iter()
        .map(|&(dr, dc)| {
            let mut m = TextureMatrix::zeros(TextureKind::Glcm, ng, ng);
            m.offset = Some((dr, dc));
            for &(r, c) in &d.roi_coords {
                let other = d.level_at(r as isize + dr, c as isize + dc);
                if other > 0 {
                    let here = d.levels[(r, c)];
                    m.bump(here, other as usize);
                    m.bump(other, here as usize);
                }
            }
            m
        })
        .collect()
}

/// The 24 co-occurrence features averaged over non-empty directions.
/// `levels` lists the gray levels present in the ROI.
pub fn glcm_features(mats: &[TextureMatrix], levels: &[u32]) -> Result<Vec<f64>> {
    let used: Vec<&TextureMatrix> = mats.iter().filter(|m| m.total() > 0).collect();
    if used.is_empty() || levels.is_empty() {
        return Err(Error::DegenerateRoi("GLCM"));
    }
    let ng = *levels.iter().max().expect("non-empty") as f64;
    let rows: Vec<Vec<f64>> = used
        .iter()
        .map(|m| {
            let raw = restrict(m, levels);
            let total: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / total).collect();
            angle_features(&p, levels, ng)
        })
        .collect();
    let mut out = average_rows(&rows);
    if levels.len() < 2 {
        out[23] = 1.0;
    }
    Ok(out)
}

fn restrict(m: &TextureMatrix, levels: &[u32]) -> Vec<f64> {
    let mut out = Vec::with_capacity(levels.len() * levels.len());
    for &a in levels {
        for &b in levels {
            out.push(m.get(a as usize, b as usize) as f64);
        }
    }
    out
}

fn angle_features(p: &[f64], levels: &[u32], ng: f64) -> Vec<f64> {
    let m = levels.len();
    let g: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
    let at = |i: usize, j: usize| p[i * m + j];
    let px: Vec<f64> = (0..m).map(|i| (0..m).map(|j| at(i, j)).sum()).collect();
    let py: Vec<f64> = (0..m).map(|j| (0..m).map(|i| at(i, j)).sum()).collect();
    let cells = || (0..m).flat_map(move |i| (0..m).map(move |j| (i, j)));
    let sum = |f: &dyn Fn(usize, usize) -> f64| cells().map(|(i, j)| at(i, j) * f(i, j)).sum::<f64>();

    let ux = sum(&|i, _| g[i]);
    let uy = sum(&|_, j| g[j]);
    let n_sum = 2 * ng as usize - 1;
    let n_diff = ng as usize;
    let mut p_sum = vec![0.0; n_sum];
    let mut p_diff = vec![0.0; n_diff];
    for (i, j) in cells() {
        p_sum[(g[i] + g[j]) as usize - 2] += at(i, j);
        p_diff[(g[i] - g[j]).abs() as usize] += at(i, j);
    }
    let hxy = entropy(p.iter().copied());

    let autocorrelation = sum(&|i, j| g[i] * g[j]);
    let centered = |i: usize, j: usize| g[i] + g[j] - ux - uy;
    let prominence = sum(&|i, j| centered(i, j).powi(4));
    let shade = sum(&|i, j| centered(i, j).powi(3));
    let tendency = sum(&|i, j| centered(i, j).powi(2));
    let contrast = sum(&|i, j| (g[i] - g[j]).powi(2));

    let sigx = sum(&|i, _| (g[i] - ux).powi(2)).sqrt();
    let sigy = sum(&|_, j| (g[j] - uy).powi(2)).sqrt();
    let corm = sum(&|i, j| (g[i] - ux) * (g[j] - uy));
    let correlation = if sigx * sigy == 0.0 {
        1.0
    } else {
        corm / (sigx * sigy + LOG_EPS)
    };

    let diff_avg: f64 = p_diff.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
    let diff_ent = entropy(p_diff.iter().copied());
    let diff_var: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, v)| (k as f64 - diff_avg).powi(2) * v)
        .sum();
    let energy: f64 = p.iter().map(|v| v * v).sum();

    let hx = entropy(px.iter().copied());
    let hy = entropy(py.iter().copied());
    let hxy1 = -sum(&|i, j| (px[i] * py[j] + LOG_EPS).log2());
    let hxy2 = -cells()
        .map(|(i, j)| {
            let q = px[i] * py[j];
            q * (q + LOG_EPS).log2()
        })
        .sum::<f64>();
    let div = hx.max(hy);
    let imc1 = if div != 0.0 { (hxy - hxy1) / div } else { 0.0 };
    let imc2 = if hxy2 == hxy {
        0.0
    } else {
        // a negative radicand from rounding gives NaN, skipped when averaging
        (1.0 - (-2.0 * (hxy2 - hxy)).exp()).sqrt()
    };

    let over_diff = |f: &dyn Fn(f64) -> f64| -> f64 { p_diff.iter().enumerate().map(|(k, v)| v * f(k as f64)).sum() };
    let idm = over_diff(&|k| 1.0 / (1.0 + k * k));
    let idmn = over_diff(&|k| 1.0 / (1.0 + k * k / (ng * ng)));
    let id = over_diff(&|k| 1.0 / (1.0 + k));
    let idn = over_diff(&|k| 1.0 / (1.0 + k / ng));
    let inverse_variance: f64 = p_diff.iter().enumerate().skip(1).map(|(k, v)| v / (k * k) as f64).sum();
    let max_prob = p.iter().copied().fold(0.0, f64::max);
    let sum_avg: f64 = p_sum.iter().enumerate().map(|(k, v)| (k + 2) as f64 * v).sum();
    let sum_ent = entropy(p_sum.iter().copied());
    let sum_squares = sum(&|i, _| (g[i] - ux).powi(2));
    let mcc = max_correlation(p, &px, &py);

    vec![
        autocorrelation,
        ux,
        prominence,
        shade,
        tendency,
        contrast,
        correlation,
        diff_avg,
        diff_ent,
        diff_var,
        energy,
        hxy,
        imc1,
        imc2,
        idm,
        idmn,
        id,
        idn,
        inverse_variance,
        max_prob,
        sum_avg,
        sum_ent,
        sum_squares,
        mcc,
    ]
}

/// Square root of the second largest eigenvalue of
/// `Q[i][j] = sum_k p[i][k] p[j][k] / (px[i] py[k])`, evaluated through the
/// symmetric matrix `B Bᵀ` with `B = Dx^-1/2 P Dy^-1/2`, which shares its
/// spectrum.
fn max_correlation(p: &[f64], px: &[f64], py: &[f64]) -> f64 {
    let m = px.len();
    if m < 2 {
        return 1.0;
    }
    let b = DMatrix::from_fn(m, m, |i, k| {
        let denom = px[i] * py[k];
        if denom > 0.0 {
            p[i * m + k] / denom.sqrt()
        } else {
            0.0
        }
    });
    let q = &b * b.transpose();
    let mut eig: Vec<f64> = SymmetricEigen::new(q).eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    eig[1].max(0.0).sqrt()
}
