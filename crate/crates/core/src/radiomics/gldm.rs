use super::discretize::DiscretizedRoi;
use super::glrlm::level_size_stats;
use super::matrix::{TextureKind, TextureMatrix, NEIGHBOURS_8};
use crate::error::{Error, Result};

pub const GLDM_FEATURES: [&str; 14] = [
    "SmallDependenceEmphasis",
    "LargeDependenceEmphasis",
    "GrayLevelNonUniformity",
    "DependenceNonUniformity",
    "DependenceNonUniformityNormalized",
    "GrayLevelVariance",
    "DependenceVariance",
    "DependenceEntropy",
    "LowGrayLevelEmphasis",
    "HighGrayLevelEmphasis",
    "SmallDependenceLowGrayLevelEmphasis",
    "SmallDependenceHighGrayLevelEmphasis",
    "LargeDependenceLowGrayLevelEmphasis",
    "LargeDependenceHighGrayLevelEmphasis",
];

/// For every ROI pixel, counts the ROI neighbours within `distance`
/// (Chebyshev) whose level differs by at most `alpha`. Column `k + 1` holds
/// pixels with `k` dependent neighbours.
pub fn gldm(d: &DiscretizedRoi, alpha: u32, distance: usize) -> Result<TextureMatrix> {
    if distance == 0 {
        return Err(Error::invalid("GLDM distance must be at least 1"));
    }
    let offsets: Vec<(isize, isize)> = if distance == 1 {
        NEIGHBOURS_8.to_vec()
    } else {
        let r = distance as isize;
        (-r..=r)
            .flat_map(|dr| (-r..=r).map(move |dc| (dr, dc)))
            .filter(|&o| o != (0, 0))
            .collect()
    };
    let mut m = TextureMatrix::zeros(TextureKind::Gldm, d.n_levels as usize, offsets.len() + 1);
    m.alpha = Some(alpha);
    for &(r, c) in &d.roi_coords {
        let level = d.levels[(r, c)];
        let dependent = offsets
            .iter()
            .filter(|&&(dr, dc)| {
                let other = d.level_at(r as isize + dr, c as isize + dc);
                other > 0 && other.abs_diff(level) <= alpha
            })
            .count();
        m.bump(level, dependent + 1);
    }
    Ok(m)
}

pub fn gldm_features(m: &TextureMatrix, levels: &[u32]) -> Result<Vec<f64>> {
    if m.total() == 0 {
        return Err(Error::DegenerateRoi("GLDM"));
    }
    let s = level_size_stats(m, levels);
    Ok(vec![
        s.small_emphasis(),
        s.large_emphasis(),
        s.level_nonuniformity(),
        s.size_nonuniformity(),
        s.size_nonuniformity_normalized(),
        s.level_variance(),
        s.size_variance(),
        s.entropy(),
        s.low_level_emphasis(),
        s.high_level_emphasis(),
        s.small_low(),
        s.small_high(),
        s.large_low(),
        s.large_high(),
    ])
}
