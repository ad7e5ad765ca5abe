use super::discretize::DiscretizedRoi;
use super::glrlm::{level_size_stats, size_family};
use super::matrix::{TextureKind, TextureMatrix, NEIGHBOURS_8};
use crate::data::Grid;
use crate::error::{Error, Result};

pub const GLSZM_FEATURES: [&str; 16] = [
    "SmallAreaEmphasis",
    "LargeAreaEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "SizeZoneNonUniformity",
    "SizeZoneNonUniformityNormalized",
    "ZonePercentage",
    "GrayLevelVariance",
    "ZoneVariance",
    "ZoneEntropy",
    "LowGrayLevelZoneEmphasis",
    "HighGrayLevelZoneEmphasis",
    "SmallAreaLowGrayLevelEmphasis",
    "SmallAreaHighGrayLevelEmphasis",
    "LargeAreaLowGrayLevelEmphasis",
    "LargeAreaHighGrayLevelEmphasis",
];

/// Counts 8-connected zones of equal level by level and zone size.
pub fn glszm(d: &DiscretizedRoi) -> TextureMatrix {
    let (h, w) = d.levels.dims();
    let mut m = TextureMatrix::zeros(TextureKind::Glszm, d.n_levels as usize, d.roi_coords.len().max(1));
    let mut visited = Grid::filled(h, w, false);
    let mut stack = Vec::new();
    for &(r0, c0) in &d.roi_coords {
        if visited[(r0, c0)] {
            continue;
        }
        let level = d.levels[(r0, c0)];
        visited[(r0, c0)] = true;
        stack.push((r0, c0));
        let mut size = 0;
        while let Some((r, c)) = stack.pop() {
            size += 1;
            for (dr, dc) in NEIGHBOURS_8 {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if d.level_at(nr, nc) == level && !visited[(nr as usize, nc as usize)] {
                    visited[(nr as usize, nc as usize)] = true;
                    stack.push((nr as usize, nc as usize));
                }
            }
        }
        m.bump(level, size);
    }
    m
}

pub fn glszm_features(m: &TextureMatrix, levels: &[u32]) -> Result<Vec<f64>> {
    if m.total() == 0 {
        return Err(Error::DegenerateRoi("GLSZM"));
    }
    Ok(size_family(&level_size_stats(m, levels)).to_vec())
}
