use super::discretize::DiscretizedRoi;
use super::matrix::{average_rows, LevelSizeStats, TextureKind, TextureMatrix, PLANAR_OFFSETS};
use crate::error::{Error, Result};

pub const GLRLM_FEATURES: [&str; 16] = [
    "ShortRunEmphasis",
    "LongRunEmphasis",
    "GrayLevelNonUniformity",
    "GrayLevelNonUniformityNormalized",
    "RunLengthNonUniformity",
    "RunLengthNonUniformityNormalized",
    "RunPercentage",
    "GrayLevelVariance",
    "RunVariance",
    "RunEntropy",
    "LowGrayLevelRunEmphasis",
    "HighGrayLevelRunEmphasis",
    "ShortRunLowGrayLevelEmphasis",
    "ShortRunHighGrayLevelEmphasis",
    "LongRunLowGrayLevelEmphasis",
    "LongRunHighGrayLevelEmphasis",
];

/// Run-length counts per planar direction. A direction in which no scan line
/// holds two ROI pixels carries no run information and is left empty, unless
/// that holds for every direction, in which case the length-1 runs are kept.
pub fn glrlm(d: &DiscretizedRoi) -> Vec<TextureMatrix> {
    let (h, w) = d.levels.dims();
    let max_run = h.max(w);
    let mut mats = Vec::with_capacity(PLANAR_OFFSETS.len());
    let mut informative = Vec::with_capacity(PLANAR_OFFSETS.len());
    for &(dr, dc) in &PLANAR_OFFSETS {
        let mut m = TextureMatrix::zeros(TextureKind::Glrlm, d.n_levels as usize, max_run);
        m.offset = Some((dr, dc));
        let mut multi = false;
        for (r0, c0) in line_starts(h, w, dr, dc) {
            let (mut r, mut c) = (r0 as isize, c0 as isize);
            let mut current = 0u32;
            let mut len = 0usize;
            let mut members = 0usize;
            while r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w {
                let level = d.levels[(r as usize, c as usize)];
                if level > 0 {
                    members += 1;
                }
                if level != current {
                    if current > 0 {
                        m.bump(current, len);
                    }
                    current = level;
                    len = 0;
                }
                len += 1;
                r += dr;
                c += dc;
            }
            if current > 0 {
                m.bump(current, len);
            }
            multi |= members > 1;
        }
        mats.push(m);
        informative.push(multi);
    }
    if informative.iter().any(|&f| f) {
        for (m, keep) in mats.iter_mut().zip(informative) {
            if !keep {
                m.counts.iter_mut().for_each(|c| *c = 0);
            }
        }
    }
    mats
}

/// Pixels from which a scan along `(dr, dc)` starts: those whose predecessor
/// lies outside the canvas.
pub(crate) fn line_starts(h: usize, w: usize, dr: isize, dc: isize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let pr = r as isize - dr;
            let pc = c as isize - dc;
            if pr < 0 || pc < 0 || pr as usize >= h || pc as usize >= w {
                out.push((r, c));
            }
        }
    }
    out
}

/// Keeps only size columns that have at least one count.
pub(crate) fn level_size_stats(m: &TextureMatrix, levels: &[u32]) -> LevelSizeStats {
    let raw = m.level_rows(levels);
    let used: Vec<usize> = (0..m.cols)
        .filter(|&j| (0..levels.len()).any(|i| raw[i * m.cols + j] > 0.0))
        .collect();
    let mut p = Vec::with_capacity(levels.len() * used.len());
    for i in 0..levels.len() {
        p.extend(used.iter().map(|&j| raw[i * m.cols + j]));
    }
    LevelSizeStats::new(
        p,
        levels.iter().map(|&l| l as f64).collect(),
        used.iter().map(|&j| (j + 1) as f64).collect(),
    )
}

pub(crate) fn size_family(s: &LevelSizeStats) -> [f64; 16] {
    [
        s.small_emphasis(),
        s.large_emphasis(),
        s.level_nonuniformity(),
        s.level_nonuniformity_normalized(),
        s.size_nonuniformity(),
        s.size_nonuniformity_normalized(),
        s.total / s.covered(),
        s.level_variance(),
        s.size_variance(),
        s.entropy(),
        s.low_level_emphasis(),
        s.high_level_emphasis(),
        s.small_low(),
        s.small_high(),
        s.large_low(),
        s.large_high(),
    ]
}

/// The 16 run-length features averaged over directions that carry runs.
pub fn glrlm_features(mats: &[TextureMatrix], levels: &[u32]) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = mats
        .iter()
        .filter(|m| m.total() > 0)
        .map(|m| size_family(&level_size_stats(m, levels)).to_vec())
        .collect();
    if rows.is_empty() {
        return Err(Error::DegenerateRoi("GLRLM"));
    }
    Ok(average_rows(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Grid, MaskedImage};
    use crate::radiomics::discretize::discretize;

    fn roi(px: Grid<u8>, mask: Grid<u8>) -> DiscretizedRoi {
        discretize(&MaskedImage::new("t", px, mask, 1.0).unwrap(), 25.0).unwrap()
    }

    #[test]
    fn constant_square_horizontal_runs() {
        let n = 5;
        let d = roi(Grid::filled(n, n, 9), Grid::filled(n, n, 1));
        let mats = glrlm(&d);
        assert_eq!(mats[0].get(1, n), n as u64);
        assert_eq!(mats[0].total(), n as u64);
        // diagonal runs have lengths 1..n..1
        assert_eq!(mats[1].total(), 2 * n as u64 - 1);
    }

    #[test]
    fn mask_gap_breaks_runs() {
        let px = Grid::filled(1, 5, 0u8);
        let mask = Grid::from_vec(1, 5, vec![1, 1, 0, 1, 1]).unwrap();
        let mats = glrlm(&roi(px, mask));
        assert_eq!(mats[0].get(1, 2), 2);
        assert_eq!(mats[0].total(), 2);
        // vertical lines hold one pixel each: no run information
        assert_eq!(mats[2].total(), 0);
    }

    #[test]
    fn isolated_pixels_fall_back_to_unit_runs() {
        let px = Grid::filled(2, 3, 0u8);
        let mask = Grid::from_vec(2, 3, vec![1, 0, 0, 0, 0, 1]).unwrap();
        let mats = glrlm(&roi(px, mask));
        assert!(mats.iter().all(|m| m.get(1, 1) == 2 && m.total() == 2));
        let f = glrlm_features(&mats, &[1]).unwrap();
        assert!(f.iter().all(|v| v.is_finite()));
        assert_eq!(f[0], 1.0);
    }

    #[test]
    fn run_percentage_of_alternating_row() {
        let px = Grid::from_vec(1, 4, vec![0, 30, 0, 30]).unwrap();
        let d = roi(px, Grid::filled(1, 4, 1));
        let f = glrlm_features(&glrlm(&d), &d.present_levels()).unwrap();
        assert_eq!(f[6], 1.0);
    }
}
