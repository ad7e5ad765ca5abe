use crate::data::{Grid, MaskedImage};
use crate::error::{Error, Result};

/// Gray levels of an ROI after fixed-width binning. Level 0 marks background.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedRoi {
    pub levels: Grid<u32>,
    pub n_levels: u32,
    pub roi_coords: Vec<(usize, usize)>,
}

impl DiscretizedRoi {
    /// Sorted levels that occur at least once inside the ROI.
    pub fn present_levels(&self) -> Vec<u32> {
        let mut seen = vec![false; self.n_levels as usize + 1];
        for &(r, c) in &self.roi_coords {
            seen[self.levels[(r, c)] as usize] = true;
        }
        (1..=self.n_levels).filter(|&l| seen[l as usize]).collect()
    }

    pub fn level_at(&self, r: isize, c: isize) -> u32 {
        self.levels.get(r, c).unwrap_or(0)
    }
}

/// Bins ROI intensities into `bin_width`-wide levels. Bin edges sit on
/// multiples of the bin width, so the lowest level is the bin that contains
/// the ROI minimum.
pub fn discretize(img: &MaskedImage, bin_width: f64) -> Result<DiscretizedRoi> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
    }
    let roi_coords: Vec<(usize, usize)> = img
        .mask
        .iter_indexed()
        .filter(|&(_, _, m)| m != 0)
        .map(|(r, c, _)| (r, c))
        .collect();
    if roi_coords.is_empty() {
        return Err(Error::EmptyMask(Some(img.id.clone())));
    }
    let min = roi_coords
        .iter()
        .map(|&(r, c)| img.pixels[(r, c)])
        .min()
        .expect("non-empty ROI") as f64;
    let base = (min / bin_width).floor();
    let (h, w) = img.pixels.dims();
    let mut levels = Grid::filled(h, w, 0u32);
    let mut n_levels = 0;
    for &(r, c) in &roi_coords {
        let v = img.pixels[(r, c)] as f64;
        let level = ((v / bin_width).floor() - base) as u32 + 1;
        levels[(r, c)] = level;
        n_levels = n_levels.max(level);
    }
    Ok(DiscretizedRoi {
        levels,
        n_levels,
        roi_coords,
    })
}
