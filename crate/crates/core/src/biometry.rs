//! Head circumference from ROI masks and the gestational-age formula.

use rayon::prelude::*;

use crate::data::{check_ga, foreground_count, load_mask, resize_mask, LabelRow, Manifest, ManifestRow, Mask};
use crate::error::{Error, Result};
use crate::radiomics::shape2d::contour_perimeter;

/// How the head boundary length is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PerimeterMethod {
    /// Foreground pixels with a background 4-neighbour.
    #[default]
    EdgeCount,
    /// Marching-squares contour length.
    Contour,
}

/// Foreground pixels with at least one background 4-neighbour. Pixels on
/// the canvas border always count.
pub fn edge_pixel_count(mask: &Mask) -> Result<usize> {
    if foreground_count(mask) == 0 {
        return Err(Error::EmptyMask(None));
    }
    let n = mask
        .iter_indexed()
        .filter(|&(r, c, v)| {
            let (r, c) = (r as isize, c as isize);
            v != 0
                && [(-1, 0), (1, 0), (0, -1), (0, 1)]
                    .iter()
                    .any(|&(dr, dc)| mask.get(r + dr, c + dc).unwrap_or(0) == 0)
        })
        .count();
    Ok(n)
}

/// Head circumference in mm by edge counting.
pub fn hc_from_mask(mask: &Mask, pixel_size_mm: f64) -> Result<f64> {
    hc_from_mask_with(mask, pixel_size_mm, PerimeterMethod::EdgeCount)
}

pub fn hc_from_mask_with(mask: &Mask, pixel_size_mm: f64, method: PerimeterMethod) -> Result<f64> {
    if !(pixel_size_mm > 0.0 && pixel_size_mm.is_finite()) {
        return Err(Error::invalid(format!(
            "pixel size must be positive, got {pixel_size_mm}"
        )));
    }
    match method {
        PerimeterMethod::EdgeCount => Ok(edge_pixel_count(mask)? as f64 * pixel_size_mm),
        PerimeterMethod::Contour => {
            if foreground_count(mask) == 0 {
                return Err(Error::EmptyMask(None));
            }
            Ok(contour_perimeter(mask, pixel_size_mm))
        }
    }
}

/// Gestational age in days from head circumference in mm.
pub fn ga_from_hc(hc_mm: f64) -> Result<f64> {
    if !(hc_mm > 0.0 && hc_mm.is_finite()) {
        return Err(Error::invalid(format!(
            "head circumference must be positive, got {hc_mm}"
        )));
    }
    let l = hc_mm.ln();
    Ok((0.05970 * l * l + 0.000000006409 * hc_mm.powi(3) + 3.3258).exp())
}

/// Label for one manifest row. Rows carrying `hc_mm` skip the mask; the
/// others measure it after resampling to the working resolution.
pub fn label_row(row: &ManifestRow, method: PerimeterMethod) -> Result<LabelRow> {
    let hc_mm = match (row.hc_mm, row.pixel_size_mm) {
        (Some(hc), _) => hc,
        (None, Some(px)) => {
            let (mask, px) = resize_mask(&load_mask(&row.mask)?, px);
            hc_from_mask_with(&mask, px, method).map_err(|e| match e {
                Error::EmptyMask(None) => Error::EmptyMask(Some(row.id.clone())),
                e => e,
            })?
        }
        (None, None) => {
            return Err(Error::invalid(format!("{}: neither pixel size nor HC given", row.id)));
        }
    };
    let ga_days = ga_from_hc(hc_mm)?;
    check_ga(&row.id, ga_days)?;
    Ok(LabelRow {
        id: row.id.clone(),
        hc_mm,
        ga_days,
    })
}

/// Original-resolution pixel size for a row. Rows without one get it from
/// `hc_mm` divided by the edge count of the resampled mask, the inverse of
/// the measurement [`label_row`] would make.
pub fn pixel_size_for(row: &ManifestRow) -> Result<f64> {
    match (row.pixel_size_mm, row.hc_mm) {
        (Some(px), _) => Ok(px),
        (None, Some(hc)) => {
            let mask = load_mask(&row.mask)?;
            let (resized, scale) = resize_mask(&mask, 1.0);
            let edges = edge_pixel_count(&resized).map_err(|e| match e {
                Error::EmptyMask(None) => Error::EmptyMask(Some(row.id.clone())),
                e => e,
            })?;
            Ok(hc / (edges as f64 * scale))
        }
        (None, None) => Err(Error::invalid(format!("{}: neither pixel size nor HC given", row.id))),
    }
}

/// One label per manifest row, in manifest order.
pub fn label_dataset(manifest: &Manifest, method: PerimeterMethod) -> Vec<Result<LabelRow>> {
    manifest.rows.par_iter().map(|r| label_row(r, method)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Grid;

    fn square(canvas: usize, at: usize, n: usize) -> Mask {
        Grid::from_fn(canvas, canvas, |r, c| {
            u8::from((at..at + n).contains(&r) && (at..at + n).contains(&c))
        })
    }

    #[test]
    fn edge_counts() {
        assert_eq!(edge_pixel_count(&square(20, 5, 10)).unwrap(), 36);
        assert_eq!(edge_pixel_count(&square(5, 2, 1)).unwrap(), 1);
        assert_eq!(edge_pixel_count(&Grid::filled(7, 11, 1)).unwrap(), 2 * (7 + 11) - 4);
        assert!(matches!(
            edge_pixel_count(&Grid::filled(3, 3, 0)),
            Err(Error::EmptyMask(_))
        ));
    }

    #[test]
    fn hc_is_count_times_size() {
        assert_eq!(hc_from_mask(&square(20, 5, 10), 0.5).unwrap(), 18.0);
        assert!(hc_from_mask(&square(20, 5, 10), 0.0).is_err());
    }

    #[test]
    fn ga_rejects_non_positive() {
        assert!(ga_from_hc(0.0).is_err());
        assert!(ga_from_hc(-3.0).is_err());
        assert!(ga_from_hc(f64::NAN).is_err());
    }

    #[test]
    fn label_from_hc_skips_mask() {
        let row = ManifestRow {
            id: "a".into(),
            image: "missing.png".into(),
            mask: "missing.png".into(),
            pixel_size_mm: None,
            hc_mm: Some(150.0),
        };
        let l = label_row(&row, PerimeterMethod::EdgeCount).unwrap();
        assert_eq!(l.ga_days, ga_from_hc(150.0).unwrap());
    }
}
