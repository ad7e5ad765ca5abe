use super::matrix::NEIGHBOURS_8;
use crate::data::{foreground_count, Grid, Mask};
use crate::error::{Error, Result};

pub const SHAPE2D_FEATURES: [&str; 9] = [
    "MeshSurface",
    "PixelSurface",
    "Perimeter",
    "PerimeterSurfaceRatio",
    "Sphericity",
    "MaximumDiameter",
    "MajorAxisLength",
    "MinorAxisLength",
    "Elongation",
];

// Square corners, clockwise from the top-left, as (row, col) steps.
const CORNERS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 1), (1, 0)];

// Contour segments per corner configuration, as pairs of edge indices.
const SEGMENTS: [&[(usize, usize)]; 16] = [
    &[],
    &[(3, 0)],
    &[(0, 1)],
    &[(3, 1)],
    &[(1, 2)],
    &[(1, 2), (3, 0)],
    &[(0, 2)],
    &[(3, 2)],
    &[(2, 3)],
    &[(2, 0)],
    &[(0, 1), (2, 3)],
    &[(2, 1)],
    &[(1, 3)],
    &[(1, 0)],
    &[(0, 3)],
    &[],
];

// Midpoint of each square edge (top, right, bottom, left) as (row, col).
const EDGE_MIDPOINTS: [(f64, f64); 4] = [(0.0, 0.5), (0.5, 1.0), (1.0, 0.5), (0.5, 0.0)];

/// Keeps the largest 8-connected foreground component. Also returns the
/// number of components found.
pub fn largest_component(mask: &Mask) -> (Mask, usize) {
    let (h, w) = mask.dims();
    let mut label = Grid::filled(h, w, 0u32);
    let mut sizes = vec![0usize];
    let mut stack = Vec::new();
    for (r0, c0, v) in mask.iter_indexed() {
        if v == 0 || label[(r0, c0)] != 0 {
            continue;
        }
        let id = sizes.len() as u32;
        label[(r0, c0)] = id;
        stack.push((r0, c0));
        let mut size = 0;
        while let Some((r, c)) = stack.pop() {
            size += 1;
            for (dr, dc) in NEIGHBOURS_8 {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if mask.get(nr, nc).unwrap_or(0) != 0 && label[(nr as usize, nc as usize)] == 0 {
                    label[(nr as usize, nc as usize)] = id;
                    stack.push((nr as usize, nc as usize));
                }
            }
        }
        sizes.push(size);
    }
    let count = sizes.len() - 1;
    if count <= 1 {
        return (mask.clone(), count);
    }
    // first component wins ties
    let best = (1..sizes.len()).fold(1, |b, i| if sizes[i] > sizes[b] { i } else { b }) as u32;
    (label.map(|l| u8::from(l == best)), count)
}

/// Contour area, contour length and maximum vertex distance from marching
/// squares over the zero-padded mask.
fn contour(mask: &Mask, s: f64) -> (f64, f64, f64) {
    let (h, w) = mask.dims();
    let at = |r: usize, c: usize| r >= 1 && c >= 1 && r <= h && c <= w && mask[(r - 1, c - 1)] != 0;
    let mut cross = 0.0;
    let mut perimeter = 0.0;
    let mut vertices: Vec<(f64, f64)> = Vec::new();
    for iy in 0..=h {
        for ix in 0..=w {
            let mut sq = 0usize;
            for (k, &(dy, dx)) in CORNERS.iter().enumerate() {
                if at(iy + dy, ix + dx) {
                    sq |= 1 << k;
                }
            }
            if sq == 0 || sq == 0xF {
                continue;
            }
            let point = |e: usize| {
                let (dy, dx) = EDGE_MIDPOINTS[e];
                ((iy as f64 + dy) * s, (ix as f64 + dx) * s)
            };
            for &(ea, eb) in SEGMENTS[sq] {
                let a = point(ea);
                let b = point(eb);
                cross += a.0 * b.1 - b.0 * a.1;
                perimeter += ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            }
            // each contour vertex is stored once, on the left or bottom edge
            let flipped = if sq > 7 { sq ^ 0xF } else { sq };
            if flipped & 1 != 0 {
                vertices.push(point(3));
            }
            if flipped & 4 != 0 {
                vertices.push(point(2));
            }
        }
    }
    let mut diameter_sq: f64 = 0.0;
    for (i, a) in vertices.iter().enumerate() {
        for b in &vertices[..i] {
            diameter_sq = diameter_sq.max((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2));
        }
    }
    (cross / 2.0, perimeter, diameter_sq.sqrt())
}

/// Length of the marching-squares contour of the whole mask.
pub fn contour_perimeter(mask: &Mask, pixel_size_mm: f64) -> f64 {
    contour(mask, pixel_size_mm).1
}

/// Eigenvalues (largest first) of the covariance of physical pixel
/// coordinates.
fn principal_moments(mask: &Mask, s: f64) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = mask
        .iter_indexed()
        .filter(|&(_, _, v)| v != 0)
        .map(|(r, c, _)| (r as f64 * s, c as f64 * s))
        .collect();
    let n = pts.len() as f64;
    let my = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut syy, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for &(y, x) in &pts {
        syy += (y - my) * (y - my);
        sxx += (x - mx) * (x - mx);
        sxy += (y - my) * (x - mx);
    }
    let (a, c, b) = (syy / n, sxx / n, sxy / n);
    let mid = (a + c) / 2.0;
    let rad = (((a - c) / 2.0).powi(2) + b * b).sqrt();
    let clamp = |v: f64| if v < 0.0 && v > -1e-10 { 0.0 } else { v };
    (clamp(mid + rad), clamp(mid - rad))
}

/// Shape descriptors of the ROI in millimetres. Multi-part masks are reduced
/// to their largest 8-connected part first.
pub fn shape2d_features(mask: &Mask, pixel_size_mm: f64) -> Result<Vec<f64>> {
    if pixel_size_mm.is_nan() || pixel_size_mm <= 0.0 {
        return Err(Error::invalid(format!(
            "pixel size must be positive, got {pixel_size_mm}"
        )));
    }
    let (mask, parts) = largest_component(mask);
    if parts == 0 {
        return Err(Error::EmptyMask(None));
    }
    if parts > 1 {
        log::warn!("mask has {parts} connected parts; shape uses the largest");
    }
    let s = pixel_size_mm;
    let (area, perimeter, diameter) = contour(&mask, s);
    let pixel_area = foreground_count(&mask) as f64 * s * s;
    let (major, minor) = principal_moments(&mask, s);
    let elongation = if major > 0.0 { (minor / major).sqrt() } else { 1.0 };
    Ok(vec![
        area,
        pixel_area,
        perimeter,
        perimeter / area,
        2.0 * (std::f64::consts::PI * area).sqrt() / perimeter,
        diameter,
        4.0 * major.sqrt(),
        4.0 * minor.sqrt(),
        elongation,
    ])
}
