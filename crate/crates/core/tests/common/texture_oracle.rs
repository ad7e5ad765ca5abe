//! Exhaustive enumeration of texture matrices for tiny ROIs, written without
//! reference to the library's scanning code.

use fetalfuse::data::{Grid, MaskedImage};
use fetalfuse::radiomics::{
    discretize, glcm as lib_glcm, gldm as lib_gldm, glrlm as lib_glrlm, glszm as lib_glszm, TextureMatrix,
};
use rand::Rng;

pub const DIRECTIONS: [(isize, isize); 4] = [(0, 1), (1, 1), (1, 0), (1, -1)];

/// Dense count table, `rows × cols`, 1-based in both axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Counts {
    fn new(rows: usize, cols: usize) -> Self {
        Counts {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    fn add(&mut self, row: usize, col: usize) {
        self.data[(row - 1) * self.cols + col - 1] += 1;
    }
}

struct Roi {
    pixels: Vec<(isize, isize, usize)>,
    n_levels: usize,
}

fn roi(img: &MaskedImage, bin_width: f64) -> Roi {
    let (h, w) = img.pixels.dims();
    let mut raw = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if img.mask[(r, c)] != 0 {
                raw.push((r as isize, c as isize, img.pixels[(r, c)] as f64));
            }
        }
    }
    let lo = raw
        .iter()
        .map(|p| (p.2 / bin_width).floor())
        .fold(f64::INFINITY, f64::min);
    let pixels: Vec<_> = raw
        .iter()
        .map(|&(r, c, v)| (r, c, ((v / bin_width).floor() - lo) as usize + 1))
        .collect();
    let n_levels = pixels.iter().map(|p| p.2).max().unwrap();
    Roi { pixels, n_levels }
}

pub fn glcm(img: &MaskedImage, bin_width: f64) -> Vec<Counts> {
    let roi = roi(img, bin_width);
    DIRECTIONS
        .iter()
        .map(|&(dr, dc)| {
            let mut m = Counts::new(roi.n_levels, roi.n_levels);
            for &(r1, c1, l1) in &roi.pixels {
                for &(r2, c2, l2) in &roi.pixels {
                    let d = (r2 - r1, c2 - c1);
                    if d == (dr, dc) || d == (-dr, -dc) {
                        m.add(l1, l2);
                    }
                }
            }
            m
        })
        .collect()
}

pub fn glrlm(img: &MaskedImage, bin_width: f64) -> Vec<Counts> {
    let roi = roi(img, bin_width);
    let (h, w) = img.pixels.dims();
    let level = |r: isize, c: isize| roi.pixels.iter().find(|p| p.0 == r && p.1 == c).map(|p| p.2);
    let mut mats = Vec::new();
    let mut informative = Vec::new();
    for &(dr, dc) in &DIRECTIONS {
        let mut m = Counts::new(roi.n_levels, h.max(w));
        for &(r, c, l) in &roi.pixels {
            if level(r - dr, c - dc) == Some(l) {
                continue;
            }
            let mut len = 1;
            while level(r + dr * len as isize, c + dc * len as isize) == Some(l) {
                len += 1;
            }
            m.add(l, len);
        }
        // two ROI pixels on a common line along this direction
        let shares_line = roi.pixels.iter().any(|a| {
            roi.pixels
                .iter()
                .any(|b| (1..=h.max(w) as isize).any(|k| b.0 - a.0 == k * dr && b.1 - a.1 == k * dc))
        });
        mats.push(m);
        informative.push(shares_line);
    }
    if informative.iter().any(|&f| f) {
        for (m, keep) in mats.iter_mut().zip(informative) {
            if !keep {
                m.data.fill(0);
            }
        }
    }
    mats
}

pub fn glszm(img: &MaskedImage, bin_width: f64) -> Counts {
    let roi = roi(img, bin_width);
    let n = roi.pixels.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (roi.pixels[i], roi.pixels[j]);
            let touching = (a.0 - b.0).abs() <= 1 && (a.1 - b.1).abs() <= 1;
            if i != j && touching && a.2 == b.2 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut sizes = vec![0usize; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        sizes[r] += 1;
    }
    let mut m = Counts::new(roi.n_levels, n);
    for (p, &size) in roi.pixels.iter().zip(&sizes) {
        if size > 0 {
            m.add(p.2, size);
        }
    }
    m
}

pub fn gldm(img: &MaskedImage, bin_width: f64, alpha: usize) -> Counts {
    let roi = roi(img, bin_width);
    let mut m = Counts::new(roi.n_levels, 9);
    for &(r, c, l) in &roi.pixels {
        let dependent = roi
            .pixels
            .iter()
            .filter(|q| {
                let near = (q.0 - r).abs().max((q.1 - c).abs()) == 1;
                near && q.2.abs_diff(l) <= alpha
            })
            .count();
        m.add(l, dependent + 1);
    }
    m
}

/// A random ROI of at most 8×8 pixels with a non-empty mask.
pub fn random_roi(rng: &mut impl Rng) -> (MaskedImage, f64) {
    let h = rng.random_range(1..=8);
    let w = rng.random_range(1..=8);
    let top = rng.random_range(1..=255u8);
    let pixels = Grid::from_fn(h, w, |_, _| rng.random_range(0..=top));
    let density = rng.random_range(0.3..1.0);
    let mut mask = Grid::from_fn(h, w, |_, _| u8::from(rng.random_bool(density)));
    if mask.as_slice().iter().all(|&m| m == 0) {
        mask[(rng.random_range(0..h), rng.random_range(0..w))] = 1;
    }
    let bin_width = [5.0, 10.0, 25.0, 50.0][rng.random_range(0..4)];
    (MaskedImage::new("roi", pixels, mask, 1.0).unwrap(), bin_width)
}

fn counts(m: &TextureMatrix) -> Counts {
    Counts {
        rows: m.rows,
        cols: m.cols,
        data: m.counts.clone(),
    }
}

/// Runs the four matrix builders against the oracle on `n` random ROIs.
pub fn compare(n: usize, seed: u64) -> Result<(), String> {
    let mut rng = super::rng(seed);
    for case in 0..n {
        let (img, bw) = random_roi(&mut rng);
        let d = discretize(&img, bw).map_err(|e| e.to_string())?;
        let fail = |what: &str| {
            Err(format!(
                "case {case} ({what}): {:?} mask {:?} bw {bw}",
                img.pixels, img.mask
            ))
        };
        let got: Vec<Counts> = lib_glcm(&d).iter().map(counts).collect();
        if got != glcm(&img, bw) {
            return fail("GLCM");
        }
        let got: Vec<Counts> = lib_glrlm(&d).iter().map(counts).collect();
        if got != glrlm(&img, bw) {
            return fail("GLRLM");
        }
        if counts(&lib_glszm(&d)) != glszm(&img, bw) {
            return fail("GLSZM");
        }
        for alpha in [0, 1] {
            let m = lib_gldm(&d, alpha, 1).map_err(|e| e.to_string())?;
            if counts(&m) != gldm(&img, bw, alpha as usize) {
                return fail("GLDM");
            }
        }
    }
    Ok(())
}
