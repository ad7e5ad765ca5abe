//! Synthetic fetal-head datasets: speckled elliptical heads, a manifest, and
//! stand-in deep embeddings, so the whole pipeline runs without real data.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data::manifest::MANIFEST_HEADER;
use crate::data::{format_sig9, save_png, write_embeddings_csv, write_report_csv, DeepEmbedding, Grid, EMBED_DIM};
use crate::error::{Error, Result};

/// The projection plays the role of a frozen backbone, so it does not
/// depend on the dataset seed.
const PROJECTION_SEED: u64 = 0x5EED_F00D;
const N_STATS: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub seed: u64,
    pub size: usize,
    pub embed_dim: usize,
    /// Every k-th row carries `hc_mm` instead of a pixel size; 0 disables.
    pub hc_every: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 32,
            seed: 0,
            size: 320,
            embed_dim: EMBED_DIM,
            hc_every: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthHead {
    pub id: String,
    pub pixels: Grid<u8>,
    pub mask: Grid<u8>,
    pub pixel_size_mm: f64,
    /// Ramanujan perimeter of the drawn ellipse, in mm.
    pub hc_mm: f64,
}

fn ramanujan(a: f64, b: f64) -> f64 {
    PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt())
}

/// Rayleigh-distributed multiplicative speckle with unit mean.
fn speckle(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    (-2.0 * u.ln()).sqrt() / (PI / 2.0).sqrt()
}

pub fn synth_head(id: &str, size: usize, rng: &mut ChaCha8Rng) -> SynthHead {
    let s = size as f64;
    let growth: f64 = rng.random_range(0.0..1.0);
    let hc_mm = 90.0 + 240.0 * growth;
    let a = s * (0.18 + 0.17 * growth + rng.random_range(-0.02..0.02));
    let b = a * rng.random_range(0.72..0.9);
    let theta: f64 = rng.random_range(0.0..PI);
    let (cy, cx) = (
        s / 2.0 + rng.random_range(-0.05..0.05) * s,
        s / 2.0 + rng.random_range(-0.05..0.05) * s,
    );
    let (sin, cos) = theta.sin_cos();
    let inside = |r: usize, c: usize| {
        let (dy, dx) = (r as f64 + 0.5 - cy, c as f64 + 0.5 - cx);
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    };
    let mask = Grid::from_fn(size, size, |r, c| u8::from(inside(r, c)));
    let tissue = 70.0 + 90.0 * growth;
    let pixels = Grid::from_fn(size, size, |r, c| {
        let (dy, dx) = (r as f64 + 0.5 - cy, c as f64 + 0.5 - cx);
        let u = dx * cos + dy * sin;
        let v = -dx * sin + dy * cos;
        let rho = ((u / a).powi(2) + (v / b).powi(2)).sqrt();
        let base = if rho <= 1.0 {
            // bright skull rim, darker brain with a midline echo
            let rim = (-((1.0 - rho) / 0.06).powi(2)).exp() * 120.0;
            let midline = (-(v / (0.03 * b)).powi(2)).exp() * 40.0 * (1.0 - rho);
            tissue + rim + midline
        } else {
            30.0
        };
        (base * speckle(rng)).round().clamp(0.0, 255.0) as u8
    });
    SynthHead {
        id: id.to_string(),
        pixels,
        mask,
        pixel_size_mm: hc_mm / ramanujan(a, b),
        hc_mm,
    }
}

/// Summary statistics an image backbone could plausibly encode: global and
/// ROI intensity moments, ROI extent, and a coarse intensity histogram.
fn image_stats(h: &SynthHead) -> [f64; N_STATS] {
    let px = h.pixels.as_slice();
    let mk = h.mask.as_slice();
    let n = px.len() as f64;
    let mut out = [0.0; N_STATS];
    let mean = px.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = px.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    let roi: Vec<f64> = px
        .iter()
        .zip(mk)
        .filter(|(_, &m)| m != 0)
        .map(|(&v, _)| v as f64)
        .collect();
    let roi_n = roi.len().max(1) as f64;
    let roi_mean = roi.iter().sum::<f64>() / roi_n;
    let roi_var = roi.iter().map(|v| (v - roi_mean).powi(2)).sum::<f64>() / roi_n;
    out[0] = mean / 255.0;
    out[1] = var.sqrt() / 255.0;
    out[2] = roi_mean / 255.0;
    out[3] = roi_var.sqrt() / 255.0;
    out[4] = roi.len() as f64 / n;
    let (rows, cols) = h.mask.dims();
    let (mut rmin, mut rmax, mut cmin, mut cmax) = (rows, 0, cols, 0);
    for (r, c, m) in h.mask.iter_indexed() {
        if m != 0 {
            rmin = rmin.min(r);
            rmax = rmax.max(r);
            cmin = cmin.min(c);
            cmax = cmax.max(c);
        }
    }
    out[5] = (rmax.saturating_sub(rmin)) as f64 / rows as f64;
    out[6] = (cmax.saturating_sub(cmin)) as f64 / cols as f64;
    out[7] = 1.0;
    for &v in px {
        out[8 + (v as usize * 16 / 256)] += 1.0 / n;
    }
    out
}

/// Fixed random projection of the image statistics followed by ReLU.
pub fn embed(h: &SynthHead, dim: usize) -> DeepEmbedding {
    let stats = image_stats(h);
    let mut rng = ChaCha8Rng::seed_from_u64(PROJECTION_SEED);
    let scale = (3.0 / N_STATS as f64).sqrt();
    let values = (0..dim)
        .map(|_| {
            let z: f64 = stats.iter().map(|s| s * rng.random_range(-scale..scale) * 4.0).sum();
            z.max(0.0)
        })
        .collect();
    DeepEmbedding {
        id: h.id.clone(),
        values,
    }
}

/// Writes `images/`, `masks/`, `manifest.csv` and `embeddings.csv` under
/// `dir`. Returns the generated heads in manifest order.
pub fn write_dataset(dir: &Path, cfg: &SynthConfig) -> Result<Vec<SynthHead>> {
    if cfg.n == 0 || cfg.size < 16 || cfg.embed_dim == 0 {
        return Err(Error::invalid(format!(
            "invalid synthetic dataset configuration {cfg:?}"
        )));
    }
    for sub in ["images", "masks"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let heads: Vec<SynthHead> = (0..cfg.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            synth_head(&format!("s{i:04}"), cfg.size, &mut rng)
        })
        .collect();
    heads.par_iter().try_for_each(|h| {
        save_png(&dir.join("images").join(format!("{}.png", h.id)), &h.pixels)?;
        save_png(
            &dir.join("masks").join(format!("{}_mask.png", h.id)),
            &h.mask.map(|v| v * 255),
        )
    })?;
    let rows: Vec<Vec<String>> = heads
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let by_hc = cfg.hc_every > 0 && i % cfg.hc_every == cfg.hc_every - 1;
            let (px, hc) = if by_hc {
                (String::new(), format_sig9(h.hc_mm))
            } else {
                (format_sig9(h.pixel_size_mm), String::new())
            };
            vec![
                h.id.clone(),
                format!("images/{}.png", h.id),
                format!("masks/{}_mask.png", h.id),
                px,
                hc,
            ]
        })
        .collect();
    write_report_csv(&dir.join("manifest.csv"), &MANIFEST_HEADER, &rows)?;
    let emb: Vec<DeepEmbedding> = heads.par_iter().map(|h| embed(h, cfg.embed_dim)).collect();
    write_embeddings_csv(&dir.join("embeddings.csv"), &emb)?;
    Ok(heads)
}
