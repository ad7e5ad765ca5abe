use std::fs;
use std::path::Path;

use image::imageops::{self, FilterType};
use image::{GrayImage, ImageFormat};

use super::{foreground_count, Grid, MaskedImage};
use crate::error::{Error, Result};

/// Side length every image and mask is resampled to before extraction.
pub const TARGET_SIZE: u32 = 256;

fn read_gray(path: &Path) -> Result<GrayImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.into_luma8())
}

fn to_grid(img: &GrayImage) -> Grid<u8> {
    Grid::from_vec(img.height() as usize, img.width() as usize, img.as_raw().clone())
        .expect("image buffer matches its dimensions")
}

fn to_image(g: &Grid<u8>) -> GrayImage {
    GrayImage::from_raw(g.cols() as u32, g.rows() as u32, g.as_slice().to_vec()).expect("grid matches its dimensions")
}

/// Normalizes a {0,1} or {0,255} mask to {0,1}.
fn binarize_mask(img: &GrayImage, path: &Path) -> Result<GrayImage> {
    let raw = img.as_raw();
    if raw.iter().any(|&v| v != 0 && v != 1 && v != 255) {
        return Err(Error::invalid(format!(
            "{}: mask values must be 0/1 or 0/255",
            path.display()
        )));
    }
    let bin = raw.iter().map(|&v| u8::from(v != 0)).collect();
    Ok(GrayImage::from_raw(img.width(), img.height(), bin).expect("same size"))
}

/// Resamples an image/mask pair to `TARGET_SIZE` squared. The image is
/// interpolated linearly, the mask by nearest neighbour. Returns the new
/// pixel size, scaled by the width ratio.
pub fn resize_pair(pixels: &Grid<u8>, mask: &Grid<u8>, pixel_size_mm: f64) -> (Grid<u8>, Grid<u8>, f64) {
    let (h, w) = pixels.dims();
    let t = TARGET_SIZE as usize;
    if h == t && w == t {
        return (pixels.clone(), mask.clone(), pixel_size_mm);
    }
    if h != w {
        log::warn!("non-square image {w}x{h}: pixel size rescaled by width only");
    }
    let img = imageops::resize(&to_image(pixels), TARGET_SIZE, TARGET_SIZE, FilterType::Triangle);
    let msk = imageops::resize(&to_image(mask), TARGET_SIZE, TARGET_SIZE, FilterType::Nearest);
    let msk = to_grid(&msk).map(|v| u8::from(v != 0));
    (to_grid(&img), msk, pixel_size_mm * w as f64 / TARGET_SIZE as f64)
}

/// Resamples a mask alone, as in [`resize_pair`].
pub fn resize_mask(mask: &Grid<u8>, pixel_size_mm: f64) -> (Grid<u8>, f64) {
    let t = TARGET_SIZE as usize;
    if mask.dims() == (t, t) {
        return (mask.clone(), pixel_size_mm);
    }
    let msk = imageops::resize(&to_image(mask), TARGET_SIZE, TARGET_SIZE, FilterType::Nearest);
    (
        to_grid(&msk).map(|v| u8::from(v != 0)),
        pixel_size_mm * mask.cols() as f64 / TARGET_SIZE as f64,
    )
}

/// Loads an 8-bit PNG and its ROI mask and resamples both to the working
/// resolution.
pub fn load_masked_image(id: &str, image_path: &Path, mask_path: &Path, pixel_size_mm: f64) -> Result<MaskedImage> {
    let img = read_gray(image_path)?;
    let mask = binarize_mask(&read_gray(mask_path)?, mask_path)?;
    if img.dimensions() != mask.dimensions() {
        return Err(Error::Shape(format!(
            "{id}: image is {:?} but mask is {:?}",
            img.dimensions(),
            mask.dimensions()
        )));
    }
    let (pixels, mask, size) = resize_pair(&to_grid(&img), &to_grid(&mask), pixel_size_mm);
    if foreground_count(&mask) == 0 {
        return Err(Error::EmptyMask(Some(id.to_string())));
    }
    MaskedImage::new(id, pixels, mask, size)
}

/// Reads only the mask, binarized, at original resolution.
pub fn load_mask(path: &Path) -> Result<Grid<u8>> {
    Ok(to_grid(&binarize_mask(&read_gray(path)?, path)?))
}

/// Writes a grid as an 8-bit grayscale PNG.
pub fn save_png(path: &Path, g: &Grid<u8>) -> Result<()> {
    let mut buf = std::io::Cursor::new(Vec::new());
    to_image(g)
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    super::write_atomic(path, buf.get_ref())
}
