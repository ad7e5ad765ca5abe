//! Record types and on-disk interchange formats.
//!
//! Every stage of the pipeline talks to the next one through the files defined
//! here: `manifest.csv`, `features.csv`, `embeddings.csv`, `labels.csv`,
//! `predictions.csv` and the binary `model.fus1` checkpoint.

pub mod checkpoint;
pub mod image_io;
pub mod manifest;
pub mod tables;

use std::fs;
use std::io::Write;
use std::ops::{Index, IndexMut};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CheckpointTensor};
pub use image_io::{load_mask, load_masked_image, resize_mask, resize_pair, save_png, TARGET_SIZE};
pub use manifest::{load_manifest, Manifest, ManifestRow};
pub use tables::{
    read_embeddings_csv, read_features_csv, read_labels_csv, read_predictions_csv, write_embeddings_csv,
    write_features_csv, write_labels_csv, write_predictions_csv, write_report_csv, FeatureTable, LabelRow,
};

/// Width of the deep representation exported by the embedder.
pub const EMBED_DIM: usize = 512;

/// Upper plausibility bound on gestational age labels, in days.
pub const MAX_GA_DAYS: f64 = 330.0;

/// Dense row-major 2D array.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Grid {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Grid { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Grid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Value at a signed position, `None` outside the grid.
    pub fn get(&self, r: isize, c: isize) -> Option<T> {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
            None
        } else {
            Some(self.data[r as usize * self.cols + c as usize])
        }
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Row-major iterator over `(row, col, value)`.
    pub fn iter_indexed(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let cols = self.cols;
        self.data.iter().enumerate().map(move |(i, &v)| (i / cols, i % cols, v))
    }

    /// Rotates a quarter turn clockwise.
    pub fn rotate90(&self) -> Self {
        Grid::from_fn(self.cols, self.rows, |r, c| self[(self.rows - 1 - c, r)])
    }
}

impl<T> Index<(usize, usize)> for Grid<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Grid<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Binary ROI mask, 1 = foreground.
pub type Mask = Grid<u8>;

pub fn foreground_count(mask: &Mask) -> usize {
    mask.as_slice().iter().filter(|&&v| v != 0).count()
}

/// Grayscale ultrasound frame together with its ROI and calibration.
#[derive(Debug, Clone)]
pub struct MaskedImage {
    pub id: String,
    pub pixels: Grid<u8>,
    pub mask: Mask,
    pub pixel_size_mm: f64,
}

impl MaskedImage {
    pub fn new(id: impl Into<String>, pixels: Grid<u8>, mask: Mask, pixel_size_mm: f64) -> Result<Self> {
        let id = id.into();
        if pixels.dims() != mask.dims() {
            return Err(Error::Shape(format!(
                "{id}: image is {:?} but mask is {:?}",
                pixels.dims(),
                mask.dims()
            )));
        }
        if !(pixel_size_mm > 0.0 && pixel_size_mm.is_finite()) {
            return Err(Error::invalid(format!(
                "{id}: pixel size must be positive, got {pixel_size_mm}"
            )));
        }
        if mask.as_slice().iter().any(|&v| v > 1) {
            return Err(Error::invalid(format!("{id}: mask values must be 0 or 1")));
        }
        Ok(MaskedImage {
            id,
            pixels,
            mask,
            pixel_size_mm,
        })
    }

    pub fn roi_pixel_count(&self) -> usize {
        foreground_count(&self.mask)
    }
}

/// Named radiomic feature vector in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiomicVector {
    pub values: Vec<f64>,
    pub names: Arc<[String]>,
    pub standardized: bool,
}

impl RadiomicVector {
    pub fn new(values: Vec<f64>, names: Arc<[String]>) -> Result<Self> {
        if values.len() != names.len() {
            return Err(Error::Shape(format!(
                "{} values for {} feature names",
                values.len(),
                names.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature {} = {}", names[i], values[i])));
        }
        Ok(RadiomicVector {
            values,
            names,
            standardized: false,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// Deep representation of one (possibly augmented) image.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepEmbedding {
    pub id: String,
    pub values: Vec<f64>,
}

impl DeepEmbedding {
    /// Image id with any `#k` augmentation suffix removed.
    pub fn base_id(&self) -> &str {
        base_id(&self.id)
    }
}

/// Strips the `#k` augmentation suffix from a row key.
pub fn base_id(id: &str) -> &str {
    id.split_once('#').map_or(id, |(base, _)| base)
}

/// One training example for the fusion head.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub radiomics: RadiomicVector,
    pub embedding: DeepEmbedding,
    pub ga_days: f64,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        radiomics: RadiomicVector,
        embedding: DeepEmbedding,
        ga_days: f64,
    ) -> Result<Self> {
        let id = id.into();
        if !radiomics.standardized {
            return Err(Error::invalid(format!(
                "{id}: radiomics must be standardized before building a sample"
            )));
        }
        check_ga(&id, ga_days)?;
        Ok(Sample {
            id,
            radiomics,
            embedding,
            ga_days,
        })
    }
}

pub(crate) fn check_ga(id: &str, ga_days: f64) -> Result<()> {
    if ga_days > 0.0 && ga_days <= MAX_GA_DAYS {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{id}: gestational age {ga_days} days outside (0, {MAX_GA_DAYS}]"
        )))
    }
}

/// Formats a float with nine significant digits, shortest form.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".to_string() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        trim_zeros(&s).to_string()
    } else {
        let s = format!("{v:.8e}");
        let (mantissa, exponent) = s.split_once('e').expect("scientific format");
        format!("{}e{}", trim_zeros(mantissa), exponent)
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes `contents` to `path` through a temporary sibling and a rename, so a
/// failed stage never leaves a partial artifact behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}
