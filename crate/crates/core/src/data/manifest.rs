use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 5] = ["id", "image", "mask", "pixel_size_mm", "hc_mm"];

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub id: String,
    pub image: PathBuf,
    pub mask: PathBuf,
    pub pixel_size_mm: Option<f64>,
    pub hc_mm: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn parse_optional(field: &str, what: &str, id: &str) -> Result<Option<f64>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let v: f64 = field
        .parse()
        .map_err(|_| Error::invalid(format!("{id}: cannot parse {what} {field:?}")))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!("{id}: {what} must be positive, got {v}")));
    }
    Ok(Some(v))
}

/// Reads and validates `manifest.csv`. Relative image paths are resolved
/// against the manifest's own directory.
pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let header = reader.headers().map_err(|e| Error::csv(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::invalid(format!(
            "{}: expected header {}, found {}",
            path.display(),
            MANIFEST_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(Error::invalid(format!("{}: empty id", path.display())));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let pixel_size_mm = parse_optional(&record[3], "pixel_size_mm", &id)?;
        let hc_mm = parse_optional(&record[4], "hc_mm", &id)?;
        if pixel_size_mm.is_none() && hc_mm.is_none() {
            return Err(Error::invalid(format!("{id}: row needs pixel_size_mm or hc_mm")));
        }
        rows.push(ManifestRow {
            image: base.join(&record[1]),
            mask: base.join(&record[2]),
            id,
            pixel_size_mm,
            hc_mm,
        });
    }
    Ok(Manifest { rows })
}
