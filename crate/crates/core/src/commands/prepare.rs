use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::Args;
use rayon::prelude::*;

use super::require_file;
use crate::biometry::{label_dataset, pixel_size_for, PerimeterMethod};
use crate::data::{
    load_manifest, load_masked_image, write_features_csv, write_labels_csv, ManifestRow, RadiomicVector,
};
use crate::error::{Error, Result};
use crate::radiomics::{extract_all, ExtractConfig};
use crate::synth::{write_dataset, SynthConfig};

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 25.0)]
    pub bin_width: f64,
    /// Feature to leave out, e.g. glcm.SumAverage. Repeatable.
    #[arg(long = "disable-feature", value_name = "NAME")]
    pub disable_feature: Vec<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, env = "FETALFUSE_JOBS", default_value_t = 0)]
    pub jobs: usize,
    /// Drop rows that fail instead of aborting.
    #[arg(long)]
    pub skip_errors: bool,
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Measure perimeters along the contour instead of counting edge pixels.
    #[arg(long)]
    pub contour: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 320)]
    pub size: usize,
    /// Every k-th row carries hc_mm instead of a pixel size; 0 disables.
    #[arg(long, default_value_t = 3)]
    pub hc_every: usize,
}

fn extract_row(row: &ManifestRow, cfg: &ExtractConfig) -> Result<RadiomicVector> {
    let px = pixel_size_for(row)?;
    let img = load_masked_image(&row.id, &row.image, &row.mask, px)?;
    extract_all(&img, cfg)
}

pub(super) fn extract(a: &ExtractArgs) -> Result<()> {
    require_file(&a.manifest)?;
    let cfg = ExtractConfig::default()
        .with_bin_width(a.bin_width)?
        .disable(&a.disable_feature)?;
    let manifest = load_manifest(&a.manifest)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start {} workers: {e}", a.jobs)))?;
    let total = manifest.len();
    let done = AtomicUsize::new(0);
    let results: Vec<Result<RadiomicVector>> = pool.install(|| {
        manifest
            .rows
            .par_iter()
            .map(|row| {
                let r = extract_row(row, &cfg);
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                if n.is_multiple_of(10) || n == total {
                    log::info!("extracted {n}/{total}");
                }
                r
            })
            .collect()
    });
    let mut rows = Vec::with_capacity(total);
    let mut skipped = 0;
    for (row, r) in manifest.rows.iter().zip(results) {
        match r {
            Ok(v) => rows.push((row.id.clone(), v)),
            Err(e) if a.skip_errors => {
                log::warn!("skipping {}: {e}", row.id);
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    write_features_csv(&a.out, &cfg.names(), &rows)?;
    log::info!("wrote {} rows to {} ({skipped} skipped)", rows.len(), a.out.display());
    Ok(())
}

pub(super) fn label(a: &LabelArgs) -> Result<()> {
    require_file(&a.manifest)?;
    let manifest = load_manifest(&a.manifest)?;
    let method = if a.contour {
        PerimeterMethod::Contour
    } else {
        PerimeterMethod::EdgeCount
    };
    let labels = label_dataset(&manifest, method)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    write_labels_csv(&a.out, &labels)?;
    log::info!("wrote {} labels to {}", labels.len(), a.out.display());
    Ok(())
}

pub(super) fn synth(a: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n: a.n,
        seed: a.seed,
        size: a.size,
        hc_every: a.hc_every,
        ..SynthConfig::default()
    };
    let heads = write_dataset(&a.out, &cfg)?;
    log::info!("wrote {} synthetic heads to {}", heads.len(), a.out.display());
    Ok(())
}
