//! 2D radiomic feature extraction.
//!
//! Intensities inside the ROI are binned with a fixed bin width, then six
//! feature classes are computed: shape (9), first order (18), co-occurrence
//! (24), run length (16), size zone (16) and dependence (14). The canonical
//! order of the 97 names is [`feature_names`].

pub mod discretize;
pub mod firstorder;
pub mod glcm;
pub mod gldm;
pub mod glrlm;
pub mod glszm;
pub mod matrix;
pub mod shape2d;
pub mod standardize;

use std::sync::{Arc, LazyLock};

use crate::data::{MaskedImage, RadiomicVector};
use crate::error::{Error, Result};

pub use discretize::{discretize, DiscretizedRoi};
pub use firstorder::firstorder_features;
pub use glcm::{glcm, glcm_features};
pub use gldm::{gldm, gldm_features};
pub use glrlm::{glrlm, glrlm_features};
pub use glszm::{glszm, glszm_features};
pub use matrix::{TextureKind, TextureMatrix};
pub use shape2d::shape2d_features;
pub use standardize::{apply_standardizer, fit_standardizer, StandardizerStats, STD_FLOOR};

/// Number of features in the full profile.
pub const N_FEATURES: usize = 97;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureClass {
    Shape2D,
    FirstOrder,
    Glcm,
    Glrlm,
    Glszm,
    Gldm,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 6] = [
        FeatureClass::Shape2D,
        FeatureClass::FirstOrder,
        FeatureClass::Glcm,
        FeatureClass::Glrlm,
        FeatureClass::Glszm,
        FeatureClass::Gldm,
    ];

    pub fn prefix(self) -> &'static str {
        match self {
            FeatureClass::Shape2D => "shape2D",
            FeatureClass::FirstOrder => "firstorder",
            FeatureClass::Glcm => "glcm",
            FeatureClass::Glrlm => "glrlm",
            FeatureClass::Glszm => "glszm",
            FeatureClass::Gldm => "gldm",
        }
    }

    pub fn members(self) -> &'static [&'static str] {
        match self {
            FeatureClass::Shape2D => &shape2d::SHAPE2D_FEATURES,
            FeatureClass::FirstOrder => &firstorder::FIRSTORDER_FEATURES,
            FeatureClass::Glcm => &glcm::GLCM_FEATURES,
            FeatureClass::Glrlm => &glrlm::GLRLM_FEATURES,
            FeatureClass::Glszm => &glszm::GLSZM_FEATURES,
            FeatureClass::Gldm => &gldm::GLDM_FEATURES,
        }
    }

    /// Class of a prefixed feature name such as `glcm.Contrast`.
    pub fn of(name: &str) -> Option<FeatureClass> {
        let prefix = name.split_once('.')?.0;
        FeatureClass::ALL.into_iter().find(|c| c.prefix() == prefix)
    }
}

static ALL_NAMES: LazyLock<Arc<[String]>> = LazyLock::new(|| {
    FeatureClass::ALL
        .iter()
        .flat_map(|c| c.members().iter().map(move |m| format!("{}.{m}", c.prefix())))
        .collect()
});

/// All 97 feature names in canonical order.
pub fn feature_names() -> Arc<[String]> {
    ALL_NAMES.clone()
}

#[derive(Debug, Clone)]
pub struct ExtractConfig {
    pub bin_width: f64,
    pub gldm_alpha: u32,
    pub gldm_distance: usize,
    disabled: Vec<usize>,
    names: Arc<[String]>,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            bin_width: 25.0,
            gldm_alpha: 0,
            gldm_distance: 1,
            disabled: Vec::new(),
            names: feature_names(),
        }
    }
}

impl ExtractConfig {
    pub fn with_bin_width(mut self, bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::invalid(format!("bin width must be positive, got {bin_width}")));
        }
        self.bin_width = bin_width;
        Ok(self)
    }

    /// Drops the named features from the output.
    pub fn disable<S: AsRef<str>>(mut self, names: &[S]) -> Result<Self> {
        let all = feature_names();
        for name in names {
            let name = name.as_ref();
            let i = all
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::invalid(format!("unknown feature {name:?}")))?;
            if !self.disabled.contains(&i) {
                self.disabled.push(i);
            }
        }
        self.disabled.sort_unstable();
        if self.disabled.len() == all.len() {
            return Err(Error::invalid("every feature is disabled"));
        }
        self.names = all
            .iter()
            .enumerate()
            .filter(|(i, _)| self.disabled.binary_search(i).is_err())
            .map(|(_, n)| n.clone())
            .collect();
        Ok(self)
    }

    /// Names emitted under this configuration, in canonical order.
    pub fn names(&self) -> Arc<[String]> {
        self.names.clone()
    }
}

/// Co-occurrence features for an ROI without any neighbouring pixel pair:
/// each pixel is paired with itself.
fn self_pair_glcm(d: &DiscretizedRoi, levels: &[u32]) -> Result<Vec<f64>> {
    let ng = d.n_levels as usize;
    let mut m = TextureMatrix::zeros(TextureKind::Glcm, ng, ng);
    for &(r, c) in &d.roi_coords {
        let l = d.levels[(r, c)];
        m.bump(l, l as usize);
    }
    glcm_features(&[m], levels)
}

/// Computes every feature of the configured profile for one image.
pub fn extract_all(img: &MaskedImage, cfg: &ExtractConfig) -> Result<RadiomicVector> {
    let d = discretize(img, cfg.bin_width)?;
    let levels = d.present_levels();
    let mut values = Vec::with_capacity(N_FEATURES);
    values.extend(shape2d_features(&img.mask, img.pixel_size_mm)?);
    values.extend(firstorder_features(img, &d)?);
    let co = match glcm_features(&glcm(&d), &levels) {
        Err(Error::DegenerateRoi(_)) => {
            log::warn!("{}: no neighbouring pixel pairs, co-occurrence uses self pairs", img.id);
            self_pair_glcm(&d, &levels)?
        }
        other => other?,
    };
    values.extend(co);
    values.extend(glrlm_features(&glrlm(&d), &levels)?);
    values.extend(glszm_features(&glszm(&d), &levels)?);
    values.extend(gldm_features(&gldm(&d, cfg.gldm_alpha, cfg.gldm_distance)?, &levels)?);
    debug_assert_eq!(values.len(), N_FEATURES);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{}: {}", img.id, ALL_NAMES[i])));
    }
    if !cfg.disabled.is_empty() {
        values = values
            .into_iter()
            .enumerate()
            .filter(|(i, _)| cfg.disabled.binary_search(i).is_err())
            .map(|(_, v)| v)
            .collect();
    }
    RadiomicVector::new(values, cfg.names())
}
