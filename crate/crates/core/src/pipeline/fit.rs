use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth_io::DatasetManifest;
use crate::error::{Error, Result};
use crate::metrics::{EvalCrop, DEFAULT_ABSREL_NORM_THRESHOLD};
use crate::scale_regression::{
    filter_by_absrel_norm, fit_per_image_scales, subsample_per_image, FitOptions, ScaleFit, ScaleSample,
    DEFAULT_PIXELS_PER_IMAGE,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub fit: FitOptions,
    /// Ground truth deeper than this is not sampled; defaults to the manifest cap. Meters.
    pub cap: Option<f64>,
    /// Defaults to the manifest crop.
    pub crop: Option<EvalCrop>,
    /// Random pixel budget per image; `None` keeps every valid pixel.
    pub pixels_per_image: Option<usize>,
    pub sample_seed: u64,
    /// AbsRel_norm threshold of the filtered fit; `None` disables it.
    pub filter_threshold: Option<f64>,
    /// Use the filtered samples for the transferred scale instead of all samples.
    pub transfer_filtered: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            fit: FitOptions::default(),
            cap: None,
            crop: None,
            pixels_per_image: Some(DEFAULT_PIXELS_PER_IMAGE),
            sample_seed: 0,
            filter_threshold: Some(DEFAULT_ABSREL_NORM_THRESHOLD),
            transfer_filtered: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsampling {
    pub pixels_per_image: Option<usize>,
    pub seed: u64,
    /// Valid pixel pairs before subsampling.
    pub n_valid_pixels: usize,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredFit {
    pub threshold: f64,
    pub retained_fraction: f64,
    /// Images dropped because their median prediction is not positive.
    pub dropped_images: Vec<usize>,
    pub fit: ScaleFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub split: String,
    pub cap: f64,
    pub crop: EvalCrop,
    pub sampling: Subsampling,
    /// Meters per unit of up-to-scale prediction, to be applied to the target.
    pub g_dscale: f64,
    pub transfer_filtered: bool,
    /// Fit over all samples, with per-image slopes.
    pub unfiltered: ScaleFit,
    pub filtered: Option<FilteredFit>,
}

/// Fit samples of a manifest split.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<ScaleSample>,
    pub n_valid_pixels: usize,
}

/// Collects `(prediction, ground truth)` samples: ground truth valid, not
/// above `cap` and inside `crop`, prediction valid and positive. Every
/// record must carry both maps.
pub fn collect_samples(manifest: &DatasetManifest, cap: f64, crop: EvalCrop) -> Result<SampleSet> {
    manifest.validate()?;
    if !(cap.is_finite() && cap > 0.0) {
        return Err(Error::validation(format!("depth cap {cap} must be positive")));
    }
    let per_image = (0..manifest.entries.len())
        .into_par_iter()
        .map(|i| {
            let gt = manifest.load_gt(i)?;
            let pred = manifest.load_prediction(i)?;
            let (gt, pred) = match (gt, pred) {
                (Some(g), Some(p)) => (g, p),
                (None, _) => return Err(Error::validation(format!("entry {i} has no ground truth"))),
                (_, None) => return Err(Error::validation(format!("entry {i} has no prediction"))),
            };
            if !pred.same_shape(&gt) {
                return Err(Error::validation(format!("entry {i}: prediction and ground truth differ in shape")));
            }
            let rect = crop.rect(gt.width(), gt.height());
            let mut out = Vec::new();
            for row in rect.row_start..rect.row_end {
                for col in rect.col_start..rect.col_end {
                    let k = gt.index(col, row);
                    let (g, p) = (gt.values()[k], pred.values()[k]);
                    if gt.is_valid(k) && g <= cap && pred.is_valid(k) && p > 0.0 {
                        out.push(ScaleSample::new(p, g, i));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<ScaleSample> = per_image.into_iter().flatten().collect();
    Ok(SampleSet {
        n_valid_pixels: samples.len(),
        samples,
    })
}

/// Fits G_dscale on a source split with predictions.
pub fn run_fit(manifest: &DatasetManifest, config: &FitConfig) -> Result<FitReport> {
    if config.transfer_filtered && config.filter_threshold.is_none() {
        return Err(Error::validation("transferring the filtered fit needs a filter threshold"));
    }
    if config.pixels_per_image == Some(0) {
        return Err(Error::validation("pixel budget per image must be positive"));
    }
    let cap = config.cap.unwrap_or(manifest.depth_cap);
    let crop = config.crop.unwrap_or(manifest.eval_crop);
    let set = collect_samples(manifest, cap, crop)?;
    if set.samples.is_empty() {
        return Err(Error::validation("no valid prediction/ground-truth pixel in the split"));
    }
    let samples = match config.pixels_per_image {
        Some(budget) => subsample_per_image(&set.samples, budget, config.sample_seed),
        None => set.samples,
    };
    let unfiltered = fit_per_image_scales(&samples, &config.fit)?;
    let filtered = config
        .filter_threshold
        .map(|threshold| -> Result<FilteredFit> {
            let outcome = filter_by_absrel_norm(&samples, threshold)?;
            if outcome.samples.is_empty() {
                return Err(Error::validation(format!("no sample passes the AbsRel_norm filter at {threshold}")));
            }
            Ok(FilteredFit {
                threshold,
                retained_fraction: outcome.retained_fraction,
                dropped_images: outcome.dropped_images,
                fit: fit_per_image_scales(&outcome.samples, &config.fit)?,
            })
        })
        .transpose()?;
    let g_dscale = match (&filtered, config.transfer_filtered) {
        (Some(f), true) => f.fit.slope,
        _ => unfiltered.slope,
    };
    Ok(FitReport {
        split: manifest.split_name.clone(),
        cap,
        crop,
        sampling: Subsampling {
            pixels_per_image: config.pixels_per_image,
            seed: config.sample_seed,
            n_valid_pixels: set.n_valid_pixels,
            n_samples: samples.len(),
        },
        g_dscale,
        transfer_filtered: config.transfer_filtered,
        unfiltered,
        filtered,
    })
}

/// Reads `g_dscale` from a fit report written by [`run_fit`].
pub fn read_fit_slope(path: &Path) -> Result<f64> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: FitReport = serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "fit report",
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(report.g_dscale)
}
