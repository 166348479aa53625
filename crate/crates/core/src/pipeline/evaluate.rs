use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depth_io::DatasetManifest;
use crate::error::{Error, Result};
use crate::metrics::{
    aggregate, image_contribution, Averaging, EvalCrop, EvalOptions, ImageMetrics, ImagePair, MetricsReport,
    CSV_HEADER, DEFAULT_MIN_DEPTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    #[default]
    PerImage,
    Pooled,
    Both,
}

impl Convention {
    fn averagings(self) -> &'static [Averaging] {
        match self {
            Convention::PerImage => &[Averaging::PerImage],
            Convention::Pooled => &[Averaging::Pooled],
            Convention::Both => &[Averaging::PerImage, Averaging::Pooled],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluateConfig {
    /// Defaults to the manifest cap. Meters.
    pub cap: Option<f64>,
    /// Defaults to the manifest crop.
    pub crop: Option<EvalCrop>,
    pub convention: Convention,
    /// Prediction floor in meters.
    pub min_depth: f64,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        Self {
            cap: None,
            crop: None,
            convention: Convention::PerImage,
            min_depth: DEFAULT_MIN_DEPTH,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub split: String,
    pub uncorrected_geometry: bool,
    pub per_image: Option<MetricsReport>,
    pub pooled: Option<MetricsReport>,
    /// Images with at least one evaluated pixel, in manifest order.
    pub images: Vec<ImageMetrics>,
}

impl EvaluationReport {
    /// The per-image report when present, else the pooled one.
    pub fn primary(&self) -> &MetricsReport {
        self.per_image
            .as_ref()
            .or(self.pooled.as_ref())
            .expect("at least one convention is evaluated")
    }

    /// One row per convention, prefixed with the split name and convention.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["split", "convention"];
        header.extend(CSV_HEADER);
        w.write_record(&header)?;
        for report in [&self.per_image, &self.pooled].into_iter().flatten() {
            let mut row = vec![self.split.clone(), report.averaging.as_str().to_string()];
            row.extend(report.csv_row());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores the predictions of a split against its ground truth.
pub fn run_evaluate(manifest: &DatasetManifest, config: &EvaluateConfig) -> Result<EvaluationReport> {
    manifest.validate()?;
    let base = EvalOptions {
        cap: config.cap.unwrap_or(manifest.depth_cap),
        crop: config.crop.unwrap_or(manifest.eval_crop),
        min_depth: config.min_depth,
        averaging: Averaging::PerImage,
    };
    base.validate()?;
    let contributions = (0..manifest.entries.len())
        .into_par_iter()
        .map(|i| {
            let gt = manifest
                .load_gt(i)?
                .ok_or_else(|| Error::validation(format!("entry {i} has no ground truth")))?;
            let pred = manifest
                .load_prediction(i)?
                .ok_or_else(|| Error::validation(format!("entry {i} has no prediction")))?;
            image_contribution(i, ImagePair::new(&pred, &gt), &base)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = EvaluationReport {
        split: manifest.split_name.clone(),
        uncorrected_geometry: manifest.uncorrected_geometry,
        per_image: None,
        pooled: None,
        images: contributions.iter().filter_map(|c| c.metrics.clone()).collect(),
    };
    for &averaging in config.convention.averagings() {
        let r = aggregate(&contributions, &EvalOptions { averaging, ..base })?;
        match averaging {
            Averaging::PerImage => report.per_image = Some(r),
            Averaging::Pooled => report.pooled = Some(r),
        }
    }
    Ok(report)
}
