//! Depth accuracy metrics over a test split.
//!
//! A pixel takes part when its ground truth is valid, not above the depth
//! cap, inside the evaluation crop, and the prediction is finite.
//! Predictions are clamped to `[min_depth, cap]` before any ratio or log.
//! Error metrics are averaged per image first and then over images (the
//! default) or pooled over all pixels.

mod crop;

use serde::{Deserialize, Serialize};

pub use crop::{garg_crop, EvalCrop, PixelRect};

use crate::depth_io::DepthMap;
use crate::error::{Error, Result};
use crate::stats::{mean_std, median_in_place};

/// Floor applied to predictions before ratios and logs, in meters.
pub const DEFAULT_MIN_DEPTH: f64 = 1e-3;
pub const DEFAULT_ABSREL_NORM_THRESHOLD: f64 = 0.15;
const DELTA_BASE: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Mean over images of per-image means.
    PerImage,
    /// Single mean over every pixel of the split.
    Pooled,
}

impl Averaging {
    pub fn as_str(self) -> &'static str {
        match self {
            Averaging::PerImage => "per_image",
            Averaging::Pooled => "pooled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    /// Ground truth deeper than this is ignored; predictions are clamped to it. Meters.
    pub cap: f64,
    pub crop: EvalCrop,
    pub min_depth: f64,
    pub averaging: Averaging,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            cap: 80.0,
            crop: EvalCrop::None,
            min_depth: DEFAULT_MIN_DEPTH,
            averaging: Averaging::PerImage,
        }
    }
}

impl EvalOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.cap.is_finite() && self.cap > 0.0) {
            return Err(Error::validation(format!("depth cap {} must be positive", self.cap)));
        }
        if !(self.min_depth > 0.0 && self.min_depth < self.cap) {
            return Err(Error::validation(format!(
                "prediction floor {} must lie in (0, cap)",
                self.min_depth
            )));
        }
        Ok(())
    }
}

/// Prediction/ground-truth pair for one image.
#[derive(Debug, Clone, Copy)]
pub struct ImagePair<'a> {
    pub prediction: &'a DepthMap,
    pub ground_truth: &'a DepthMap,
}

impl<'a> ImagePair<'a> {
    pub fn new(prediction: &'a DepthMap, ground_truth: &'a DepthMap) -> Self {
        Self {
            prediction,
            ground_truth,
        }
    }
}

/// Evaluated pixels of one image: raw predictions and ground truth.
pub fn evaluated_pixels(pair: ImagePair<'_>, opts: &EvalOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let (pred, gt) = (pair.prediction, pair.ground_truth);
    if !pred.same_shape(gt) {
        return Err(Error::validation(format!(
            "prediction {}x{} and ground truth {}x{} differ in shape",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let rect = opts.crop.rect(gt.width(), gt.height());
    let mut p = Vec::new();
    let mut g = Vec::new();
    for row in rect.row_start..rect.row_end {
        for col in rect.col_start..rect.col_end {
            let i = gt.index(col, row);
            let gv = gt.values()[i];
            let pv = pred.values()[i];
            if gt.is_valid(i) && gv <= opts.cap && pv.is_finite() {
                p.push(pv);
                g.push(gv);
            }
        }
    }
    Ok((p, g))
}

// Per-image sums of each error term.
#[derive(Debug, Clone, Copy, Default)]
struct ErrorSums {
    n: usize,
    abs_rel: f64,
    sq_rel: f64,
    sq_err: f64,
    sq_log: f64,
    delta: [usize; 3],
}

impl ErrorSums {
    fn from_pixels(pred: &[f64], gt: &[f64], opts: &EvalOptions) -> Self {
        let mut s = ErrorSums {
            n: pred.len(),
            ..Default::default()
        };
        let thresholds = [DELTA_BASE, DELTA_BASE.powi(2), DELTA_BASE.powi(3)];
        for (&p, &g) in pred.iter().zip(gt) {
            let p = p.clamp(opts.min_depth, opts.cap);
            let diff = p - g;
            s.abs_rel += diff.abs() / g;
            s.sq_rel += diff * diff / g;
            s.sq_err += diff * diff;
            s.sq_log += (p.ln() - g.ln()).powi(2);
            let ratio = (p / g).max(g / p);
            for (k, &t) in thresholds.iter().enumerate() {
                if ratio < t {
                    s.delta[k] += 1;
                }
            }
        }
        s
    }

    fn add(&mut self, other: &ErrorSums) {
        self.n += other.n;
        self.abs_rel += other.abs_rel;
        self.sq_rel += other.sq_rel;
        self.sq_err += other.sq_err;
        self.sq_log += other.sq_log;
        for k in 0..3 {
            self.delta[k] += other.delta[k];
        }
    }

    // [abs_rel, sq_rel, rmse, rmse_log, d1, d2, d3]
    fn means(&self) -> [f64; 7] {
        let n = self.n as f64;
        [
            self.abs_rel / n,
            self.sq_rel / n,
            (self.sq_err / n).sqrt(),
            (self.sq_log / n).sqrt(),
            self.delta[0] as f64 / n,
            self.delta[1] as f64 / n,
            self.delta[2] as f64 / n,
        ]
    }
}

/// Per-image results kept for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub index: usize,
    pub n_pixels: usize,
    pub abs_rel: f64,
    pub abs_rel_norm: Option<f64>,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta: [f64; 3],
    pub scale_ratio: f64,
    /// `median(gt) / median(pred)` used for the normalized error.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub averaging: Averaging,
    pub cap: f64,
    pub crop: EvalCrop,
    pub min_depth: f64,
    pub abs_rel: f64,
    pub abs_rel_norm: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    pub delta_3: f64,
    pub scale_ratio_mean: f64,
    pub scale_ratio_std: f64,
    pub n_images: usize,
    pub n_valid_pixels: usize,
    /// Images without a single evaluated pixel.
    pub n_images_without_pixels: usize,
    /// Images left out of `abs_rel_norm` because their median prediction is not positive.
    pub n_images_without_norm: usize,
}

pub const CSV_HEADER: [&str; 9] = [
    "abs_rel",
    "abs_rel_norm",
    "sq_rel",
    "rmse",
    "rmse_log",
    "delta_1.25",
    "delta_1.25^2",
    "delta_1.25^3",
    "scale_ratio",
];

impl MetricsReport {
    /// One row in the column order of the usual depth benchmark table, with
    /// `scale_ratio` as `mean+-std`.
    pub fn csv_row(&self) -> [String; 9] {
        [
            format!("{:.3}", self.abs_rel),
            format!("{:.3}", self.abs_rel_norm),
            format!("{:.3}", self.sq_rel),
            format!("{:.3}", self.rmse),
            format!("{:.3}", self.rmse_log),
            format!("{:.3}", self.delta_1),
            format!("{:.3}", self.delta_2),
            format!("{:.3}", self.delta_3),
            format!("{:.2}+-{:.2}", self.scale_ratio_mean, self.scale_ratio_std),
        ]
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W, label: Option<&str>) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = CSV_HEADER.to_vec();
        let mut row: Vec<String> = self.csv_row().to_vec();
        if let Some(label) = label {
            header.insert(0, "split");
            row.insert(0, label.to_string());
        }
        w.write_record(&header)?;
        w.write_record(&row)?;
        w.flush()?;
        Ok(())
    }
}

/// Per-image evaluation of one pair; `None` when no pixel is evaluated.
pub fn evaluate_image(index: usize, pair: ImagePair<'_>, opts: &EvalOptions) -> Result<Option<ImageMetrics>> {
    Ok(image_contribution(index, pair, opts)?.metrics)
}

/// What one image adds to a split report, under both averaging conventions.
///
/// Contributions can be computed independently (and in parallel) and then
/// combined with [`aggregate`] in a fixed order.
#[derive(Debug, Clone)]
pub struct ImageContribution {
    pub metrics: Option<ImageMetrics>,
    sums: ErrorSums,
    norm_sums: Option<ErrorSums>,
}

pub fn image_contribution(index: usize, pair: ImagePair<'_>, opts: &EvalOptions) -> Result<ImageContribution> {
    opts.validate()?;
    let (pred, gt) = evaluated_pixels(pair, opts)?;
    if pred.is_empty() {
        return Ok(ImageContribution {
            metrics: None,
            sums: ErrorSums::default(),
            norm_sums: None,
        });
    }
    let sums = ErrorSums::from_pixels(&pred, &gt, opts);
    let m = sums.means();
    let alpha = normalization_factor(&pred, &gt);
    let norm_sums = alpha.map(|a| {
        let scaled: Vec<f64> = pred.iter().map(|p| a * p).collect();
        ErrorSums::from_pixels(&scaled, &gt, opts)
    });
    let mut ratios: Vec<f64> = pred
        .iter()
        .zip(&gt)
        .map(|(p, g)| p.clamp(opts.min_depth, opts.cap) / g)
        .collect();
    let scale_ratio = median_in_place(&mut ratios).expect("non-empty pixel set");
    Ok(ImageContribution {
        metrics: Some(ImageMetrics {
            index,
            n_pixels: pred.len(),
            abs_rel: m[0],
            abs_rel_norm: norm_sums.map(|n| n.means()[0]),
            sq_rel: m[1],
            rmse: m[2],
            rmse_log: m[3],
            delta: [m[4], m[5], m[6]],
            scale_ratio,
            alpha,
        }),
        sums,
        norm_sums,
    })
}

/// `median(gt) / median(pred)`, or `None` when the median prediction is not positive.
pub fn normalization_factor(pred: &[f64], gt: &[f64]) -> Option<f64> {
    let mp = median_in_place(&mut pred.to_vec())?;
    let mg = median_in_place(&mut gt.to_vec())?;
    (mp > 0.0 && mp.is_finite()).then(|| mg / mp)
}

/// Evaluates a split and returns every metric.
pub fn evaluate(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<MetricsReport> {
    Ok(evaluate_detailed(pairs, opts)?.0)
}

/// Like [`evaluate`], also returning the per-image results in input order.
pub fn evaluate_detailed(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<(MetricsReport, Vec<ImageMetrics>)> {
    let contributions = pairs
        .iter()
        .enumerate()
        .map(|(i, &pair)| image_contribution(i, pair, opts))
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&contributions, opts)?;
    Ok((report, contributions.into_iter().filter_map(|c| c.metrics).collect()))
}

/// Combines per-image contributions, in slice order, into a split report.
pub fn aggregate(contributions: &[ImageContribution], opts: &EvalOptions) -> Result<MetricsReport> {
    opts.validate()?;
    let images: Vec<&ImageMetrics> = contributions.iter().filter_map(|c| c.metrics.as_ref()).collect();
    if images.is_empty() {
        return Err(Error::validation("no image has evaluated pixels"));
    }
    let without_pixels = contributions.len() - images.len();
    let normed: Vec<f64> = images.iter().filter_map(|m| m.abs_rel_norm).collect();
    let n_images_without_norm = images.len() - normed.len();
    let ratios: Vec<f64> = images.iter().map(|m| m.scale_ratio).collect();
    let (sr_mean, sr_std) = mean_std(&ratios).expect("non-empty");

    let (errors, abs_rel_norm) = match opts.averaging {
        Averaging::PerImage => {
            let mut acc = [0.0; 7];
            for m in &images {
                let vals = [m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta[0], m.delta[1], m.delta[2]];
                for (a, v) in acc.iter_mut().zip(vals) {
                    *a += v;
                }
            }
            let n = images.len() as f64;
            let norm = mean_std(&normed).map_or(f64::NAN, |(m, _)| m);
            (acc.map(|a| a / n), norm)
        }
        Averaging::Pooled => {
            let mut pooled = ErrorSums::default();
            let mut pooled_norm = ErrorSums::default();
            for c in contributions {
                pooled.add(&c.sums);
                if let Some(n) = &c.norm_sums {
                    pooled_norm.add(n);
                }
            }
            let norm = if pooled_norm.n > 0 { pooled_norm.means()[0] } else { f64::NAN };
            (pooled.means(), norm)
        }
    };

    Ok(MetricsReport {
        averaging: opts.averaging,
        cap: opts.cap,
        crop: opts.crop,
        min_depth: opts.min_depth,
        abs_rel: errors[0],
        abs_rel_norm,
        sq_rel: errors[1],
        rmse: errors[2],
        rmse_log: errors[3],
        delta_1: errors[4],
        delta_2: errors[5],
        delta_3: errors[6],
        scale_ratio_mean: sr_mean,
        scale_ratio_std: sr_std,
        n_images: images.len(),
        n_valid_pixels: images.iter().map(|m| m.n_pixels).sum(),
        n_images_without_pixels: without_pixels,
        n_images_without_norm,
    })
}

/// Mean over images of the per-image absolute relative error.
pub fn abs_rel(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<f64> {
    Ok(evaluate(pairs, opts)?.abs_rel)
}

/// Absolute relative error after per-image median normalization of the predictions.
pub fn abs_rel_norm(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<f64> {
    let r = evaluate(pairs, opts)?;
    if r.abs_rel_norm.is_nan() {
        return Err(Error::validation("no image has a positive median prediction"));
    }
    Ok(r.abs_rel_norm)
}

/// Mean and population standard deviation over images of `median(pred / gt)`.
pub fn scale_ratio(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<(f64, f64)> {
    let r = evaluate(pairs, opts)?;
    Ok((r.scale_ratio_mean, r.scale_ratio_std))
}

/// Fractions of pixels with `max(pred/gt, gt/pred) < 1.25^k`, k = 1, 2, 3.
pub fn threshold_accuracy(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<[f64; 3]> {
    let r = evaluate(pairs, opts)?;
    Ok([r.delta_1, r.delta_2, r.delta_3])
}

pub fn sq_rel(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<f64> {
    Ok(evaluate(pairs, opts)?.sq_rel)
}

pub fn rmse(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<f64> {
    Ok(evaluate(pairs, opts)?.rmse)
}

pub fn rmse_log(pairs: &[ImagePair<'_>], opts: &EvalOptions) -> Result<f64> {
    Ok(evaluate(pairs, opts)?.rmse_log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth_io::DepthKind;

    fn map(values: &[f64]) -> DepthMap {
        DepthMap::from_values(values.len() as u32, 1, values.to_vec(), DepthKind::GroundTruth).unwrap()
    }

    fn eval1(pred: &[f64], gt: &[f64]) -> MetricsReport {
        let (p, g) = (map(pred), map(gt));
        evaluate(&[ImagePair::new(&p, &g)], &EvalOptions::default()).unwrap()
    }

    #[test]
    fn identity_prediction_is_perfect() {
        let r = eval1(&[1.0, 5.0, 30.0], &[1.0, 5.0, 30.0]);
        assert_eq!(r.abs_rel, 0.0);
        assert_eq!(r.rmse, 0.0);
        assert_eq!(r.rmse_log, 0.0);
        assert_eq!([r.delta_1, r.delta_2, r.delta_3], [1.0; 3]);
        assert_eq!((r.scale_ratio_mean, r.scale_ratio_std), (1.0, 0.0));
    }

    #[test]
    fn hand_abs_rel() {
        let r = eval1(&[1.0, 2.0], &[2.0, 4.0]);
        assert_eq!(r.abs_rel, 0.5);
        // alpha = 3 / 1.5 = 2 rescales exactly onto the ground truth.
        assert_eq!(r.abs_rel_norm, 0.0);
    }

    #[test]
    fn hand_abs_rel_norm_three_pixels() {
        let r = eval1(&[1.0, 2.0, 2.0], &[2.0, 4.0, 8.0]);
        assert!((r.abs_rel_norm - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn hand_single_pixel_errors() {
        let r = eval1(&[2.0], &[4.0]);
        assert_eq!(r.sq_rel, 1.0);
        assert_eq!(r.rmse, 2.0);
        assert!((r.rmse_log - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn per_image_average_ignores_pixel_counts() {
        let (p1, g1) = (map(&[1.1]), map(&[1.0]));
        let (p2, g2) = (map(&[1.3; 5]), map(&[1.0; 5]));
        let pairs = [ImagePair::new(&p1, &g1), ImagePair::new(&p2, &g2)];
        let r = evaluate(&pairs, &EvalOptions::default()).unwrap();
        assert!((r.abs_rel - 0.2).abs() < 1e-12);
        let pooled = evaluate(&pairs, &EvalOptions { averaging: Averaging::Pooled, ..Default::default() }).unwrap();
        assert!((pooled.abs_rel - (0.1 + 5.0 * 0.3) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds_are_strict() {
        let r = eval1(&[1.3, 1.3], &[1.0, 1.0]);
        assert_eq!([r.delta_1, r.delta_2], [0.0, 1.0]);
        let r = eval1(&[1.0, 2.0], &[1.0, 1.0]);
        assert_eq!([r.delta_1, r.delta_2, r.delta_3], [0.5, 0.5, 0.5]);
    }

    #[test]
    fn scale_ratio_statistics() {
        let (p1, g1) = (map(&[0.8, 1.6]), map(&[1.0, 2.0]));
        let (p2, g2) = (map(&[1.2]), map(&[1.0]));
        let (m, s) = scale_ratio(&[ImagePair::new(&p1, &g1), ImagePair::new(&p2, &g2)], &EvalOptions::default()).unwrap();
        assert!((m - 1.0).abs() < 1e-12 && (s - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cap_and_invalid_pixels_excluded() {
        let gt = DepthMap::from_values(3, 1, vec![10.0, 90.0, 0.0], DepthKind::GroundTruth).unwrap();
        let pred = map(&[10.0, 1.0, 5.0]);
        let r = evaluate(&[ImagePair::new(&pred, &gt)], &EvalOptions::default()).unwrap();
        assert_eq!(r.n_valid_pixels, 1);
        assert_eq!(r.abs_rel, 0.0);
    }

    #[test]
    fn prediction_clamped_to_cap() {
        let r = eval1(&[500.0], &[40.0]);
        assert_eq!(r.abs_rel, 1.0);
    }

    #[test]
    fn images_without_pixels_counted() {
        let gt0 = DepthMap::from_values(1, 1, vec![0.0], DepthKind::GroundTruth).unwrap();
        let (p, g) = (map(&[1.0]), map(&[1.0]));
        let r = evaluate(&[ImagePair::new(&p, &gt0), ImagePair::new(&p, &g)], &EvalOptions::default()).unwrap();
        assert_eq!((r.n_images, r.n_images_without_pixels), (1, 1));
        assert!(evaluate(&[ImagePair::new(&p, &gt0)], &EvalOptions::default()).is_err());
    }

    #[test]
    fn zero_median_prediction_excluded_from_norm() {
        let gt = map(&[1.0, 2.0, 3.0]);
        let pred = DepthMap::from_values(3, 1, vec![0.0, 0.0, 1.0], DepthKind::UpToScale).unwrap();
        let (p, g) = (map(&[1.0]), map(&[2.0]));
        let r = evaluate(&[ImagePair::new(&pred, &gt), ImagePair::new(&p, &g)], &EvalOptions::default()).unwrap();
        assert_eq!(r.n_images_without_norm, 1);
        assert_eq!(r.abs_rel_norm, 0.0);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (p, g) = (map(&[1.0, 2.0]), map(&[1.0]));
        assert!(evaluate(&[ImagePair::new(&p, &g)], &EvalOptions::default()).is_err());
    }

    #[test]
    fn csv_has_header_and_row() {
        let r = eval1(&[1.0], &[1.0]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf, Some("demo")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("split,abs_rel,abs_rel_norm,sq_rel,rmse,rmse_log,"));
        assert!(text.contains("demo,0.000,0.000"));
    }
}
