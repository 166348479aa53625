//! Robust fits of `ground_truth ~= slope * predicted`.
//!
//! Two Theil-Sen variants are provided. The through-origin estimator takes
//! the median of per-sample ratios `y / x` and enforces a zero intercept
//! exactly. The pairwise estimator takes the median of the slopes between
//! sample pairs, the classical formulation, which does not pin the intercept.
//! Both medians are exact (collect then select), so results do not depend on
//! evaluation order or thread count.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{mean_std, median_in_place};

pub const DEFAULT_MAX_PAIRS: u64 = 10_000_000;
/// Pairs whose predictions differ by less than this are skipped.
pub const DEGENERATE_PAIR_EPSILON: f64 = 1e-12;
pub const DEFAULT_PIXELS_PER_IMAGE: usize = 2_000;
const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSample {
    /// Up-to-scale prediction (unitless).
    pub predicted: f64,
    /// Ground-truth depth in meters.
    pub ground_truth: f64,
    pub image_index: usize,
}

impl ScaleSample {
    pub fn new(predicted: f64, ground_truth: f64, image_index: usize) -> Self {
        Self {
            predicted,
            ground_truth,
            image_index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Median of pairwise slopes `(y_j - y_i) / (x_j - x_i)`.
    TheilSenPairwise,
    /// Median of `y_i / x_i`; zero intercept.
    #[default]
    TheilSenThroughOrigin,
}

impl FitMethod {
    fn min_samples(self) -> usize {
        match self {
            FitMethod::TheilSenPairwise => 2,
            FitMethod::TheilSenThroughOrigin => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub method: FitMethod,
    /// Above this many pairs the pairwise method samples pairs uniformly.
    pub max_pairs: u64,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            method: FitMethod::default(),
            max_pairs: DEFAULT_MAX_PAIRS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    fn of(values: &[f64], bins: usize) -> Option<Self> {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || !hi.is_finite() {
            return None;
        }
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let width = (hi - lo) / bins as f64;
        let bin_edges = (0..=bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Some(Self { bin_edges, counts })
    }
}

/// Per-image slope statistics (I_dscale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerImageSlopes {
    pub mean: f64,
    /// Population standard deviation over images.
    pub std_dev: f64,
    /// `(image_index, slope)` in ascending image order.
    pub values: Vec<(usize, f64)>,
    /// Images with too few samples for the method.
    pub skipped_images: Vec<usize>,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFit {
    /// Meters per unit of prediction.
    pub slope: f64,
    pub method: FitMethod,
    pub pearson: Option<f64>,
    pub n_samples: usize,
    pub n_images: usize,
    /// Pairs whose slopes entered the median (pairwise method only).
    pub n_pairs: Option<u64>,
    /// Seed used when pairs were sampled.
    pub pair_sampling_seed: Option<u64>,
    pub per_image: Option<PerImageSlopes>,
}

fn check_samples(samples: &[ScaleSample]) -> Result<()> {
    if let Some(s) = samples.iter().find(|s| {
        !(s.predicted.is_finite() && s.predicted > 0.0 && s.ground_truth.is_finite() && s.ground_truth > 0.0)
    }) {
        return Err(Error::validation(format!(
            "sample ({}, {}) in image {} is not strictly positive",
            s.predicted, s.ground_truth, s.image_index
        )));
    }
    Ok(())
}

/// Slope over `samples` without Pearson or bookkeeping.
fn slope_only(samples: &[ScaleSample], opts: &FitOptions) -> Result<(f64, Option<u64>, bool)> {
    let mut slopes = match opts.method {
        FitMethod::TheilSenThroughOrigin => {
            samples.iter().map(|s| s.ground_truth / s.predicted).collect::<Vec<_>>()
        }
        FitMethod::TheilSenPairwise => pairwise_slopes(samples, opts),
    };
    let sampled = matches!(opts.method, FitMethod::TheilSenPairwise) && total_pairs(samples.len()) > opts.max_pairs;
    let n_pairs = matches!(opts.method, FitMethod::TheilSenPairwise).then_some(slopes.len() as u64);
    let slope = median_in_place(&mut slopes)
        .ok_or_else(|| Error::validation("every sample pair is degenerate; slope undefined"))?;
    Ok((slope, n_pairs, sampled))
}

fn total_pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

fn pair_slope(a: &ScaleSample, b: &ScaleSample) -> Option<f64> {
    let dx = b.predicted - a.predicted;
    (dx.abs() >= DEGENERATE_PAIR_EPSILON).then(|| (b.ground_truth - a.ground_truth) / dx)
}

fn pairwise_slopes(samples: &[ScaleSample], opts: &FitOptions) -> Vec<f64> {
    let n = samples.len();
    if total_pairs(n) <= opts.max_pairs {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).filter_map(move |j| pair_slope(&samples[i], &samples[j])))
            .collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut out = Vec::with_capacity(opts.max_pairs as usize);
        for _ in 0..opts.max_pairs {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            if let Some(s) = pair_slope(&samples[i], &samples[j]) {
                out.push(s);
            }
        }
        out
    }
}

/// Fits a single slope over every sample (G_dscale).
pub fn fit_global_scale(samples: &[ScaleSample], opts: &FitOptions) -> Result<ScaleFit> {
    if samples.len() < 2 {
        return Err(Error::validation(format!(
            "need at least 2 samples for a global fit, got {}",
            samples.len()
        )));
    }
    check_samples(samples)?;
    let (slope, n_pairs, sampled) = slope_only(samples, opts)?;
    if slope.is_nan() || slope <= 0.0 {
        return Err(Error::validation(format!("fitted slope {slope} is not positive")));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.predicted).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.ground_truth).collect();
    let mut images: Vec<usize> = samples.iter().map(|s| s.image_index).collect();
    images.sort_unstable();
    images.dedup();
    Ok(ScaleFit {
        slope,
        method: opts.method,
        pearson: crate::stats::pearson(&xs, &ys),
        n_samples: samples.len(),
        n_images: images.len(),
        n_pairs,
        pair_sampling_seed: sampled.then_some(opts.seed),
        per_image: None,
    })
}

/// Groups samples by image in ascending image order.
pub fn group_by_image(samples: &[ScaleSample]) -> BTreeMap<usize, Vec<ScaleSample>> {
    let mut groups: BTreeMap<usize, Vec<ScaleSample>> = BTreeMap::new();
    for s in samples {
        groups.entry(s.image_index).or_default().push(*s);
    }
    groups
}

/// Fits one slope per image (I_dscale) alongside the global fit.
pub fn fit_per_image_scales(samples: &[ScaleSample], opts: &FitOptions) -> Result<ScaleFit> {
    let groups = group_by_image(samples);
    if groups.is_empty() {
        return Err(Error::validation("no image groups to fit"));
    }
    check_samples(samples)?;
    let results: Vec<(usize, Option<f64>)> = groups
        .par_iter()
        .map(|(&image, group)| {
            if group.len() < opts.method.min_samples() {
                return Ok((image, None));
            }
            let per_image_opts = FitOptions {
                seed: opts.seed.wrapping_add(image as u64),
                ..*opts
            };
            match slope_only(group, &per_image_opts) {
                Ok((slope, _, _)) => Ok((image, Some(slope))),
                Err(Error::Validation(_)) => Ok((image, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::new();
    let mut skipped_images = Vec::new();
    for (image, slope) in results {
        match slope {
            Some(s) => values.push((image, s)),
            None => skipped_images.push(image),
        }
    }
    if values.is_empty() {
        return Err(Error::validation("no image had enough samples for a per-image fit"));
    }
    let slopes: Vec<f64> = values.iter().map(|&(_, s)| s).collect();
    let (mean, std_dev) = mean_std(&slopes).expect("non-empty");
    let histogram = Histogram::of(&slopes, HISTOGRAM_BINS).expect("finite slopes");
    let mut fit = if samples.len() >= 2 {
        fit_global_scale(samples, opts)?
    } else {
        let (slope, n_pairs, _) = slope_only(samples, opts)?;
        ScaleFit {
            slope,
            method: opts.method,
            pearson: None,
            n_samples: samples.len(),
            n_images: 1,
            n_pairs,
            pair_sampling_seed: None,
            per_image: None,
        }
    };
    fit.per_image = Some(PerImageSlopes {
        mean,
        std_dev,
        values,
        skipped_images,
        histogram,
    });
    Ok(fit)
}

/// Result of dropping samples with a large normalized relative error.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub samples: Vec<ScaleSample>,
    pub retained_fraction: f64,
    pub n_input: usize,
    /// Images dropped because their median prediction is not positive.
    pub dropped_images: Vec<usize>,
}

/// Keeps, per image, the samples with `|alpha * pred - gt| / gt <= threshold`
/// where `alpha = median(gt) / median(pred)` over that image.
pub fn filter_by_absrel_norm(samples: &[ScaleSample], threshold: f64) -> Result<FilterOutcome> {
    if samples.is_empty() {
        return Err(Error::validation("no samples to filter"));
    }
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::validation(format!("filter threshold {threshold} must be non-negative")));
    }
    let mut kept = Vec::with_capacity(samples.len());
    let mut dropped_images = Vec::new();
    for (image, group) in group_by_image(samples) {
        let preds: Vec<f64> = group.iter().map(|s| s.predicted).collect();
        let gts: Vec<f64> = group.iter().map(|s| s.ground_truth).collect();
        let alpha = match crate::metrics::normalization_factor(&preds, &gts) {
            Some(a) => a,
            None => {
                dropped_images.push(image);
                continue;
            }
        };
        kept.extend(
            group
                .into_iter()
                .filter(|s| (alpha * s.predicted - s.ground_truth).abs() / s.ground_truth <= threshold),
        );
    }
    Ok(FilterOutcome {
        retained_fraction: kept.len() as f64 / samples.len() as f64,
        n_input: samples.len(),
        samples: kept,
        dropped_images,
    })
}

/// Pearson correlation of `(predicted, ground_truth)`.
pub fn pearson(samples: &[ScaleSample]) -> Result<f64> {
    let xs: Vec<f64> = samples.iter().map(|s| s.predicted).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.ground_truth).collect();
    crate::stats::pearson(&xs, &ys)
        .ok_or_else(|| Error::validation("pearson needs at least 2 samples with non-zero variance"))
}

/// Subsamples up to `budget` samples per image with a seeded shuffle,
/// keeping image order and the relative order inside each image.
pub fn subsample_per_image(samples: &[ScaleSample], budget: usize, seed: u64) -> Vec<ScaleSample> {
    let mut out = Vec::new();
    for (image, group) in group_by_image(samples) {
        if group.len() <= budget {
            out.extend(group);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (image as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut picked = rand::seq::index::sample(&mut rng, group.len(), budget).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|k| group[k]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(slope: f64, n: usize, image: usize) -> Vec<ScaleSample> {
        (1..=n)
            .map(|k| {
                let x = k as f64 / n as f64;
                ScaleSample::new(x, slope * x, image)
            })
            .collect()
    }

    #[test]
    fn exact_line_recovered_by_both_methods() {
        let s = line(84.4, 50, 0);
        for method in [FitMethod::TheilSenThroughOrigin, FitMethod::TheilSenPairwise] {
            let fit = fit_global_scale(&s, &FitOptions { method, ..Default::default() }).unwrap();
            assert!((fit.slope - 84.4).abs() < 1e-9, "{method:?} {}", fit.slope);
            assert!((fit.pearson.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_sample_rejected() {
        assert!(fit_global_scale(&line(2.0, 1, 0), &FitOptions::default()).is_err());
    }

    #[test]
    fn minority_outliers_do_not_move_the_ratio_median() {
        let mut s = line(100.0, 100, 0);
        for (k, sample) in s.iter_mut().enumerate() {
            if k % 10 < 3 {
                sample.ground_truth = 5.0 * sample.predicted;
            }
        }
        let fit = fit_global_scale(&s, &FitOptions::default()).unwrap();
        assert_eq!(fit.slope, 100.0);
    }

    #[test]
    fn all_degenerate_pairs_error() {
        let s = vec![ScaleSample::new(0.5, 1.0, 0), ScaleSample::new(0.5, 2.0, 0)];
        let opts = FitOptions { method: FitMethod::TheilSenPairwise, ..Default::default() };
        assert!(fit_global_scale(&s, &opts).is_err());
    }

    #[test]
    fn pair_sampling_is_seeded() {
        let s: Vec<_> = (1..=300).map(|k| ScaleSample::new(k as f64, 3.0 * k as f64 + (k % 7) as f64, 0)).collect();
        let opts = FitOptions { method: FitMethod::TheilSenPairwise, max_pairs: 1_000, seed: 42 };
        let a = fit_global_scale(&s, &opts).unwrap();
        let b = fit_global_scale(&s, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pair_sampling_seed, Some(42));
        assert_eq!(a.n_pairs, Some(1_000));
    }

    #[test]
    fn per_image_statistics() {
        let mut s = line(50.0, 10, 0);
        s.extend(line(50.0, 10, 1));
        let fit = fit_per_image_scales(&s, &FitOptions::default()).unwrap();
        let per = fit.per_image.unwrap();
        assert!((per.mean - 50.0).abs() < 1e-12 && per.std_dev < 1e-12);

        let mut s = line(80.0, 10, 0);
        s.extend(line(90.0, 10, 1));
        s.extend(line(100.0, 10, 2));
        let per = fit_per_image_scales(&s, &FitOptions::default()).unwrap().per_image.unwrap();
        assert!((per.mean - 90.0).abs() < 1e-9);
        assert_eq!(per.values.len(), 3);
    }

    #[test]
    fn single_sample_image_skipped_for_pairwise() {
        let mut s = line(50.0, 10, 0);
        s.push(ScaleSample::new(0.3, 15.0, 7));
        let opts = FitOptions { method: FitMethod::TheilSenPairwise, ..Default::default() };
        let per = fit_per_image_scales(&s, &opts).unwrap().per_image.unwrap();
        assert_eq!(per.skipped_images, vec![7]);
        let per = fit_per_image_scales(&s, &FitOptions::default()).unwrap().per_image.unwrap();
        assert!(per.skipped_images.is_empty());
    }

    #[test]
    fn filter_keeps_linear_images() {
        let s = line(30.0, 20, 0);
        let out = filter_by_absrel_norm(&s, 0.15).unwrap();
        assert_eq!(out.retained_fraction, 1.0);
        let all = filter_by_absrel_norm(&s, f64::INFINITY).unwrap();
        assert_eq!(all.samples, s);
    }

    #[test]
    fn filter_drops_pixels_at_twice_the_scale() {
        // gt {5, 10, 20, 40}; preds for 10 and 20 on slope 10, for 5 and 40 at twice the scale.
        // median(gt) = 15, median(pred) = 1.5, alpha = 10.
        let s = vec![
            ScaleSample::new(1.0, 10.0, 0),
            ScaleSample::new(2.0, 20.0, 0),
            ScaleSample::new(1.0, 5.0, 0),
            ScaleSample::new(8.0, 40.0, 0),
        ];
        let out = filter_by_absrel_norm(&s, 0.15).unwrap();
        assert_eq!(out.retained_fraction, 0.5);
        assert_eq!(out.samples, s[..2].to_vec());
    }

    #[test]
    fn pearson_cases() {
        let pos: Vec<_> = (1..5).map(|k| ScaleSample::new(k as f64, 2.0 * k as f64, 0)).collect();
        assert!((pearson(&pos).unwrap() - 1.0).abs() < 1e-12);
        let xs = [1.0, 2.0, 3.0, 4.0];
        let hand: Vec<_> = xs.iter().zip([1.0, 3.0, 2.0, 4.0]).map(|(&x, y)| ScaleSample::new(x, y, 0)).collect();
        assert!((pearson(&hand).unwrap() - 0.8).abs() < 1e-12);
        let flat: Vec<_> = xs.iter().map(|&x| ScaleSample::new(x, 1.0, 0)).collect();
        assert!(pearson(&flat).is_err());
    }

    #[test]
    fn negative_slope_pearson_is_minus_one() {
        let s: Vec<_> = (1..5).map(|k| ScaleSample::new(k as f64, 10.0 - 2.0 * k as f64, 0)).collect();
        assert!((pearson(&s).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn subsampling_respects_budget() {
        let s = line(10.0, 100, 3);
        let sub = subsample_per_image(&s, 10, 1);
        assert_eq!(sub.len(), 10);
        assert_eq!(sub, subsample_per_image(&s, 10, 1));
        assert_eq!(subsample_per_image(&s, 500, 1), s);
    }
}
