use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::depth_io::{DepthKind, DepthMap};
use crate::error::{Error, Result};
use crate::stats::median_in_place;

/// How an up-to-scale network output is emulated from ground truth.
///
/// `pred = gt / (G * (1 + j)) * (1 + n)` with `j ~ N(0, jitter_std)` drawn
/// once per image and `n ~ N(0, noise_std)` per pixel. A fraction of valid
/// pixels is then replaced by uniform values in `(0, 2 * median pred]`, so
/// outliers fall on either side of the trend equally often.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpToScaleParams {
    pub global_scale: f64,
    pub jitter_std: f64,
    pub outlier_fraction: f64,
    pub noise_std: f64,
}

impl Default for UpToScaleParams {
    fn default() -> Self {
        Self {
            global_scale: 100.0,
            jitter_std: 0.0,
            outlier_fraction: 0.0,
            noise_std: 0.0,
        }
    }
}

impl UpToScaleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.global_scale.is_finite() && self.global_scale > 0.0) {
            return Err(Error::validation(format!("scale G = {} must be positive", self.global_scale)));
        }
        if !(self.jitter_std.is_finite() && self.jitter_std >= 0.0) {
            return Err(Error::validation("jitter std must be non-negative"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::validation("noise std must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(Error::validation(format!(
                "outlier fraction {} must be in [0, 1]",
                self.outlier_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPrediction {
    pub prediction: DepthMap,
    /// Per-image jitter `j`; the image's true slope is `G * (1 + j)`.
    pub jitter: f64,
    pub outliers: usize,
}

// Keeps multiplicative factors away from zero and negative values.
const MIN_FACTOR: f64 = 0.05;

/// Emulates a dense up-to-scale prediction for one image.
///
/// Pixels without ground truth (sky) receive the largest predicted value, as
/// a network would output far depth there; the result is valid everywhere.
pub fn simulate_up_to_scale(gt: &DepthMap, params: &UpToScaleParams, seed: u64) -> Result<SimulatedPrediction> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = if params.jitter_std > 0.0 {
        Normal::new(0.0, params.jitter_std).expect("valid std").sample(&mut rng)
    } else {
        0.0
    };
    let image_scale = params.global_scale * (1.0 + jitter).max(MIN_FACTOR);
    let noise = (params.noise_std > 0.0).then(|| Normal::new(0.0, params.noise_std).expect("valid std"));
    let mut values: Vec<f64> = gt
        .values()
        .iter()
        .zip(gt.valid_mask())
        .map(|(&d, &ok)| {
            if !ok {
                return f64::NAN;
            }
            let n = noise.map_or(0.0, |dist| dist.sample(&mut rng));
            d / image_scale * (1.0 + n).max(MIN_FACTOR)
        })
        .collect();
    let valid: Vec<usize> = (0..values.len()).filter(|&i| gt.is_valid(i)).collect();
    let far = valid.iter().map(|&i| values[i]).fold(f64::NAN, f64::max);
    let far = if far.is_finite() { far } else { 1.0 };
    let n_out = (params.outlier_fraction * valid.len() as f64).round() as usize;
    if n_out > 0 {
        let mut clean: Vec<f64> = valid.iter().map(|&i| values[i]).collect();
        let top = 2.0 * median_in_place(&mut clean).expect("outliers need valid pixels");
        for k in sample(&mut rng, valid.len(), n_out) {
            // 1 - U[0, 1) lies in (0, 1].
            values[valid[k]] = top * (1.0 - rng.gen::<f64>());
        }
    }
    for v in values.iter_mut().filter(|v| v.is_nan()) {
        *v = far;
    }
    let prediction = DepthMap::from_values(gt.width(), gt.height(), values, DepthKind::UpToScale)?;
    Ok(SimulatedPrediction {
        prediction,
        jitter,
        outliers: n_out,
    })
}

/// Multiplies prediction pixels under `mask` by `factor`, emulating how
/// self-supervision misjudges objects moving with the camera.
pub fn add_motion_artifacts(prediction: &DepthMap, mask: &[bool], factor: f64) -> Result<DepthMap> {
    if mask.len() != prediction.len() {
        return Err(Error::validation("motion mask does not match the prediction size"));
    }
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::validation(format!("artifact factor {factor} must be positive")));
    }
    let mut out = prediction.clone();
    for (i, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        if out.is_valid(i) {
            out.set(i, prediction.values()[i] * factor);
        }
    }
    Ok(out)
}
