//! Local-motion masks for moving vehicles.
//!
//! A supervised and a self-supervised depth map of the same frame are each
//! divided by the median depth over their valid road pixels. A vehicle
//! instance is flagged as moving when at least `fraction_r` percent of its
//! pixels (valid in both maps) differ by more than `cutoff_c` after that
//! normalization.

use serde::{Deserialize, Serialize};

use crate::depth_io::{DepthKind, DepthMap, InstanceClass, InstanceMask};
use crate::error::{Error, Result};
use crate::stats::median_in_place;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionMaskConfig {
    /// Normalized absolute depth difference a pixel must exceed.
    pub cutoff_c: f64,
    /// Percentage of a vehicle's pixels that must exceed the cutoff.
    pub fraction_r: f64,
    pub min_road_pixels: usize,
}

impl Default for MotionMaskConfig {
    fn default() -> Self {
        Self {
            cutoff_c: 1.5,
            fraction_r: 10.0,
            min_road_pixels: 100,
        }
    }
}

impl MotionMaskConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_c.is_finite() && self.cutoff_c > 0.0) {
            return Err(Error::validation(format!("cutoff C = {} must be positive", self.cutoff_c)));
        }
        if !(self.fraction_r > 0.0 && self.fraction_r <= 100.0) {
            return Err(Error::validation(format!("fraction R = {}% must be in (0, 100]", self.fraction_r)));
        }
        Ok(())
    }
}

/// Why an image could not be processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    InsufficientRoad { found: usize, required: usize },
}

/// Divides every valid depth by the median depth of valid road pixels.
pub fn road_median_normalize(
    depth: &DepthMap,
    road_mask: &[bool],
    min_road_pixels: usize,
) -> Result<std::result::Result<DepthMap, SkipReason>> {
    if road_mask.len() != depth.len() {
        return Err(Error::validation(format!(
            "road mask has {} pixels, depth map {}",
            road_mask.len(),
            depth.len()
        )));
    }
    let mut road: Vec<f64> = (0..depth.len())
        .filter(|&i| road_mask[i] && depth.is_valid(i))
        .map(|i| depth.values()[i])
        .collect();
    let required = min_road_pixels.max(1);
    if road.len() < required {
        return Ok(Err(SkipReason::InsufficientRoad {
            found: road.len(),
            required,
        }));
    }
    let median = median_in_place(&mut road).expect("non-empty");
    let kind = depth.kind();
    Ok(Ok(depth.scaled(1.0 / median, kind)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Moving,
    Static,
    /// No pixel of the instance is valid in both maps.
    Undetermined,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Moving => "moving",
            Verdict::Static => "static",
            Verdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceVerdict {
    pub instance_id: u16,
    pub class: InstanceClass,
    pub total_pixels: usize,
    /// Pixels valid in both maps; the denominator of the R% rule.
    pub valid_pixels: usize,
    pub exceeding_pixels: usize,
    pub exceeding_percent: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionMask {
    pub width: u32,
    pub height: u32,
    /// True where a pixel belongs to a flagged vehicle.
    pub masked: Vec<bool>,
    pub verdicts: Vec<InstanceVerdict>,
}

/// Applies the local-motion rule to road-normalized depth maps.
///
/// Non-vehicle instances are reported as static and never flagged.
pub fn flag_moving_instances(
    sup_scaled: &DepthMap,
    unsup_scaled: &DepthMap,
    instances: &InstanceMask,
    config: &MotionMaskConfig,
) -> Result<MotionMask> {
    config.validate()?;
    if !sup_scaled.same_shape(unsup_scaled)
        || sup_scaled.width() != instances.width()
        || sup_scaled.height() != instances.height()
    {
        return Err(Error::validation("depth maps and instance mask must share a shape"));
    }
    let labels = instances.labels();
    let ids = instances.instance_ids();
    let mut verdicts = Vec::with_capacity(ids.len());
    let mut masked = vec![false; labels.len()];
    for id in ids {
        let class = instances.class_of(id).expect("non-background id");
        let pixels: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == id).collect();
        let both: Vec<usize> = pixels
            .iter()
            .copied()
            .filter(|&i| sup_scaled.is_valid(i) && unsup_scaled.is_valid(i))
            .collect();
        let exceeding = both
            .iter()
            .filter(|&&i| (sup_scaled.values()[i] - unsup_scaled.values()[i]).abs() > config.cutoff_c)
            .count();
        let percent = (!both.is_empty()).then(|| 100.0 * exceeding as f64 / both.len() as f64);
        let verdict = if both.is_empty() {
            Verdict::Undetermined
        } else if class == InstanceClass::Vehicle
            && (exceeding as f64) * 100.0 >= config.fraction_r * both.len() as f64
        {
            Verdict::Moving
        } else {
            Verdict::Static
        };
        if verdict == Verdict::Moving {
            for &i in &pixels {
                masked[i] = true;
            }
        }
        verdicts.push(InstanceVerdict {
            instance_id: id,
            class,
            total_pixels: pixels.len(),
            valid_pixels: both.len(),
            exceeding_pixels: exceeding,
            exceeding_percent: percent,
            verdict,
        });
    }
    Ok(MotionMask {
        width: instances.width(),
        height: instances.height(),
        masked,
        verdicts,
    })
}

/// Outcome for one frame: a mask, or the reason it was skipped.
pub type FrameOutcome = std::result::Result<MotionMask, SkipReason>;

/// Full rule for one frame: road normalization of both maps, then flagging.
pub fn motion_mask_for_frame(
    supervised: &DepthMap,
    self_supervised: &DepthMap,
    road_mask: &[bool],
    instances: &InstanceMask,
    config: &MotionMaskConfig,
) -> Result<FrameOutcome> {
    config.validate()?;
    let sup = match road_median_normalize(supervised, road_mask, config.min_road_pixels)? {
        Ok(m) => m,
        Err(reason) => return Ok(Err(reason)),
    };
    let unsup = match road_median_normalize(self_supervised, road_mask, config.min_road_pixels)? {
        Ok(m) => m,
        Err(reason) => return Ok(Err(reason)),
    };
    Ok(Ok(flag_moving_instances(
        &sup.with_kind(DepthKind::UpToScale),
        &unsup.with_kind(DepthKind::UpToScale),
        instances,
        config,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn depth(values: Vec<f64>) -> DepthMap {
        let n = values.len() as u32;
        DepthMap::from_values(n, 1, values, DepthKind::UpToScale).unwrap()
    }

    #[test]
    fn constant_road_normalizes_to_one() {
        let d = depth(vec![5.0; 6]);
        let out = road_median_normalize(&d, &[true; 6], 1).unwrap().unwrap();
        assert!(out.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn non_road_pixel_divided_by_road_median() {
        let d = depth(vec![2.0, 4.0, 6.0, 8.0]);
        let out = road_median_normalize(&d, &[true, true, true, false], 3).unwrap().unwrap();
        assert_eq!(out.values()[3], 2.0);
    }

    #[test]
    fn empty_road_skipped() {
        let d = depth(vec![2.0, 4.0]);
        let r = road_median_normalize(&d, &[false, false], 100).unwrap();
        assert_eq!(r, Err(SkipReason::InsufficientRoad { found: 0, required: 100 }));
    }

    fn one_vehicle(n: usize) -> InstanceMask {
        InstanceMask::new(n as u32, 1, vec![1; n], BTreeMap::from([(1, InstanceClass::Vehicle)])).unwrap()
    }

    #[test]
    fn identical_maps_flag_nothing() {
        let d = depth(vec![1.0; 10]);
        let m = flag_moving_instances(&d, &d, &one_vehicle(10), &MotionMaskConfig::default()).unwrap();
        assert!(m.masked.iter().all(|&x| !x));
        assert_eq!(m.verdicts[0].verdict, Verdict::Static);
    }

    #[test]
    fn twice_is_static_three_times_is_moving() {
        let sup = depth(vec![1.0; 10]);
        let cfg = MotionMaskConfig::default();
        let m = flag_moving_instances(&sup, &depth(vec![2.0; 10]), &one_vehicle(10), &cfg).unwrap();
        assert_eq!(m.verdicts[0].verdict, Verdict::Static);
        let m = flag_moving_instances(&sup, &depth(vec![3.0; 10]), &one_vehicle(10), &cfg).unwrap();
        assert_eq!(m.verdicts[0].verdict, Verdict::Moving);
        assert!(m.masked.iter().all(|&x| x));
    }

    #[test]
    fn exactly_r_percent_is_flagged() {
        let sup = depth(vec![1.0; 10]);
        let mut u = vec![1.0; 10];
        u[4] = 3.0;
        let m = flag_moving_instances(&sup, &depth(u), &one_vehicle(10), &MotionMaskConfig::default()).unwrap();
        assert_eq!(m.verdicts[0].exceeding_pixels, 1);
        assert_eq!(m.verdicts[0].verdict, Verdict::Moving);
    }

    #[test]
    fn non_vehicles_never_flagged_and_invalid_instances_undetermined() {
        let labels = vec![1, 1, 2, 2];
        let inst = InstanceMask::new(
            4,
            1,
            labels,
            BTreeMap::from([(1, InstanceClass::Other), (2, InstanceClass::Vehicle)]),
        )
        .unwrap();
        let sup = depth(vec![1.0, 1.0, 0.0, 0.0]);
        let unsup = depth(vec![9.0, 9.0, 9.0, 9.0]);
        let m = flag_moving_instances(&sup, &unsup, &inst, &MotionMaskConfig::default()).unwrap();
        assert_eq!(m.verdicts[0].verdict, Verdict::Static);
        assert_eq!(m.verdicts[1].verdict, Verdict::Undetermined);
        assert!(m.masked.iter().all(|&x| !x));
    }

    #[test]
    fn bad_config_rejected() {
        for cfg in [
            MotionMaskConfig { cutoff_c: 0.0, ..Default::default() },
            MotionMaskConfig { fraction_r: 0.0, ..Default::default() },
            MotionMaskConfig { fraction_r: 101.0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }
}
