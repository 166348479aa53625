use serde::{Deserialize, Serialize};

use super::intrinsics::CameraIntrinsics;
use crate::error::Result;

/// How out-of-bounds RGB samples are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RgbPadMode {
    /// Mirror about the border pixel without repeating it.
    Reflection,
    Zero,
}

/// How out-of-bounds depth samples are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthPadMode {
    /// Padded depth pixels are invalid.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RgbFilter {
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthFilter {
    /// Plain nearest-neighbor sampling.
    Nearest,
    /// Bilinear inside a surface, nearest across depth discontinuities.
    ///
    /// The 2x2 neighborhood is blended only when all four samples are valid
    /// and `max / min <= depth_edge_ratio`; otherwise the nearest sample is used.
    EdgeAwareBilinear,
}

/// Ratio between the largest and smallest depth of a 2x2 neighborhood above
/// which it is treated as straddling an occlusion boundary.
pub const DEFAULT_DEPTH_EDGE_RATIO: f64 = 1.25;

/// Which geometric adjustment produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustMode {
    /// FOV-matched crop/pad then resize.
    Fov,
    /// Naive method A: center the source on the target frame and crop/pad, no resize.
    NaiveCenterCrop,
    /// Naive method B: resize width-wise to the target width, then crop/pad the height.
    NaiveResizeCrop,
}

impl AdjustMode {
    pub fn corrects_geometry(self) -> bool {
        matches!(self, AdjustMode::Fov)
    }
}

/// Crop/pad-then-resize plan mapping a source image onto an output frame.
///
/// The window is expressed in continuous source pixel coordinates and may
/// extend beyond the source bounds (padding). Output pixel `(j, i)` samples the
/// source at `(window_left + (j + 0.5) * sx, window_top + (i + 0.5) * sy)` with
/// `sx = window_width / output_width` (likewise for `sy`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovAdjustPlan {
    pub mode: AdjustMode,
    pub source_width: u32,
    pub source_height: u32,
    pub window_left: f64,
    pub window_top: f64,
    pub window_width: f64,
    pub window_height: f64,
    pub output_width: u32,
    pub output_height: u32,
    pub rgb_pad_mode: RgbPadMode,
    pub depth_pad_mode: DepthPadMode,
    pub resize_filter_rgb: RgbFilter,
    pub resize_filter_depth: DepthFilter,
    pub depth_edge_ratio: f64,
}

/// Plans the FOV adjustment of `source` imagery onto the `target` camera.
///
/// The crop window is `w_T * f_S / f_T` by `h_T * f_S / f_T` source pixels
/// (`f = focal_x` for both axes) and is placed so the source principal point
/// lands on the target principal point. When the target principal point is
/// centered the window is centered on the source principal point. Windows
/// larger than the source record negative crops, filled by padding.
pub fn plan_fov_adjustment(
    source: &CameraIntrinsics,
    target: &CameraIntrinsics,
) -> Result<FovAdjustPlan> {
    source.validate()?;
    target.validate()?;
    let ratio = source.focal_x / target.focal_x;
    Ok(FovAdjustPlan {
        mode: AdjustMode::Fov,
        window_left: source.center_x - target.center_x * ratio,
        window_top: source.center_y - target.center_y * ratio,
        window_width: f64::from(target.width) * ratio,
        window_height: f64::from(target.height) * ratio,
        ..FovAdjustPlan::base(source, target)
    })
}

/// Naive method A: pure centered crop (or pad) to the target size.
pub fn plan_naive_center_crop(
    source: &CameraIntrinsics,
    target: &CameraIntrinsics,
) -> Result<FovAdjustPlan> {
    source.validate()?;
    target.validate()?;
    let left = centered_offset(source.width, target.width);
    let top = centered_offset(source.height, target.height);
    Ok(FovAdjustPlan {
        mode: AdjustMode::NaiveCenterCrop,
        window_left: left as f64,
        window_top: top as f64,
        window_width: f64::from(target.width),
        window_height: f64::from(target.height),
        ..FovAdjustPlan::base(source, target)
    })
}

/// Naive method B: scale by `w_T / w_S`, then center-crop (or pad) the height.
pub fn plan_naive_resize_crop(
    source: &CameraIntrinsics,
    target: &CameraIntrinsics,
) -> Result<FovAdjustPlan> {
    source.validate()?;
    target.validate()?;
    let scale = f64::from(target.width) / f64::from(source.width);
    let window_height = f64::from(target.height) / scale;
    Ok(FovAdjustPlan {
        mode: AdjustMode::NaiveResizeCrop,
        window_left: 0.0,
        window_top: (f64::from(source.height) - window_height) / 2.0,
        window_width: f64::from(source.width),
        window_height,
        ..FovAdjustPlan::base(source, target)
    })
}

/// Plans `mode` from `source` to `target`.
pub fn plan_adjustment(
    mode: AdjustMode,
    source: &CameraIntrinsics,
    target: &CameraIntrinsics,
) -> Result<FovAdjustPlan> {
    match mode {
        AdjustMode::Fov => plan_fov_adjustment(source, target),
        AdjustMode::NaiveCenterCrop => plan_naive_center_crop(source, target),
        AdjustMode::NaiveResizeCrop => plan_naive_resize_crop(source, target),
    }
}

// Offset of a `dst`-sized window centered in `src`; odd remainders leave the
// extra pixel on the right/bottom.
fn centered_offset(src: u32, dst: u32) -> i64 {
    (i64::from(src) - i64::from(dst)) / 2
}

fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

impl FovAdjustPlan {
    fn base(source: &CameraIntrinsics, target: &CameraIntrinsics) -> Self {
        Self {
            mode: AdjustMode::Fov,
            source_width: source.width,
            source_height: source.height,
            window_left: 0.0,
            window_top: 0.0,
            window_width: f64::from(source.width),
            window_height: f64::from(source.height),
            output_width: target.width,
            output_height: target.height,
            rgb_pad_mode: RgbPadMode::Reflection,
            depth_pad_mode: DepthPadMode::Zero,
            resize_filter_rgb: RgbFilter::Bilinear,
            resize_filter_depth: DepthFilter::EdgeAwareBilinear,
            depth_edge_ratio: DEFAULT_DEPTH_EDGE_RATIO,
        }
    }

    pub fn with_depth_filter(mut self, filter: DepthFilter) -> Self {
        self.resize_filter_depth = filter;
        self
    }

    /// `w_{S->T}` rounded to the nearest even integer.
    pub fn source_crop_width(&self) -> i64 {
        round_even(self.window_width)
    }

    /// `h_{S->T}` rounded to the nearest even integer.
    pub fn source_crop_height(&self) -> i64 {
        round_even(self.window_height)
    }

    /// Integer crop on the left edge; negative values are padding.
    pub fn crop_left(&self) -> i64 {
        round_half_up(self.window_left + self.window_width / 2.0 - self.source_crop_width() as f64 / 2.0)
    }

    pub fn crop_top(&self) -> i64 {
        round_half_up(self.window_top + self.window_height / 2.0 - self.source_crop_height() as f64 / 2.0)
    }

    pub fn crop_right(&self) -> i64 {
        i64::from(self.source_width) - self.crop_left() - self.source_crop_width()
    }

    pub fn crop_bottom(&self) -> i64 {
        i64::from(self.source_height) - self.crop_top() - self.source_crop_height()
    }

    pub fn needs_padding(&self) -> bool {
        self.window_left < 0.0
            || self.window_top < 0.0
            || self.window_left + self.window_width > f64::from(self.source_width)
            || self.window_top + self.window_height > f64::from(self.source_height)
    }

    /// True when applying the plan reproduces the source pixel-for-pixel.
    pub fn is_identity(&self) -> bool {
        self.window_left == 0.0
            && self.window_top == 0.0
            && self.window_width == f64::from(self.source_width)
            && self.window_height == f64::from(self.source_height)
            && self.output_width == self.source_width
            && self.output_height == self.source_height
    }

    pub fn scale_x(&self) -> f64 {
        self.window_width / f64::from(self.output_width)
    }

    pub fn scale_y(&self) -> f64 {
        self.window_height / f64::from(self.output_height)
    }

    /// Source x coordinate sampled by continuous output x coordinate.
    pub fn map_x(&self, out_x: f64) -> f64 {
        self.window_left + out_x * self.scale_x()
    }

    pub fn map_y(&self, out_y: f64) -> f64 {
        self.window_top + out_y * self.scale_y()
    }

    /// Intrinsics the output image actually has, given the source camera.
    pub fn output_intrinsics(&self, source: &CameraIntrinsics) -> CameraIntrinsics {
        let sx = self.scale_x();
        let sy = self.scale_y();
        CameraIntrinsics {
            focal_x: source.focal_x / sx,
            focal_y: source.focal_y / sy,
            center_x: (source.center_x - self.window_left) / sx,
            center_y: (source.center_y - self.window_top) / sy,
            width: self.output_width,
            height: self.output_height,
        }
    }
}

fn round_even(x: f64) -> i64 {
    2 * round_half_up(x / 2.0)
}
