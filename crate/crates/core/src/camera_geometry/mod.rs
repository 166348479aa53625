//! Pinhole FOV math, source-to-target FOV adjustment plans and pixel
//! reprojection.
//!
//! Adjusting a source camera to a target camera keeps the target FOV by
//! cropping (or padding) a window of `w_T * f_S / f_T` source pixels and
//! resizing it to the target resolution. The same plan is applied to RGB
//! images, depth maps and label masks by [`crate::resample`].

mod intrinsics;
mod plan;
mod reproject;

pub use intrinsics::{compute_fov, focal_for_fov, Axis, CameraIntrinsics};
pub use plan::{
    plan_adjustment, plan_fov_adjustment, plan_naive_center_crop, plan_naive_resize_crop,
    AdjustMode, DepthFilter, DepthPadMode, FovAdjustPlan, RgbFilter, RgbPadMode,
    DEFAULT_DEPTH_EDGE_RATIO,
};
pub use reproject::{calibration_matrix, reproject_pixel, Reprojection};
